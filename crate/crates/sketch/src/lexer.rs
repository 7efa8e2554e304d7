use crate::error::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum TokKind<'a> {
    /// Identifier, number, or `?name` abbreviation.
    Word(&'a str),
    /// Interior of a double-quoted string.
    Str(&'a str),
    /// A `‹...›` or `\<open>...\<close>` cartouche, delimiters included.
    Cartouche(&'a str),
    /// Interior of a `(* ... *)` comment.
    Comment(&'a str),
    Colon,
    DoubleColon,
    Minus,
    LParen,
    RParen,
    /// `<...>` or `<…>`.
    GapMarker,
    AtpOpen,
    AtpClose,
    /// Any other punctuation; only legal inside parenthesised groups.
    Sym(char),
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Token<'a> {
    pub kind: TokKind<'a>,
    pub start: usize,
    pub end: usize,
}

const OPEN_ESC: &str = "\\<open>";
const CLOSE_ESC: &str = "\\<close>";

fn is_word_start(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '?' || c == '\''
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\'' || c == '.'
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token<'_>>, ParseError> {
    let mut lexer = Lexer { src, pos: 0 };
    let mut out = Vec::new();
    while let Some(tok) = lexer.next_token()? {
        out.push(tok);
    }
    Ok(out)
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek_char(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn tok(&self, kind: TokKind<'a>, start: usize) -> Option<Token<'a>> {
        Some(Token {
            kind,
            start,
            end: self.pos,
        })
    }

    fn next_token(&mut self) -> Result<Option<Token<'a>>, ParseError> {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
        let start = self.pos;
        let Some(c) = self.peek_char() else {
            return Ok(None);
        };
        let rest = self.rest();

        if rest.starts_with("(*") {
            return self.comment(start).map(Some);
        }
        if c == '"' {
            return self.string(start).map(Some);
        }
        if c == '‹' || rest.starts_with(OPEN_ESC) {
            return self.cartouche(start).map(Some);
        }
        for (lit, kind) in [
            ("<...>", TokKind::GapMarker),
            ("<…>", TokKind::GapMarker),
            ("<ATP>", TokKind::AtpOpen),
            ("</ATP>", TokKind::AtpClose),
            ("::", TokKind::DoubleColon),
        ] {
            if rest.starts_with(lit) {
                self.pos += lit.len();
                return Ok(self.tok(kind, start));
            }
        }
        if is_word_start(c) {
            return Ok(self.word(start));
        }
        self.pos += c.len_utf8();
        let kind = match c {
            ':' => TokKind::Colon,
            '-' => TokKind::Minus,
            '(' => TokKind::LParen,
            ')' => TokKind::RParen,
            c if c.is_ascii_punctuation() || "⟨⟩⇒⟹∧∨¬≤≥≠∈∀∃".contains(c) => {
                TokKind::Sym(c)
            }
            _ => {
                return Err(ParseError::new(
                    start,
                    format!("unexpected character {c:?}"),
                ));
            }
        };
        Ok(self.tok(kind, start))
    }

    fn word(&mut self, start: usize) -> Option<Token<'a>> {
        let mut chars = self.rest().char_indices();
        let (_, first) = chars.next()?;
        let mut len = first.len_utf8();
        for (i, c) in chars {
            if !is_word_char(c) {
                break;
            }
            len = i + c.len_utf8();
        }
        self.pos += len;
        // Fact selections such as `numerals(1)` or `foo(2-3)` glued to a name.
        let rest = self.rest();
        if let Some(inner) = rest.strip_prefix('(') {
            let digits = inner
                .find(|c: char| !(c.is_ascii_digit() || c == '-'))
                .unwrap_or(inner.len());
            if digits > 0
                && inner[..digits].starts_with(|c: char| c.is_ascii_digit())
                && inner[digits..].starts_with(')')
            {
                self.pos += digits + 2;
            }
        }
        self.tok(TokKind::Word(&self.src[start..self.pos]), start)
    }

    fn comment(&mut self, start: usize) -> Result<Token<'a>, ParseError> {
        let bytes = self.src.as_bytes();
        let mut depth = 0usize;
        let mut i = start;
        while i + 1 < bytes.len() {
            if bytes[i] == b'(' && bytes[i + 1] == b'*' {
                depth += 1;
                i += 2;
            } else if bytes[i] == b'*' && bytes[i + 1] == b')' {
                depth -= 1;
                i += 2;
                if depth == 0 {
                    self.pos = i;
                    let interior = &self.src[start + 2..i - 2];
                    return Ok(Token {
                        kind: TokKind::Comment(interior),
                        start,
                        end: i,
                    });
                }
            } else {
                i += 1;
            }
        }
        Err(ParseError::new(start, "unterminated comment"))
    }

    fn string(&mut self, start: usize) -> Result<Token<'a>, ParseError> {
        let bytes = self.src.as_bytes();
        let mut i = start + 1;
        while i < bytes.len() {
            match bytes[i] {
                b'\\' if matches!(bytes.get(i + 1), Some(b'"') | Some(b'\\')) => i += 2,
                b'"' => {
                    self.pos = i + 1;
                    return Ok(Token {
                        kind: TokKind::Str(&self.src[start + 1..i]),
                        start,
                        end: i + 1,
                    });
                }
                _ => i += 1,
            }
        }
        Err(ParseError::new(start, "unterminated string"))
    }

    fn cartouche(&mut self, start: usize) -> Result<Token<'a>, ParseError> {
        let mut depth = 0usize;
        let mut i = start;
        while i < self.src.len() {
            let rest = &self.src[i..];
            if rest.starts_with('‹') {
                depth += 1;
                i += '‹'.len_utf8();
            } else if rest.starts_with(OPEN_ESC) {
                depth += 1;
                i += OPEN_ESC.len();
            } else if rest.starts_with('›') || rest.starts_with(CLOSE_ESC) {
                i += if rest.starts_with('›') {
                    '›'.len_utf8()
                } else {
                    CLOSE_ESC.len()
                };
                depth -= 1;
                if depth == 0 {
                    self.pos = i;
                    return Ok(Token {
                        kind: TokKind::Cartouche(&self.src[start..i]),
                        start,
                        end: i,
                    });
                }
            } else {
                i += rest.chars().next().map_or(1, char::len_utf8);
            }
        }
        Err(ParseError::new(start, "unterminated cartouche"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokKind<'_>> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn words_strings_and_markers() {
        assert_eq!(
            kinds(r#"have c1: "x \<le> 1" using c0 <...>"#),
            vec![
                TokKind::Word("have"),
                TokKind::Word("c1"),
                TokKind::Colon,
                TokKind::Str(r"x \<le> 1"),
                TokKind::Word("using"),
                TokKind::Word("c0"),
                TokKind::GapMarker,
            ]
        );
    }

    #[test]
    fn fact_selection_suffix_is_part_of_the_name() {
        assert_eq!(
            kinds("ab_semigroup_add_class.add_ac(1) numerals(1) (z3)"),
            vec![
                TokKind::Word("ab_semigroup_add_class.add_ac(1)"),
                TokKind::Word("numerals(1)"),
                TokKind::LParen,
                TokKind::Word("z3"),
                TokKind::RParen,
            ]
        );
    }

    #[test]
    fn nested_comments() {
        assert_eq!(
            kinds("(* a (* b *) c *) qed"),
            vec![TokKind::Comment(" a (* b *) c "), TokKind::Word("qed")]
        );
    }

    #[test]
    fn unterminated_string_reports_its_start() {
        let err = tokenize("have \"abc").unwrap_err();
        assert_eq!(err.offset, 5);
    }

    #[test]
    fn cartouches() {
        assert_eq!(
            kinds("‹x = 42› \\<open>y\\<close>"),
            vec![
                TokKind::Cartouche("‹x = 42›"),
                TokKind::Cartouche("\\<open>y\\<close>"),
            ]
        );
    }
}
