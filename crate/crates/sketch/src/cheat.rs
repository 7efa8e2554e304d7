use serde::{Deserialize, Serialize};

/// Commands that abandon a proof without completing it.
pub const CHEAT_KEYWORDS: &[&str] = &["sorry", "oops"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheatReport {
    pub clean: bool,
    /// Offending keyword and its byte offset.
    pub offending: Vec<(String, usize)>,
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

/// Scans raw proof text for cheating keywords used as standalone words
/// outside comments, string literals and cartouches.
///
/// Works on text that does not parse; unterminated comments and literals
/// extend to the end of the input.
pub fn check_no_cheat(source: &str) -> CheatReport {
    let mut offending = Vec::new();
    let mut chars = source.char_indices().peekable();
    let mut comment_depth = 0usize;
    let mut cartouche_depth = 0usize;
    let mut in_string = false;
    let mut prev: Option<char> = None;

    while let Some((i, c)) = chars.next() {
        let next = chars.peek().map(|&(_, n)| n);
        if comment_depth > 0 {
            if c == '(' && next == Some('*') {
                comment_depth += 1;
                chars.next();
            } else if c == '*' && next == Some(')') {
                comment_depth -= 1;
                chars.next();
            }
            prev = None;
            continue;
        }
        if in_string {
            if c == '\\' && matches!(next, Some('"') | Some('\\')) {
                chars.next();
            } else if c == '"' {
                in_string = false;
            }
            prev = None;
            continue;
        }
        if cartouche_depth > 0 {
            if c == '‹' {
                cartouche_depth += 1;
            } else if c == '›' {
                cartouche_depth -= 1;
            } else if source[i..].starts_with("\\<open>") {
                cartouche_depth += 1;
            } else if source[i..].starts_with("\\<close>") {
                cartouche_depth -= 1;
            }
            prev = None;
            continue;
        }
        match c {
            '(' if next == Some('*') => {
                comment_depth = 1;
                chars.next();
                prev = None;
                continue;
            }
            '"' => {
                in_string = true;
                prev = None;
                continue;
            }
            '‹' => {
                cartouche_depth = 1;
                prev = None;
                continue;
            }
            '\\' if source[i..].starts_with("\\<open>") => {
                cartouche_depth = 1;
                prev = None;
                continue;
            }
            _ => {}
        }
        if is_ident_char(c) && !prev.is_some_and(is_ident_char) {
            let word_len = source[i..]
                .find(|ch: char| !is_ident_char(ch))
                .unwrap_or(source.len() - i);
            let word = &source[i..i + word_len];
            if CHEAT_KEYWORDS.contains(&word) {
                offending.push((word.to_string(), i));
            }
        }
        prev = Some(c);
    }
    CheatReport {
        clean: offending.is_empty(),
        offending,
    }
}
