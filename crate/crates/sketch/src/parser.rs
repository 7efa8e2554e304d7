//! Recursive-descent parser for proof sketches.
//!
//! Accepted shape, informally:
//!
//! ```text
//! file     := comment* [header] comment* [proof | justification] comment*
//! header   := (theorem|lemma) [name] [:] ( string
//!             | [fixes vars :: sort (and ...)*] [assumes [l:] string (and ...)*] shows string )
//! proof    := proof [- | (method) | word] item* [case name item* (next case name item*)*] qed
//! item     := comment | [then|also|finally] step
//! step     := have [l:] string facts just
//!           | show (string | ?abbrev) facts just
//!           | obtain vars where [l:] string facts just
//!           | assume [l:] string
//! facts    := (using fact+ | unfolding fact+)*
//! just     := by method [method] | proof | sledgehammer | <...> | <ATP> [just </ATP>] | sorry
//! ```

use crate::ast::*;
use crate::error::ParseError;
use crate::lexer::{tokenize, TokKind, Token};

const MAX_DEPTH: usize = 128;

const KEYWORDS: &[&str] = &[
    "have",
    "show",
    "obtain",
    "assume",
    "then",
    "also",
    "finally",
    "hence",
    "thus",
    "proof",
    "qed",
    "next",
    "case",
    "by",
    "using",
    "unfolding",
    "where",
    "and",
    "fixes",
    "assumes",
    "shows",
    "theorem",
    "lemma",
    "sledgehammer",
    "ATP",
    "sorry",
    "oops",
];

fn is_keyword(w: &str) -> bool {
    KEYWORDS.contains(&w)
}

/// Parses a sketch. The theorem header is optional so that bare
/// `proof ... qed` completions can be parsed on their own.
pub fn parse_sketch(src: &str) -> Result<SketchAst, ParseError> {
    let toks = tokenize(src)?;
    let mut p = Parser {
        src,
        toks,
        pos: 0,
        spans: SpanMap::new(),
    };
    let (header, body) = p.file()?;
    Ok(SketchAst {
        header,
        body,
        spans: p.spans,
    })
}

/// Like [`parse_sketch`] but accepts arbitrary bytes; invalid UTF-8 is a
/// parse error at the first bad byte.
pub fn parse_sketch_bytes(bytes: &[u8]) -> Result<SketchAst, ParseError> {
    match std::str::from_utf8(bytes) {
        Ok(src) => parse_sketch(src),
        Err(e) => Err(ParseError::new(e.valid_up_to(), "invalid UTF-8")),
    }
}

/// Parses a standalone justification such as `by (auto simp: field_simps)`.
pub fn parse_justification(src: &str) -> Result<Justification, ParseError> {
    let toks = tokenize(src)?;
    let mut p = Parser {
        src,
        toks,
        pos: 0,
        spans: SpanMap::new(),
    };
    let j = p.justification(&Vec::new(), 0)?;
    if let Some(tok) = p.peek() {
        return Err(ParseError::new(
            tok.start,
            "trailing input after justification",
        ));
    }
    Ok(j)
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<Token<'a>>,
    pos: usize,
    spans: SpanMap,
}

fn child(prefix: &NodePath, step: PathStep) -> NodePath {
    let mut p = prefix.clone();
    p.push(step);
    p
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<Token<'a>> {
        self.toks.get(self.pos).copied()
    }

    fn peek_kind(&self) -> Option<TokKind<'a>> {
        self.peek().map(|t| t.kind)
    }

    fn peek_at(&self, n: usize) -> Option<TokKind<'a>> {
        self.toks.get(self.pos + n).map(|t| t.kind)
    }

    fn peek_word(&self) -> Option<&'a str> {
        match self.peek_kind() {
            Some(TokKind::Word(w)) => Some(w),
            _ => None,
        }
    }

    fn at_word(&self, w: &str) -> bool {
        self.peek_word() == Some(w)
    }

    fn bump(&mut self) -> Token<'a> {
        let t = self.toks[self.pos];
        self.pos += 1;
        t
    }

    fn here(&self) -> usize {
        self.peek().map_or(self.src.len(), |t| t.start)
    }

    fn last_end(&self) -> usize {
        self.pos.checked_sub(1).map_or(0, |i| self.toks[i].end)
    }

    fn error(&self, message: &str, expected: &[&str]) -> ParseError {
        let message = match self.peek_kind() {
            None => format!("{message}, found end of input"),
            Some(TokKind::Comment(_)) => format!("{message}, found a comment inside a step"),
            Some(_) => message.to_string(),
        };
        ParseError::expecting(self.here(), message, expected)
    }

    fn expect_word(&mut self, w: &str) -> Result<Token<'a>, ParseError> {
        if self.at_word(w) {
            Ok(self.bump())
        } else {
            Err(self.error(&format!("expected `{w}`"), &[w]))
        }
    }

    fn expect_string(&mut self) -> Result<&'a str, ParseError> {
        match self.peek_kind() {
            Some(TokKind::Str(s)) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.error("expected a quoted proposition", &["\"...\""])),
        }
    }

    /// `name:` where name is not a keyword.
    fn label(&mut self) -> Option<String> {
        match (self.peek_kind(), self.peek_at(1)) {
            (Some(TokKind::Word(w)), Some(TokKind::Colon)) if !is_keyword(w) => {
                self.bump();
                self.bump();
                Some(w.to_string())
            }
            _ => None,
        }
    }

    fn comments_into(&mut self, nodes: &mut Vec<ProofNode>, prefix: &NodePath) {
        while let Some(TokKind::Comment(text)) = self.peek_kind() {
            let tok = self.bump();
            self.record(
                child(prefix, PathStep::Child(nodes.len())),
                tok.start,
                tok.end,
            );
            nodes.push(ProofNode::Comment(text.to_string()));
        }
    }

    fn record(&mut self, path: NodePath, start: usize, end: usize) {
        self.spans.insert(path, Span { start, end });
    }

    fn file(&mut self) -> Result<(Option<TheoremHeader>, Vec<ProofNode>), ParseError> {
        let root = NodePath::new();
        let mut body = Vec::new();
        self.comments_into(&mut body, &root);
        let header = if self.at_word("theorem") || self.at_word("lemma") {
            Some(self.header()?)
        } else {
            None
        };
        self.comments_into(&mut body, &root);
        if let Some(tok) = self.peek() {
            let path = child(&root, PathStep::Child(body.len()));
            if self.at_word("proof") {
                let block = self.block(&path, 0)?;
                self.record(path, tok.start, self.last_end());
                body.push(ProofNode::Block(block));
            } else if self.at_justification_start() {
                let j = self.justification(&path, 0)?;
                self.record(path, tok.start, self.last_end());
                body.push(ProofNode::Terminal(j));
            } else {
                return Err(self.error(
                    "expected a proof",
                    &["theorem", "lemma", "proof", "by", "sledgehammer"],
                ));
            }
            self.comments_into(&mut body, &root);
        }
        if self.peek().is_some() {
            return Err(self.error("expected end of input", &[]));
        }
        Ok((header, body))
    }

    fn header(&mut self) -> Result<TheoremHeader, ParseError> {
        let keyword = self.bump();
        let TokKind::Word(keyword) = keyword.kind else {
            unreachable!()
        };
        let mut name = None;
        if let Some(w) = self.peek_word() {
            if !is_keyword(w) {
                self.bump();
                name = Some(w.to_string());
            }
        }
        if self.peek_kind() == Some(TokKind::Colon) {
            self.bump();
        }
        let mut fixes: Vec<FixedVar> = Vec::new();
        let mut assumes = Vec::new();

        let shows_tok;
        let shows = if let Some(TokKind::Str(s)) = self.peek_kind() {
            shows_tok = self.bump();
            s
        } else {
            if self.at_word("fixes") {
                self.bump();
                loop {
                    let mut vars = Vec::new();
                    while let Some(w) = self.peek_word() {
                        if is_keyword(w) {
                            break;
                        }
                        let tok = self.bump();
                        if fixes.iter().any(|f| f.name == w) || vars.iter().any(|(v, _)| *v == w) {
                            return Err(ParseError::new(
                                tok.start,
                                format!("variable `{w}` is fixed twice"),
                            ));
                        }
                        vars.push((w, tok.start));
                    }
                    if vars.is_empty() {
                        return Err(self.error("expected a variable name", &["<name>"]));
                    }
                    let sort = if self.peek_kind() == Some(TokKind::DoubleColon) {
                        self.bump();
                        match self.peek_kind() {
                            Some(TokKind::Word(w)) if !is_keyword(w) => {
                                self.bump();
                                Some(w.to_string())
                            }
                            Some(TokKind::Str(s)) => {
                                self.bump();
                                Some(format!("\"{s}\""))
                            }
                            _ => return Err(self.error("expected a sort", &["<sort>"])),
                        }
                    } else {
                        None
                    };
                    fixes.extend(vars.into_iter().map(|(v, _)| FixedVar {
                        name: v.to_string(),
                        sort: sort.clone(),
                    }));
                    if self.at_word("and") {
                        self.bump();
                    } else {
                        break;
                    }
                }
            }
            if self.at_word("assumes") {
                self.bump();
                loop {
                    let label = self.label();
                    let proposition = self.expect_string()?.to_string();
                    assumes.push(Assumption { label, proposition });
                    if self.at_word("and") {
                        self.bump();
                    } else {
                        break;
                    }
                }
            }
            if !self.at_word("shows") {
                return Err(self.error("expected `shows`", &["fixes", "assumes", "shows"]));
            }
            self.bump();
            let s = self.expect_string()?;
            shows_tok = self.toks[self.pos - 1];
            s
        };
        if shows.trim().is_empty() {
            return Err(ParseError::new(
                shows_tok.start,
                "empty `shows` proposition",
            ));
        }
        Ok(TheoremHeader {
            keyword: keyword.to_string(),
            name,
            fixes,
            assumes,
            shows: shows.to_string(),
        })
    }

    /// Raw text of a balanced parenthesised group starting at the current
    /// `(` token.
    fn paren_group(&mut self) -> Result<&'a str, ParseError> {
        let open = self.bump();
        debug_assert_eq!(open.kind, TokKind::LParen);
        let mut depth = 1usize;
        while let Some(tok) = self.peek() {
            self.bump();
            match tok.kind {
                TokKind::LParen => depth += 1,
                TokKind::RParen => {
                    depth -= 1;
                    if depth == 0 {
                        return Ok(&self.src[open.start..tok.end]);
                    }
                }
                _ => {}
            }
        }
        Err(ParseError::expecting(
            open.start,
            "unbalanced parenthesis",
            &[")"],
        ))
    }

    /// `proof [method] items [cases] qed`.
    ///
    /// `prefix` is the path prefix for its children: the owning node's path
    /// for the outermost block, that path plus `Nested` for a nested one.
    fn block(&mut self, prefix: &NodePath, depth: usize) -> Result<ProofBlock, ParseError> {
        if depth > MAX_DEPTH {
            return Err(ParseError::new(
                self.here(),
                "proof blocks nested too deeply",
            ));
        }
        self.expect_word("proof")?;
        let method = match self.peek_kind() {
            Some(TokKind::Minus) => {
                self.bump();
                Some("-".to_string())
            }
            Some(TokKind::LParen) => Some(self.paren_group()?.to_string()),
            Some(TokKind::Word(w)) if !is_keyword(w) => {
                self.bump();
                Some(w.to_string())
            }
            _ => None,
        };
        let children = self.items(prefix, depth)?;
        let mut cases = Vec::new();
        if self.at_word("case") {
            // Comments between `next` and `case` open the following case.
            let mut pending = Vec::new();
            loop {
                self.expect_word("case")?;
                let name = self.case_name()?;
                let case_prefix = child(prefix, PathStep::Case(cases.len()));
                let mut case_children = std::mem::take(&mut pending);
                self.items_into(&mut case_children, &case_prefix, depth)?;
                cases.push(CaseBlock {
                    name,
                    children: case_children,
                });
                if !self.at_word("next") {
                    break;
                }
                self.bump();
                let next_prefix = child(prefix, PathStep::Case(cases.len()));
                self.comments_into(&mut pending, &next_prefix);
                if !self.at_word("case") {
                    return Err(self.error("expected `case` after `next`", &["case"]));
                }
            }
        }
        if !self.at_word("qed") {
            let expected: &[&str] = if cases.is_empty() {
                &["have", "show", "obtain", "assume", "case", "qed"]
            } else {
                &["have", "show", "obtain", "assume", "next", "qed"]
            };
            return Err(self.error("expected `qed`", expected));
        }
        self.bump();
        Ok(ProofBlock {
            method,
            children,
            cases,
        })
    }
}

impl<'a> Parser<'a> {
    fn case_name(&mut self) -> Result<String, ParseError> {
        match self.peek_kind() {
            Some(TokKind::LParen) => Ok(self.paren_group()?.to_string()),
            Some(TokKind::Word(w)) if !is_keyword(w) => {
                self.bump();
                Ok(w.to_string())
            }
            _ => Err(self.error("expected a case name", &["<name>", "(...)"])),
        }
    }

    fn items(&mut self, prefix: &NodePath, depth: usize) -> Result<Vec<ProofNode>, ParseError> {
        let mut nodes = Vec::new();
        self.items_into(&mut nodes, prefix, depth)?;
        Ok(nodes)
    }

    /// Steps and comments up to `case`, `next`, `qed` or end of input.
    fn items_into(
        &mut self,
        nodes: &mut Vec<ProofNode>,
        prefix: &NodePath,
        depth: usize,
    ) -> Result<(), ParseError> {
        loop {
            let path = child(prefix, PathStep::Child(nodes.len()));
            let Some(tok) = self.peek() else {
                return Ok(());
            };
            let node = match tok.kind {
                TokKind::Comment(text) => {
                    self.bump();
                    ProofNode::Comment(text.to_string())
                }
                TokKind::Word("case" | "next" | "qed") => return Ok(()),
                TokKind::Word(_) => self.step(&path, depth)?,
                _ => {
                    return Err(self.error(
                        "expected a proof step",
                        &["have", "show", "obtain", "assume", "then", "qed"],
                    ))
                }
            };
            self.record(path, tok.start, self.last_end());
            nodes.push(node);
        }
    }

    fn step(&mut self, path: &NodePath, depth: usize) -> Result<ProofNode, ParseError> {
        let chain = match self.peek_word() {
            Some("then") => Some(Chain::Then),
            Some("also") => Some(Chain::Also),
            Some("finally") => Some(Chain::Finally),
            _ => None,
        };
        if chain.is_some() {
            self.bump();
        }
        let steps: &[&str] = if chain.is_some() {
            &["have", "show", "obtain"]
        } else {
            &[
                "have", "show", "obtain", "assume", "then", "also", "finally",
            ]
        };
        match self.peek_word() {
            Some("have") => {
                self.bump();
                let label = self.label();
                let proposition = self.expect_string()?.to_string();
                let facts = self.facts()?;
                let justification = self.justification(path, depth)?;
                Ok(ProofNode::Have(HaveStep {
                    chain,
                    label,
                    proposition,
                    facts,
                    justification,
                }))
            }
            Some("show") => {
                self.bump();
                let target = match self.peek_kind() {
                    Some(TokKind::Str(s)) => {
                        self.bump();
                        ShowTarget::Prop(s.to_string())
                    }
                    Some(TokKind::Word(w)) if w.starts_with('?') && w.len() > 1 => {
                        self.bump();
                        ShowTarget::Abbrev(w.to_string())
                    }
                    _ => return Err(self.error("expected a show target", &["?thesis", "\"...\""])),
                };
                let facts = self.facts()?;
                let justification = self.justification(path, depth)?;
                Ok(ProofNode::Show(ShowStep {
                    chain,
                    target,
                    facts,
                    justification,
                }))
            }
            Some("obtain") => {
                self.bump();
                let mut vars = Vec::new();
                while let Some(w) = self.peek_word() {
                    if is_keyword(w) {
                        break;
                    }
                    self.bump();
                    vars.push(w.to_string());
                }
                if vars.is_empty() {
                    return Err(self.error("expected obtained variables", &["<name>"]));
                }
                self.expect_word("where")?;
                let label = self.label();
                let proposition = self.expect_string()?.to_string();
                let facts = self.facts()?;
                let justification = self.justification(path, depth)?;
                Ok(ProofNode::Obtain(ObtainStep {
                    chain,
                    vars,
                    label,
                    proposition,
                    facts,
                    justification,
                }))
            }
            Some("assume") if chain.is_none() => {
                self.bump();
                let label = self.label();
                let proposition = self.expect_string()?.to_string();
                Ok(ProofNode::Assume(AssumeStep { label, proposition }))
            }
            _ => Err(self.error("expected a proof step", steps)),
        }
    }

    fn facts(&mut self) -> Result<Facts, ParseError> {
        let mut facts = Facts::default();
        loop {
            let target = match self.peek_word() {
                Some("using") => &mut facts.using,
                Some("unfolding") => &mut facts.unfolding,
                _ => return Ok(facts),
            };
            self.bump();
            let before = target.len();
            loop {
                match self.peek_kind() {
                    Some(TokKind::Word(w)) if !is_keyword(w) => {
                        self.bump();
                        target.push(w.to_string());
                    }
                    Some(TokKind::Cartouche(c)) => {
                        self.bump();
                        target.push(c.to_string());
                    }
                    _ => break,
                }
            }
            if target.len() == before {
                return Err(self.error("expected a fact name", &["<fact>"]));
            }
        }
    }

    fn at_justification_start(&self) -> bool {
        match self.peek_kind() {
            Some(TokKind::Word(w)) => {
                matches!(
                    w,
                    "by" | "proof" | "sledgehammer" | "ATP" | "sorry" | "oops"
                )
            }
            Some(TokKind::GapMarker | TokKind::AtpOpen) => true,
            _ => false,
        }
    }

    fn method(&mut self) -> Result<&'a str, ParseError> {
        match self.peek_kind() {
            Some(TokKind::LParen) => self.paren_group(),
            Some(TokKind::Minus) => {
                self.bump();
                Ok("-")
            }
            Some(TokKind::Word(w)) if !is_keyword(w) => {
                self.bump();
                Ok(w)
            }
            _ => Err(self.error("expected a proof method", &["<method>", "(...)"])),
        }
    }

    fn justification(
        &mut self,
        path: &NodePath,
        depth: usize,
    ) -> Result<Justification, ParseError> {
        match self.peek_kind() {
            Some(TokKind::Word("by")) => {
                self.bump();
                let mut text = format!("by {}", self.method()?);
                match self.peek_kind() {
                    Some(TokKind::LParen) => {
                        let m = self.paren_group()?;
                        text.push(' ');
                        text.push_str(m);
                    }
                    Some(TokKind::Word(w)) if !is_keyword(w) => {
                        self.bump();
                        text.push(' ');
                        text.push_str(w);
                    }
                    _ => {}
                }
                Ok(Justification::Tactic(text))
            }
            Some(TokKind::Word("proof")) => {
                let prefix = child(path, PathStep::Nested);
                Ok(Justification::Nested(self.block(&prefix, depth + 1)?))
            }
            Some(TokKind::Word("sledgehammer" | "ATP") | TokKind::GapMarker) => {
                self.bump();
                Ok(Justification::Gap)
            }
            Some(TokKind::Word(w @ ("sorry" | "oops"))) => {
                self.bump();
                Ok(Justification::Tactic(w.to_string()))
            }
            Some(TokKind::AtpOpen) => {
                self.bump();
                if self.peek_kind() == Some(TokKind::AtpClose) {
                    self.bump();
                    return Ok(Justification::Gap);
                }
                if !self.at_justification_start() || self.peek_kind() == Some(TokKind::AtpOpen) {
                    // A bare marker stands for an open conjecture.
                    return Ok(Justification::Gap);
                }
                let inner = self.justification(path, depth)?;
                if self.peek_kind() != Some(TokKind::AtpClose) {
                    return Err(self.error("expected `</ATP>`", &["</ATP>"]));
                }
                self.bump();
                Ok(inner)
            }
            _ => Err(self.error(
                "expected a justification",
                &["by", "proof", "sledgehammer", "<...>", "sorry"],
            )),
        }
    }
}
