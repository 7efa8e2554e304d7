use std::fmt::Write;

use crate::ast::*;

const INDENT: usize = 2;

/// Renders an AST in canonical layout. Gaps are written as [`GAP_TOKEN`] on
/// a line of their own and comments as `(* ... *)`.
pub fn serialize(ast: &SketchAst) -> String {
    let mut w = Writer::default();
    if let Some(header) = &ast.header {
        w.header(header);
    }
    w.nodes(&ast.body, &[], 0);
    w.out
}

/// Text of the sketch up to the open conjecture at `path`: everything before
/// the step, then the step itself without its justification. Returns `None`
/// if `path` does not address a node.
pub fn serialize_prefix(ast: &SketchAst, path: &[PathStep]) -> Option<String> {
    ast.node(path)?;
    let mut w = Writer {
        stop_at: Some(path.to_vec()),
        ..Writer::default()
    };
    if let Some(header) = &ast.header {
        w.header(header);
    }
    w.nodes(&ast.body, &[], 0);
    w.stopped.then_some(w.out)
}

#[derive(Default)]
struct Writer {
    out: String,
    stop_at: Option<NodePath>,
    stopped: bool,
}

fn quoted(s: &str) -> String {
    format!("\"{s}\"")
}

impl Writer {
    fn line(&mut self, indent: usize, text: &str) {
        if self.stopped {
            return;
        }
        let _ = writeln!(self.out, "{:indent$}{text}", "");
    }

    fn header(&mut self, h: &TheoremHeader) {
        match &h.name {
            Some(name) => self.line(0, &format!("{} {name}:", h.keyword)),
            None => self.line(0, &h.keyword),
        }
        if !h.fixes.is_empty() {
            let vars: Vec<String> = h
                .fixes
                .iter()
                .map(|f| match &f.sort {
                    Some(sort) => format!("{} :: {sort}", f.name),
                    None => f.name.clone(),
                })
                .collect();
            self.line(INDENT, &format!("fixes {}", vars.join(" and ")));
        }
        for (i, a) in h.assumes.iter().enumerate() {
            let label = a
                .label
                .as_ref()
                .map(|l| format!("{l}: "))
                .unwrap_or_default();
            let lead = if i == 0 { "assumes" } else { "  and" };
            self.line(INDENT, &format!("{lead} {label}{}", quoted(&a.proposition)));
        }
        self.line(INDENT, &format!("shows {}", quoted(&h.shows)));
    }

    fn nodes(&mut self, nodes: &[ProofNode], prefix: &[PathStep], indent: usize) {
        for (i, node) in nodes.iter().enumerate() {
            if self.stopped {
                return;
            }
            let mut path = prefix.to_vec();
            path.push(PathStep::Child(i));
            self.node(node, &path, indent);
        }
    }

    fn node(&mut self, node: &ProofNode, path: &[PathStep], indent: usize) {
        let stop_here = self.stop_at.as_deref() == Some(path);
        match node {
            ProofNode::Comment(text) => self.line(indent, &format!("(*{text}*)")),
            ProofNode::Block(block) => self.block(block, path, indent),
            ProofNode::Terminal(j) => {
                if stop_here {
                    self.stopped = true;
                    return;
                }
                match j {
                    Justification::Nested(block) => {
                        let mut p = path.to_vec();
                        p.push(PathStep::Nested);
                        self.block(block, &p, indent)
                    }
                    Justification::Gap => self.line(indent, GAP_TOKEN),
                    Justification::Tactic(t) => self.line(indent, t),
                }
            }
            ProofNode::Assume(s) => {
                let label = s
                    .label
                    .as_ref()
                    .map(|l| format!("{l}: "))
                    .unwrap_or_default();
                self.line(indent, &format!("assume {label}{}", quoted(&s.proposition)));
            }
            ProofNode::Have(s) => {
                let label = s
                    .label
                    .as_ref()
                    .map(|l| format!("{l}: "))
                    .unwrap_or_default();
                let head = format!(
                    "{}have {label}{}{}",
                    chain(s.chain),
                    quoted(&s.proposition),
                    facts(&s.facts)
                );
                self.step(&head, &s.justification, path, indent, stop_here);
            }
            ProofNode::Show(s) => {
                let target = match &s.target {
                    ShowTarget::Abbrev(a) => a.clone(),
                    ShowTarget::Prop(p) => quoted(p),
                };
                let head = format!("{}show {target}{}", chain(s.chain), facts(&s.facts));
                self.step(&head, &s.justification, path, indent, stop_here);
            }
            ProofNode::Obtain(s) => {
                let label = s
                    .label
                    .as_ref()
                    .map(|l| format!("{l}: "))
                    .unwrap_or_default();
                let head = format!(
                    "{}obtain {} where {label}{}{}",
                    chain(s.chain),
                    s.vars.join(" "),
                    quoted(&s.proposition),
                    facts(&s.facts)
                );
                self.step(&head, &s.justification, path, indent, stop_here);
            }
        }
    }

    fn step(
        &mut self,
        head: &str,
        j: &Justification,
        path: &[PathStep],
        indent: usize,
        stop: bool,
    ) {
        self.line(indent, head);
        if stop {
            self.stopped = true;
            return;
        }
        match j {
            Justification::Gap => self.line(indent + INDENT, GAP_TOKEN),
            Justification::Tactic(t) => self.line(indent + INDENT, t),
            Justification::Nested(block) => {
                let mut p = path.to_vec();
                p.push(PathStep::Nested);
                self.block(block, &p, indent)
            }
        }
    }

    fn block(&mut self, block: &ProofBlock, prefix: &[PathStep], indent: usize) {
        match &block.method {
            Some(m) => self.line(indent, &format!("proof {m}")),
            None => self.line(indent, "proof"),
        }
        self.nodes(&block.children, prefix, indent + INDENT);
        for (c, case) in block.cases.iter().enumerate() {
            if c > 0 {
                self.line(indent, "next");
            }
            self.line(indent, &format!("case {}", case.name));
            let mut p = prefix.to_vec();
            p.push(PathStep::Case(c));
            self.nodes(&case.children, &p, indent + INDENT);
        }
        self.line(indent, "qed");
    }
}

fn chain(c: Option<Chain>) -> String {
    c.map(|c| format!("{} ", c.keyword())).unwrap_or_default()
}

fn facts(f: &Facts) -> String {
    let mut s = String::new();
    if !f.using.is_empty() {
        s.push_str(" using ");
        s.push_str(&f.using.join(" "));
    }
    if !f.unfolding.is_empty() {
        s.push_str(" unfolding ");
        s.push_str(&f.unfolding.join(" "));
    }
    s
}
