use serde::{Deserialize, Serialize};

use crate::ast::*;
use crate::error::FillError;
use crate::parser::parse_justification;

/// One open conjecture of a sketch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapSite {
    /// Address of the step whose justification is the gap.
    pub path: NodePath,
    pub label: Option<String>,
    /// The conjecture; `?thesis`-style abbreviations are kept as written.
    pub proposition: String,
    /// Facts the step passes with `using`/`unfolding`.
    pub facts_used: Vec<String>,
    /// Labels visible at the step, outermost first.
    pub facts_in_scope: Vec<String>,
    /// Comment immediately preceding the step, if any.
    pub preceding_comment: Option<String>,
}

/// A fact reference that names no label in scope. These usually point into
/// the prover's library and are reported rather than rejected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnresolvedFact {
    pub path: NodePath,
    pub name: String,
}

/// Names that are always in scope inside a proof.
const BUILTIN_FACTS: &[&str] = &["this", "calculation", "that"];

/// Open gaps in document order.
pub fn extract_gaps(ast: &SketchAst) -> Vec<GapSite> {
    let mut sites = Vec::new();
    walk_scoped(ast, &mut |path, node, scope, preceding| {
        if node.justification() != Some(&Justification::Gap) {
            return;
        }
        let (label, proposition) = match node {
            ProofNode::Have(s) => (s.label.clone(), s.proposition.clone()),
            ProofNode::Obtain(s) => (s.label.clone(), s.proposition.clone()),
            ProofNode::Show(s) => (None, s.target.text().to_string()),
            ProofNode::Terminal(_) => (
                None,
                ast.header
                    .as_ref()
                    .map_or_else(|| "?thesis".to_string(), |h| h.shows.clone()),
            ),
            _ => return,
        };
        sites.push(GapSite {
            path: path.to_vec(),
            label,
            proposition,
            facts_used: node
                .facts()
                .map(|f| f.iter().cloned().collect())
                .unwrap_or_default(),
            facts_in_scope: scope.to_vec(),
            preceding_comment: preceding.map(str::to_string),
        });
    });
    sites
}

/// Replaces the gap addressed by `site` with `closing_step`.
///
/// Fails with [`FillError::InvalidSite`] when the site no longer addresses a
/// gap (for instance because it was already filled).
pub fn fill_gap(
    ast: &SketchAst,
    site: &GapSite,
    closing_step: &str,
) -> Result<SketchAst, FillError> {
    let justification = parse_justification(closing_step).map_err(FillError::BadClosingStep)?;
    if justification == Justification::Gap {
        return Err(FillError::BadClosingStep(crate::ParseError::new(
            0,
            "closing step must not be a gap",
        )));
    }
    let invalid = || FillError::InvalidSite {
        path: site.path.clone(),
    };
    let mut out = ast.clone();
    let node = out.node_mut(&site.path).ok_or_else(invalid)?;
    let matches_site = match &*node {
        ProofNode::Have(s) => s.label == site.label && s.proposition == site.proposition,
        ProofNode::Obtain(s) => s.label == site.label && s.proposition == site.proposition,
        ProofNode::Show(s) => s.target.text() == site.proposition,
        ProofNode::Terminal(_) => true,
        _ => false,
    };
    let slot = node.justification_mut().ok_or_else(invalid)?;
    if !matches_site || *slot != Justification::Gap {
        return Err(invalid());
    }
    *slot = justification;
    out.spans.remove(&site.path);
    Ok(out)
}

/// Removes every comment node. Spans are dropped since node addresses shift.
pub fn strip_comments(ast: &SketchAst) -> SketchAst {
    fn strip_nodes(nodes: &[ProofNode]) -> Vec<ProofNode> {
        nodes
            .iter()
            .filter(|n| !matches!(n, ProofNode::Comment(_)))
            .map(strip_node)
            .collect()
    }
    fn strip_block(b: &ProofBlock) -> ProofBlock {
        ProofBlock {
            method: b.method.clone(),
            children: strip_nodes(&b.children),
            cases: b
                .cases
                .iter()
                .map(|c| CaseBlock {
                    name: c.name.clone(),
                    children: strip_nodes(&c.children),
                })
                .collect(),
        }
    }
    fn strip_just(j: &Justification) -> Justification {
        match j {
            Justification::Nested(b) => Justification::Nested(strip_block(b)),
            other => other.clone(),
        }
    }
    fn strip_node(n: &ProofNode) -> ProofNode {
        match n {
            ProofNode::Block(b) => ProofNode::Block(strip_block(b)),
            ProofNode::Have(s) => ProofNode::Have(HaveStep {
                justification: strip_just(&s.justification),
                ..s.clone()
            }),
            ProofNode::Show(s) => ProofNode::Show(ShowStep {
                justification: strip_just(&s.justification),
                ..s.clone()
            }),
            ProofNode::Obtain(s) => ProofNode::Obtain(ObtainStep {
                justification: strip_just(&s.justification),
                ..s.clone()
            }),
            ProofNode::Terminal(j) => ProofNode::Terminal(strip_just(j)),
            other => other.clone(),
        }
    }
    SketchAst::new(ast.header.clone(), strip_nodes(&ast.body))
}

/// Fact names used by steps that resolve to no visible label.
pub fn unresolved_facts(ast: &SketchAst) -> Vec<UnresolvedFact> {
    let mut out = Vec::new();
    walk_scoped(ast, &mut |path, node, scope, _| {
        let Some(facts) = node.facts() else {
            return;
        };
        for name in facts.iter() {
            let is_cartouche = name.starts_with('‹') || name.starts_with("\\<open>");
            if is_cartouche || BUILTIN_FACTS.contains(&name.as_str()) || scope.contains(name) {
                continue;
            }
            out.push(UnresolvedFact {
                path: path.to_vec(),
                name: name.clone(),
            });
        }
    });
    out
}

/// Visits nodes in document order with the labels visible at each node and
/// the comment immediately preceding it.
fn walk_scoped<F>(ast: &SketchAst, f: &mut F)
where
    F: FnMut(&[PathStep], &ProofNode, &[String], Option<&str>),
{
    let mut scope: Vec<String> = Vec::new();
    if let Some(h) = &ast.header {
        scope.extend(h.assumes.iter().filter_map(|a| a.label.clone()));
        if !h.assumes.is_empty() {
            scope.push("assms".to_string());
        }
    }
    let mut path = Vec::new();
    walk_list(&ast.body, &mut path, &mut scope, f);
}

fn walk_list<F>(nodes: &[ProofNode], path: &mut NodePath, scope: &mut Vec<String>, f: &mut F)
where
    F: FnMut(&[PathStep], &ProofNode, &[String], Option<&str>),
{
    for (i, node) in nodes.iter().enumerate() {
        path.push(PathStep::Child(i));
        let preceding = match i.checked_sub(1).map(|j| &nodes[j]) {
            Some(ProofNode::Comment(text)) => Some(text.as_str()),
            _ => None,
        };
        f(path, node, scope, preceding);
        match node {
            ProofNode::Block(b) => walk_block(b, path, scope, f),
            other => {
                if let Some(Justification::Nested(b)) = other.justification() {
                    path.push(PathStep::Nested);
                    walk_block(b, path, scope, f);
                    path.pop();
                }
            }
        }
        if let Some(label) = node.label() {
            scope.push(label.to_string());
        }
        path.pop();
    }
}

fn walk_block<F>(block: &ProofBlock, path: &mut NodePath, scope: &mut Vec<String>, f: &mut F)
where
    F: FnMut(&[PathStep], &ProofNode, &[String], Option<&str>),
{
    let base = scope.len();
    walk_list(&block.children, path, scope, f);
    for (c, case) in block.cases.iter().enumerate() {
        let mark = scope.len();
        path.push(PathStep::Case(c));
        walk_list(&case.children, path, scope, f);
        path.pop();
        scope.truncate(mark);
    }
    scope.truncate(base);
}
