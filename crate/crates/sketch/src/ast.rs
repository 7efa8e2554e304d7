//! Syntax tree for declarative proof sketches.
//!
//! Propositions, sorts and tactic texts are kept as opaque strings. Only the
//! step structure of a proof is represented.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// The literal that marks an open conjecture in canonical output.
pub const GAP_TOKEN: &str = "sledgehammer";

/// A parsed proof sketch: an optional theorem header followed by its proof.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SketchAst {
    pub header: Option<TheoremHeader>,
    pub body: Vec<ProofNode>,
    /// Byte ranges of the nodes in the source the AST was parsed from.
    /// Empty for constructed or transformed trees.
    #[serde(skip)]
    pub spans: SpanMap,
}

/// Structural equality: spans are ignored.
impl PartialEq for SketchAst {
    fn eq(&self, other: &Self) -> bool {
        self.header == other.header && self.body == other.body
    }
}

impl Eq for SketchAst {}

impl SketchAst {
    pub fn new(header: Option<TheoremHeader>, body: Vec<ProofNode>) -> Self {
        Self {
            header,
            body,
            spans: SpanMap::new(),
        }
    }

    /// Looks up the node at `path`.
    pub fn node(&self, path: &[PathStep]) -> Option<&ProofNode> {
        let (first, rest) = path.split_first()?;
        let PathStep::Child(i) = first else {
            return None;
        };
        let mut node = self.body.get(*i)?;
        let mut rest = rest;
        while !rest.is_empty() {
            let (n, r) = descend(node, rest)?;
            node = n;
            rest = r;
        }
        Some(node)
    }

    pub(crate) fn node_mut(&mut self, path: &[PathStep]) -> Option<&mut ProofNode> {
        let (first, rest) = path.split_first()?;
        let PathStep::Child(i) = first else {
            return None;
        };
        let mut node = self.body.get_mut(*i)?;
        let mut rest = rest;
        while !rest.is_empty() {
            let (n, r) = descend_mut(node, rest)?;
            node = n;
            rest = r;
        }
        Some(node)
    }

    /// Number of open gaps anywhere in the tree.
    pub fn gap_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |node| {
            if node.justification() == Some(&Justification::Gap) {
                n += 1;
            }
        });
        n
    }

    /// Number of comment nodes anywhere in the tree.
    pub fn comment_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |node| {
            if matches!(node, ProofNode::Comment(_)) {
                n += 1;
            }
        });
        n
    }

    /// Number of steps closed by a concrete tactic.
    pub fn tactic_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |node| {
            if matches!(node.justification(), Some(Justification::Tactic(_))) {
                n += 1;
            }
        });
        n
    }

    /// Calls `f` on every node in document order.
    pub fn visit<F: FnMut(&ProofNode)>(&self, f: &mut F) {
        fn walk<F: FnMut(&ProofNode)>(nodes: &[ProofNode], f: &mut F) {
            for node in nodes {
                f(node);
                match node {
                    ProofNode::Block(block) => walk_block(block, f),
                    other => {
                        if let Some(Justification::Nested(block)) = other.justification() {
                            walk_block(block, f);
                        }
                    }
                }
            }
        }
        fn walk_block<F: FnMut(&ProofNode)>(block: &ProofBlock, f: &mut F) {
            walk(&block.children, f);
            for case in &block.cases {
                walk(&case.children, f);
            }
        }
        walk(&self.body, f);
    }
}

fn block_of(node: &ProofNode) -> Option<&ProofBlock> {
    match node {
        ProofNode::Block(b) => Some(b),
        other => match other.justification() {
            Some(Justification::Nested(b)) => Some(b),
            _ => None,
        },
    }
}

fn block_of_mut(node: &mut ProofNode) -> Option<&mut ProofBlock> {
    match node {
        ProofNode::Block(b) => Some(b),
        other => match other.justification_mut() {
            Some(Justification::Nested(b)) => Some(b),
            _ => None,
        },
    }
}

fn descend<'a, 'p>(
    node: &'a ProofNode,
    path: &'p [PathStep],
) -> Option<(&'a ProofNode, &'p [PathStep])> {
    // A step with a nested proof is entered through `Nested`; a top-level
    // block is entered directly.
    let (block, path) = match (node, path.first()?) {
        (ProofNode::Block(b), _) => (b, path),
        (_, PathStep::Nested) => (block_of(node)?, &path[1..]),
        _ => return None,
    };
    match path {
        [PathStep::Child(i), rest @ ..] => Some((block.children.get(*i)?, rest)),
        [PathStep::Case(c), PathStep::Child(i), rest @ ..] => {
            Some((block.cases.get(*c)?.children.get(*i)?, rest))
        }
        _ => None,
    }
}

fn descend_mut<'a, 'p>(
    node: &'a mut ProofNode,
    path: &'p [PathStep],
) -> Option<(&'a mut ProofNode, &'p [PathStep])> {
    let is_block = matches!(node, ProofNode::Block(_));
    let path = match (is_block, path.first()?) {
        (true, _) => path,
        (false, PathStep::Nested) => &path[1..],
        _ => return None,
    };
    let block = block_of_mut(node)?;
    match path {
        [PathStep::Child(i), rest @ ..] => Some((block.children.get_mut(*i)?, rest)),
        [PathStep::Case(c), PathStep::Child(i), rest @ ..] => {
            Some((block.cases.get_mut(*c)?.children.get_mut(*i)?, rest))
        }
        _ => None,
    }
}

/// `theorem name: fixes ... assumes ... shows ...`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremHeader {
    /// `theorem` or `lemma`.
    pub keyword: String,
    pub name: Option<String>,
    pub fixes: Vec<FixedVar>,
    pub assumes: Vec<Assumption>,
    pub shows: String,
}

impl TheoremHeader {
    pub fn theorem(name: impl Into<String>, shows: impl Into<String>) -> Self {
        Self {
            keyword: "theorem".into(),
            name: Some(name.into()),
            fixes: Vec::new(),
            assumes: Vec::new(),
            shows: shows.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedVar {
    pub name: String,
    /// Sort text; quoted sorts keep their quotes.
    pub sort: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assumption {
    pub label: Option<String>,
    pub proposition: String,
}

/// Forward-chaining prefix of a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chain {
    Then,
    Also,
    Finally,
}

impl Chain {
    pub fn keyword(self) -> &'static str {
        match self {
            Chain::Then => "then",
            Chain::Also => "also",
            Chain::Finally => "finally",
        }
    }
}

/// Facts passed to a step with `using` and `unfolding`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Facts {
    pub using: Vec<String>,
    pub unfolding: Vec<String>,
}

impl Facts {
    pub fn using<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            using: names.into_iter().map(Into::into).collect(),
            unfolding: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.using.is_empty() && self.unfolding.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &String> {
        self.using.iter().chain(self.unfolding.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProofNode {
    Have(HaveStep),
    Show(ShowStep),
    Obtain(ObtainStep),
    Assume(AssumeStep),
    /// The outermost `proof ... qed` of a theorem.
    Block(ProofBlock),
    /// Interior text of a `(* ... *)` comment, verbatim.
    Comment(String),
    /// A theorem closed directly, as in `theorem t: "P" by auto`.
    Terminal(Justification),
}

impl ProofNode {
    pub fn justification(&self) -> Option<&Justification> {
        match self {
            ProofNode::Have(s) => Some(&s.justification),
            ProofNode::Show(s) => Some(&s.justification),
            ProofNode::Obtain(s) => Some(&s.justification),
            ProofNode::Terminal(j) => Some(j),
            ProofNode::Assume(_) | ProofNode::Block(_) | ProofNode::Comment(_) => None,
        }
    }

    pub(crate) fn justification_mut(&mut self) -> Option<&mut Justification> {
        match self {
            ProofNode::Have(s) => Some(&mut s.justification),
            ProofNode::Show(s) => Some(&mut s.justification),
            ProofNode::Obtain(s) => Some(&mut s.justification),
            ProofNode::Terminal(j) => Some(j),
            ProofNode::Assume(_) | ProofNode::Block(_) | ProofNode::Comment(_) => None,
        }
    }

    /// Label introduced by this node, if any.
    pub fn label(&self) -> Option<&str> {
        match self {
            ProofNode::Have(s) => s.label.as_deref(),
            ProofNode::Obtain(s) => s.label.as_deref(),
            ProofNode::Assume(s) => s.label.as_deref(),
            _ => None,
        }
    }

    pub fn facts(&self) -> Option<&Facts> {
        match self {
            ProofNode::Have(s) => Some(&s.facts),
            ProofNode::Show(s) => Some(&s.facts),
            ProofNode::Obtain(s) => Some(&s.facts),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HaveStep {
    pub chain: Option<Chain>,
    pub label: Option<String>,
    pub proposition: String,
    pub facts: Facts,
    pub justification: Justification,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShowStep {
    pub chain: Option<Chain>,
    pub target: ShowTarget,
    pub facts: Facts,
    pub justification: Justification,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShowTarget {
    /// A term abbreviation such as `?thesis` or `?case`, written unquoted.
    Abbrev(String),
    /// A quoted proposition (stored without quotes).
    Prop(String),
}

impl ShowTarget {
    pub fn thesis() -> Self {
        ShowTarget::Abbrev("?thesis".into())
    }

    pub fn text(&self) -> &str {
        match self {
            ShowTarget::Abbrev(s) | ShowTarget::Prop(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObtainStep {
    pub chain: Option<Chain>,
    pub vars: Vec<String>,
    pub label: Option<String>,
    pub proposition: String,
    pub facts: Facts,
    pub justification: Justification,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssumeStep {
    pub label: Option<String>,
    pub proposition: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Justification {
    /// An open conjecture left for the automated prover.
    Gap,
    /// A concrete closing step, e.g. `by auto`.
    Tactic(String),
    Nested(ProofBlock),
}

/// `proof [method] ... [case ... next ...] qed`
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofBlock {
    pub method: Option<String>,
    pub children: Vec<ProofNode>,
    pub cases: Vec<CaseBlock>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseBlock {
    pub name: String,
    pub children: Vec<ProofNode>,
}

/// One step of a node address.
///
/// `Child(i)` selects the i-th node of the current list (the body, a block's
/// children or a case's children), `Case(c)` selects the c-th case of the
/// current block and `Nested` enters the proof block that justifies a step.
/// The outermost `Block` node is entered without `Nested`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PathStep {
    Child(usize),
    Case(usize),
    Nested,
}

pub type NodePath = Vec<PathStep>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

pub type SpanMap = BTreeMap<NodePath, Span>;
