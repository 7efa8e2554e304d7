//! Few-shot prompt construction for the drafting and sketching stages.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use dsp_sketch::{parse_sketch, serialize, strip_comments};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Problem;

pub const INFORMAL_STATEMENT: &str = "Informal Statement:";
pub const INFORMAL_PROOF: &str = "Informal Proof:";
pub const FORMAL_STATEMENT: &str = "Formal Statement:";
pub const FORMAL_SKETCH: &str = "Formal Proof Sketch:";
pub const FORMAL_PROOF: &str = "Formal Proof:";

/// Stop sequence shared by both stages: the model should not start another
/// example.
pub const STOP_SEQUENCE: &str = "Informal Statement:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Algebra,
    NumberTheory,
    Unknown,
}

/// Problem type as given away by its name.
pub fn infer_category(problem_name: &str) -> Category {
    match (
        problem_name.contains("algebra"),
        problem_name.contains("numbertheory"),
    ) {
        (true, false) => Category::Algebra,
        (false, true) => Category::NumberTheory,
        _ => Category::Unknown,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleQuad {
    pub id: String,
    pub category: Category,
    pub informal_statement: String,
    pub informal_proof: String,
    pub formal_statement: String,
    pub formal_sketch: String,
    /// Gap-free proof used by the full-proof ablation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_proof: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExamplePool {
    pub quads: Vec<ExampleQuad>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptMode {
    #[default]
    Full,
    NoComments,
    #[serde(rename = "no-informal")]
    NoInformalProof,
    FullProof,
}

impl PromptMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "full" => Some(Self::Full),
            "no-comments" => Some(Self::NoComments),
            "no-informal" => Some(Self::NoInformalProof),
            "full-proof" => Some(Self::FullProof),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::NoComments => "no-comments",
            Self::NoInformalProof => "no-informal",
            Self::FullProof => "full-proof",
        }
    }

    /// Heading that introduces the formal proof part of each example.
    pub fn proof_heading(self) -> &'static str {
        match self {
            Self::FullProof => FORMAL_PROOF,
            _ => FORMAL_SKETCH,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptConfig {
    pub k_examples: usize,
    pub mode: PromptMode,
    pub rng_seed: u64,
    /// Character budget for sketch prompts; whole examples are dropped from
    /// the front until the prompt fits.
    pub max_prompt_chars: Option<usize>,
}

impl Default for PromptConfig {
    fn default() -> Self {
        Self {
            k_examples: 3,
            mode: PromptMode::Full,
            rng_seed: 0,
            max_prompt_chars: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error("cannot read example pool {path}: {message}")]
    PoolFile { path: String, message: String },
    #[error("invalid example pool: {0}")]
    InvalidPool(String),
    #[error("only {available} examples available for category {category:?}, need {needed}")]
    PoolTooSmall {
        category: Category,
        available: usize,
        needed: usize,
    },
    #[error("example `{0}` has no full proof")]
    MissingFullProof(String),
    #[error("example `{id}` has an unparseable sketch: {message}")]
    BadSketch { id: String, message: String },
}

impl ExamplePool {
    pub fn load(path: &Path) -> Result<Self, PromptError> {
        let text = fs::read_to_string(path).map_err(|e| PromptError::PoolFile {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let quads: Vec<ExampleQuad> =
            serde_json::from_str(&text).map_err(|e| PromptError::PoolFile {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
        Self::new(quads)
    }

    /// Validates ids, sketches and full proofs.
    pub fn new(quads: Vec<ExampleQuad>) -> Result<Self, PromptError> {
        let mut ids = HashSet::new();
        for q in &quads {
            if !ids.insert(q.id.as_str()) {
                return Err(PromptError::InvalidPool(format!("duplicate id `{}`", q.id)));
            }
            if q.category == Category::Unknown {
                return Err(PromptError::InvalidPool(format!(
                    "`{}` has no category",
                    q.id
                )));
            }
            let sketch = parse_example(q, &q.formal_sketch)?;
            if sketch.gap_count() == 0 {
                return Err(PromptError::InvalidPool(format!(
                    "sketch of `{}` has no gap",
                    q.id
                )));
            }
            if sketch.comment_count() == 0 {
                return Err(PromptError::InvalidPool(format!(
                    "sketch of `{}` has no comment",
                    q.id
                )));
            }
            if let Some(full) = &q.full_proof {
                if parse_example(q, full)?.gap_count() != 0 {
                    return Err(PromptError::InvalidPool(format!(
                        "full proof of `{}` has gaps",
                        q.id
                    )));
                }
            }
        }
        Ok(Self { quads })
    }

    pub fn len(&self) -> usize {
        self.quads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quads.is_empty()
    }
}

fn parse_example(q: &ExampleQuad, text: &str) -> Result<dsp_sketch::SketchAst, PromptError> {
    parse_sketch(text).map_err(|e| PromptError::BadSketch {
        id: q.id.clone(),
        message: e.to_string(),
    })
}

/// Draws `k` distinct examples uniformly without replacement from the quads
/// of `category` (the whole pool for `Unknown`), never including `problem_id`.
pub fn select_examples<'a, R: Rng + ?Sized>(
    pool: &'a ExamplePool,
    problem_id: &str,
    category: Category,
    k: usize,
    rng: &mut R,
) -> Result<Vec<&'a ExampleQuad>, PromptError> {
    let candidates: Vec<&ExampleQuad> = pool
        .quads
        .iter()
        .filter(|q| q.id != problem_id)
        .filter(|q| category == Category::Unknown || q.category == category)
        .collect();
    if k == 0 || candidates.len() < k {
        return Err(PromptError::PoolTooSmall {
            category,
            available: candidates.len(),
            needed: k.max(1),
        });
    }
    let picked = rand::seq::index::sample(rng, candidates.len(), k);
    Ok(picked.into_iter().map(|i| candidates[i]).collect())
}

/// Applies an ablation to one example.
pub fn apply_mode(quad: &ExampleQuad, mode: PromptMode) -> Result<ExampleQuad, PromptError> {
    let mut out = quad.clone();
    match mode {
        PromptMode::Full => {}
        PromptMode::NoComments => {
            out.formal_sketch =
                serialize(&strip_comments(&parse_example(quad, &quad.formal_sketch)?));
        }
        PromptMode::NoInformalProof => {
            out.informal_proof.clear();
            out.formal_sketch =
                serialize(&strip_comments(&parse_example(quad, &quad.formal_sketch)?));
        }
        PromptMode::FullProof => {
            out.formal_sketch = quad
                .full_proof
                .clone()
                .ok_or_else(|| PromptError::MissingFullProof(quad.id.clone()))?;
        }
    }
    Ok(out)
}

fn push_section(out: &mut String, heading: &str, body: &str) {
    out.push_str(heading);
    out.push('\n');
    out.push_str(body.trim_end());
    out.push_str("\n\n");
}

fn render_example(q: &ExampleQuad, mode: PromptMode) -> String {
    let mut s = String::new();
    push_section(&mut s, INFORMAL_STATEMENT, &q.informal_statement);
    if mode != PromptMode::NoInformalProof {
        push_section(&mut s, INFORMAL_PROOF, &q.informal_proof);
    }
    push_section(&mut s, FORMAL_STATEMENT, &q.formal_statement);
    push_section(&mut s, mode.proof_heading(), &q.formal_sketch);
    s
}

fn render_target(problem: &Problem, draft: &str, mode: PromptMode) -> String {
    let mut s = String::new();
    push_section(&mut s, INFORMAL_STATEMENT, &problem.informal_statement);
    if mode != PromptMode::NoInformalProof {
        push_section(&mut s, INFORMAL_PROOF, draft);
    }
    push_section(&mut s, FORMAL_STATEMENT, &problem.formal_statement);
    s.push_str(mode.proof_heading());
    s.push('\n');
    s
}

/// Builds the sketching prompt. `examples` must already have the mode
/// applied. The prompt ends where the model continues with the proof.
pub fn build_sketch_prompt(
    examples: &[ExampleQuad],
    problem: &Problem,
    draft: &str,
    config: &PromptConfig,
) -> String {
    let target = render_target(problem, draft, config.mode);
    let rendered: Vec<String> = examples
        .iter()
        .map(|q| render_example(q, config.mode))
        .collect();
    let mut first = 0;
    if let Some(budget) = config.max_prompt_chars {
        let mut total: usize =
            rendered.iter().map(|r| r.chars().count()).sum::<usize>() + target.chars().count();
        while first < rendered.len() && total > budget {
            total -= rendered[first].chars().count();
            first += 1;
        }
    }
    let mut out: String = rendered[first..].concat();
    out.push_str(&target);
    out
}

/// Builds the drafting prompt: optional (statement, proof) pairs, then the
/// target statement and the proof cue.
pub fn build_draft_prompt(problem: &Problem, draft_examples: &[(String, String)]) -> String {
    let mut out = String::new();
    for (statement, proof) in draft_examples {
        push_section(&mut out, INFORMAL_STATEMENT, statement);
        push_section(&mut out, INFORMAL_PROOF, proof);
    }
    push_section(&mut out, INFORMAL_STATEMENT, &problem.informal_statement);
    out.push_str(INFORMAL_PROOF);
    out.push('\n');
    out
}

/// The formal statement of the target problem in a sketch prompt.
pub fn target_formal_statement(prompt: &str) -> Option<&str> {
    let start = prompt.rfind(&format!("{FORMAL_STATEMENT}\n"))? + FORMAL_STATEMENT.len() + 1;
    let rest = &prompt[start..];
    Some(&rest[..rest.find("\n\n").unwrap_or(rest.len())])
}

/// The informal statement of the target problem in a prompt of either stage.
pub fn target_informal_statement(prompt: &str) -> Option<&str> {
    let start = prompt.rfind(&format!("{INFORMAL_STATEMENT}\n"))? + INFORMAL_STATEMENT.len() + 1;
    let rest = &prompt[start..];
    Some(&rest[..rest.find("\n\n").unwrap_or(rest.len())])
}

/// Whether a prompt asks for a formal proof rather than an informal draft.
pub fn is_sketch_prompt(prompt: &str) -> bool {
    prompt.ends_with(&format!("{FORMAL_SKETCH}\n"))
        || prompt.ends_with(&format!("{FORMAL_PROOF}\n"))
}
