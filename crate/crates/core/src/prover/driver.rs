use std::time::{Duration, Instant};

use dsp_sketch::{
    check_no_cheat, extract_gaps, fill_gap, parse_justification, serialize, serialize_prefix,
    GapSite, Justification, ProofNode, SketchAst,
};
use serde::{Deserialize, Serialize};

use super::config::{tactic_step, HAMMER};
use super::protocol::{Command, Reply};
use super::session::ProverSession;
use super::ProverError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttemptOutcome {
    Success,
    Fail,
    Timeout,
}

/// One cascade entry tried on a gap: a tactic name or the hammer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapAttempt {
    pub method: String,
    pub outcome: AttemptOutcome,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum GapResult {
    Closed {
        closing_step: String,
        /// Index into the tactic list; absent when the hammer closed the gap.
        tactic_index: Option<usize>,
        elapsed_ms: u64,
        attempts: Vec<GapAttempt>,
    },
    /// Every cascade entry failed within the budget.
    Failed { attempts: Vec<GapAttempt> },
    /// The per-gap budget ran out.
    TimedOut {
        elapsed_ms: u64,
        attempts: Vec<GapAttempt>,
    },
}

impl GapResult {
    pub fn is_closed(&self) -> bool {
        matches!(self, Self::Closed { .. })
    }

    pub fn attempts(&self) -> &[GapAttempt] {
        match self {
            Self::Closed { attempts, .. }
            | Self::Failed { attempts }
            | Self::TimedOut { attempts, .. } => attempts,
        }
    }

    /// Copy with all wall-clock measurements zeroed.
    pub fn without_timing(&self) -> Self {
        let strip = |a: &[GapAttempt]| -> Vec<GapAttempt> {
            a.iter()
                .map(|x| GapAttempt {
                    elapsed_ms: 0,
                    ..x.clone()
                })
                .collect()
        };
        match self {
            Self::Closed {
                closing_step,
                tactic_index,
                attempts,
                ..
            } => Self::Closed {
                closing_step: closing_step.clone(),
                tactic_index: *tactic_index,
                elapsed_ms: 0,
                attempts: strip(attempts),
            },
            Self::Failed { attempts } => Self::Failed {
                attempts: strip(attempts),
            },
            Self::TimedOut { attempts, .. } => Self::TimedOut {
                elapsed_ms: 0,
                attempts: strip(attempts),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "reason", rename_all = "snake_case")]
pub enum Verdict {
    Valid,
    Invalid(String),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        *self == Self::Valid
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FullProofResult {
    pub proof_text: String,
    pub per_gap: Vec<GapResult>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SketchFailure {
    pub failed_site: GapSite,
    /// Results up to and including the failed gap.
    pub partial: Vec<GapResult>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SketchOutcome {
    /// All gaps closed; `verdict` is the final whole-proof check.
    Proved(FullProofResult),
    Failed(SketchFailure),
    /// The sketch contains a cheating keyword; the backend was not consulted.
    Cheat {
        keywords: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum DirectResult {
    Valid {
        proof_text: String,
        gap: GapResult,
    },
    Invalid {
        reason: String,
        gap: Option<GapResult>,
    },
}

impl DirectResult {
    pub fn is_valid(&self) -> bool {
        matches!(self, Self::Valid { .. })
    }
}

/// Reserved from the per-gap budget for scheduling jitter.
const MAX_DEADLINE_SLACK: Duration = Duration::from_millis(20);

fn ms(d: Duration) -> u64 {
    d.as_millis() as u64
}

/// Runs the tactic cascade, then the hammer, on one gap of `ast`.
///
/// `context` is the sketch text up to the gap. The returned closing step has
/// been checked to fill the site. The per-gap budget bounds the wall time
/// spent waiting on the backend.
pub fn close_gap(
    session: &mut ProverSession,
    ast: &SketchAst,
    site: &GapSite,
    context: &str,
) -> Result<GapResult, ProverError> {
    let config = session.config().clone();
    let full_budget = Duration::from_millis(config.per_gap_budget_ms);
    let budget = full_budget - (full_budget / 50).min(MAX_DEADLINE_SLACK);
    let grace = Duration::from_millis(config.response_grace_ms);
    let start = Instant::now();
    let mut attempts = Vec::new();

    let entries = config
        .tactics
        .iter()
        .map(|t| (t.as_str(), config.tactic_timeout_ms, false))
        .chain(std::iter::once((HAMMER, config.hammer_timeout_ms, true)));

    for (index, (method, timeout_ms, is_hammer)) in entries.enumerate() {
        let remaining = budget.saturating_sub(start.elapsed());
        if remaining.is_zero() {
            return Ok(GapResult::TimedOut {
                elapsed_ms: ms(start.elapsed()),
                attempts,
            });
        }
        let sent_timeout = Duration::from_millis(timeout_ms).min(remaining);
        let wait = (sent_timeout + grace).min(remaining);
        let command = if is_hammer {
            Command::Hammer {
                timeout_ms: ms(sent_timeout).max(1),
                context: Some(context.to_string()),
                goal: Some(site.proposition.clone()),
            }
        } else {
            Command::Step {
                text: tactic_step(method),
                timeout_ms: ms(sent_timeout).max(1),
                context: Some(context.to_string()),
                goal: Some(site.proposition.clone()),
            }
        };
        let issued = Instant::now();
        let reply = session.call(command, wait)?;
        let attempt = |outcome| GapAttempt {
            method: method.to_string(),
            outcome,
            elapsed_ms: ms(issued.elapsed()),
        };
        match reply {
            Reply::Ok { reconstruction, .. } => {
                let step = if is_hammer {
                    match reconstruction.filter(|r| is_closing_step(r)) {
                        Some(r) => r.trim().to_string(),
                        None => {
                            attempts.push(attempt(AttemptOutcome::Fail));
                            continue;
                        }
                    }
                } else {
                    tactic_step(method)
                };
                if fill_gap(ast, site, &step).is_err() {
                    attempts.push(attempt(AttemptOutcome::Fail));
                    continue;
                }
                attempts.push(attempt(AttemptOutcome::Success));
                return Ok(GapResult::Closed {
                    closing_step: step,
                    tactic_index: (!is_hammer).then_some(index),
                    elapsed_ms: ms(start.elapsed()),
                    attempts,
                });
            }
            Reply::Fail { .. } => attempts.push(attempt(AttemptOutcome::Fail)),
            Reply::Timeout => attempts.push(attempt(AttemptOutcome::Timeout)),
        }
    }
    if start.elapsed() >= budget {
        Ok(GapResult::TimedOut {
            elapsed_ms: ms(start.elapsed()),
            attempts,
        })
    } else {
        Ok(GapResult::Failed { attempts })
    }
}

fn is_closing_step(text: &str) -> bool {
    matches!(parse_justification(text.trim()), Ok(j) if j != Justification::Gap)
}

/// The theorem statement alone, as sent to `init`.
fn statement_text(ast: &SketchAst) -> String {
    serialize(&SketchAst::new(ast.header.clone(), Vec::new()))
}

fn init_for(session: &mut ProverSession, ast: &SketchAst) -> Result<(), ProverError> {
    let theorem = ast.header.as_ref().and_then(|h| h.name.clone());
    session.init(theorem.as_deref(), &statement_text(ast))
}

/// Closes every gap in document order, substituting each closure before the
/// next gap is attempted, then verifies the filled proof.
pub fn prove_sketch(
    session: &mut ProverSession,
    ast: &SketchAst,
) -> Result<SketchOutcome, ProverError> {
    let report = check_no_cheat(&serialize(ast));
    if !report.clean {
        return Ok(SketchOutcome::Cheat {
            keywords: report.offending.into_iter().map(|(k, _)| k).collect(),
        });
    }
    init_for(session, ast)?;
    let mut current = ast.clone();
    let mut per_gap = Vec::new();
    while let Some(site) = extract_gaps(&current).into_iter().next() {
        let context = serialize_prefix(&current, &site.path).unwrap_or_default();
        let result = close_gap(session, &current, &site, &context)?;
        let closing = match &result {
            GapResult::Closed { closing_step, .. } => closing_step.clone(),
            _ => {
                per_gap.push(result);
                return Ok(SketchOutcome::Failed(SketchFailure {
                    failed_site: site,
                    partial: per_gap,
                }));
            }
        };
        per_gap.push(result);
        current = fill_gap(&current, &site, &closing).map_err(|e| {
            ProverError::Protocol(format!("closing step rejected after success: {e}"))
        })?;
    }
    let proof_text = serialize(&current);
    let verdict = verify_full(session, &proof_text)?;
    Ok(SketchOutcome::Proved(FullProofResult {
        proof_text,
        per_gap,
        verdict,
    }))
}

/// Checks a complete proof end to end. Proofs containing a cheating keyword
/// are rejected without contacting the backend.
pub fn verify_full(session: &mut ProverSession, proof_text: &str) -> Result<Verdict, ProverError> {
    let report = check_no_cheat(proof_text);
    if !report.clean {
        let words: Vec<&str> = report.offending.iter().map(|(k, _)| k.as_str()).collect();
        return Ok(Verdict::Invalid(format!(
            "cheating keyword: {}",
            words.join(", ")
        )));
    }
    let timeout = session.config().hammer_timeout_ms;
    let wait = Duration::from_millis(timeout + session.config().response_grace_ms);
    let command = Command::Step {
        text: proof_text.to_string(),
        timeout_ms: timeout,
        context: None,
        goal: None,
    };
    Ok(match session.call(command, wait)? {
        Reply::Ok { .. } => Verdict::Valid,
        Reply::Fail { reason } => Verdict::Invalid(reason),
        Reply::Timeout => Verdict::Invalid("verification timed out".into()),
    })
}

/// Runs the cascade on the whole statement as a single gap.
pub fn direct_prove(
    session: &mut ProverSession,
    formal_statement: &str,
) -> Result<DirectResult, ProverError> {
    let parsed = match dsp_sketch::parse_sketch(formal_statement) {
        Ok(ast) if ast.header.is_some() => ast,
        Ok(_) => {
            return Ok(DirectResult::Invalid {
                reason: "statement has no theorem header".into(),
                gap: None,
            })
        }
        Err(e) => {
            return Ok(DirectResult::Invalid {
                reason: e.to_string(),
                gap: None,
            })
        }
    };
    let ast = SketchAst::new(parsed.header, vec![ProofNode::Terminal(Justification::Gap)]);
    match prove_sketch(session, &ast)? {
        SketchOutcome::Proved(full) => {
            let gap = full.per_gap.into_iter().next().expect("one gap");
            Ok(match full.verdict {
                Verdict::Valid => DirectResult::Valid {
                    proof_text: full.proof_text,
                    gap,
                },
                Verdict::Invalid(reason) => DirectResult::Invalid {
                    reason,
                    gap: Some(gap),
                },
            })
        }
        SketchOutcome::Failed(f) => Ok(DirectResult::Invalid {
            reason: "cascade exhausted".into(),
            gap: f.partial.into_iter().next(),
        }),
        SketchOutcome::Cheat { keywords } => Ok(DirectResult::Invalid {
            reason: format!("cheating keyword: {}", keywords.join(", ")),
            gap: None,
        }),
    }
}
