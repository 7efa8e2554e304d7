//! Rule-driven mock prover.
//!
//! A script is a JSON document:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "rules": [
//!     {"theorem": "mathd_*", "goal": {"substring": "4 * x = 168"}, "outcome": {"close_at_tactic": 0}},
//!     {"goal": "statement", "outcome": {"close_by_hammer": "by (smt (z3) assms)"}, "latency_ms": 20},
//!     {"goal": {"regex": "^gcd"}, "outcome": {"timeout": 500}}
//!   ],
//!   "default": {"outcome": "fail"},
//!   "verify": [{"theorem": "imo_*", "contains": "by blast", "accept": false, "reason": "blast loops"}],
//!   "verify_default_accept": true
//! }
//! ```
//!
//! The first rule whose `theorem` glob and `goal` matcher both match decides
//! the fate of a gap. Goal matchers are `"any"`, `"statement"` (the goal is
//! the theorem's own `shows` and nothing precedes the gap in the proof), `{"exact": ..}`, `{"substring": ..}`,
//! `{"regex": ..}` and `{"glob": ..}`. Outcomes are `{"close_at_tactic": i}`
//! (only the i-th cascade tactic succeeds), `{"close_by_hammer": step}`,
//! `"fail"`, `{"timeout": ms}` (every command takes `ms`) and `"crash"` (the
//! backend drops the connection). `latency_ms` delays every reply. A command
//! whose delay reaches its own timeout answers `timeout` at the timeout.
//!
//! Goal-less `step` commands are whole-proof checks and are decided by the
//! first matching `verify` rule, or `verify_default_accept`.

use std::path::Path;
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::config::{tactic_step, DEFAULT_TACTICS};
use super::protocol::{Command, Reply, Request, Response};

pub const SCRIPT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalMatcher {
    #[default]
    Any,
    Statement,
    Exact(String),
    Substring(String),
    Regex(String),
    Glob(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    CloseAtTactic(usize),
    CloseByHammer(String),
    Fail,
    Timeout(u64),
    Crash,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theorem: Option<String>,
    #[serde(default)]
    pub goal: GoalMatcher,
    pub outcome: Outcome,
    #[serde(default)]
    pub latency_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefaultRule {
    pub outcome: Outcome,
    #[serde(default)]
    pub latency_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyRule {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theorem: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contains: Option<String>,
    pub accept: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptFile {
    pub schema_version: u32,
    /// Cascade the script's `close_at_tactic` indices refer to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tactics: Option<Vec<String>>,
    #[serde(default)]
    pub rules: Vec<RuleSpec>,
    pub default: DefaultRule,
    #[serde(default)]
    pub verify: Vec<VerifyRule>,
    #[serde(default = "yes")]
    pub verify_default_accept: bool,
}

#[derive(Debug, thiserror::Error)]
#[error("prover script {origin}: {message}")]
pub struct ScriptError {
    pub origin: String,
    pub message: String,
}

#[derive(Debug)]
enum CompiledMatcher {
    Any,
    Statement,
    Exact(String),
    Substring(String),
    Pattern(Regex),
}

#[derive(Debug)]
struct CompiledRule {
    theorem: Option<Regex>,
    goal: CompiledMatcher,
    outcome: Outcome,
    latency: Duration,
}

#[derive(Debug)]
struct CompiledVerify {
    theorem: Option<Regex>,
    contains: Option<String>,
    accept: bool,
    reason: String,
}

/// A validated, ready-to-run script.
#[derive(Debug)]
pub struct Script {
    tactic_steps: Vec<String>,
    rules: Vec<CompiledRule>,
    default: CompiledRule,
    verify: Vec<CompiledVerify>,
    verify_default_accept: bool,
}

fn glob_regex(glob: &str) -> Result<Regex, regex::Error> {
    let mut re = String::from("^");
    for c in glob.chars() {
        match c {
            '*' => re.push_str(".*"),
            '?' => re.push('.'),
            c => re.push_str(&regex::escape(&c.to_string())),
        }
    }
    re.push('$');
    Regex::new(&re)
}

impl Script {
    pub fn load(path: &Path) -> Result<Self, ScriptError> {
        let origin = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ScriptError {
            origin: origin.clone(),
            message: e.to_string(),
        })?;
        Self::from_json(&text, &origin)
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self, ScriptError> {
        let file: ScriptFile = serde_json::from_str(text).map_err(|e| ScriptError {
            origin: origin.to_string(),
            message: e.to_string(),
        })?;
        Self::compile(file, origin)
    }

    pub fn compile(file: ScriptFile, origin: &str) -> Result<Self, ScriptError> {
        let err = |message: String| ScriptError {
            origin: origin.to_string(),
            message,
        };
        if file.schema_version != SCRIPT_SCHEMA_VERSION {
            return Err(err(format!(
                "unsupported schema_version {}",
                file.schema_version
            )));
        }
        let tactics: Vec<String> = file
            .tactics
            .unwrap_or_else(|| DEFAULT_TACTICS.iter().map(|t| t.to_string()).collect());
        let theorem_glob = |g: &Option<String>, what: &str| -> Result<Option<Regex>, ScriptError> {
            g.as_deref()
                .map(glob_regex)
                .transpose()
                .map_err(|e| err(format!("{what}: bad theorem pattern: {e}")))
        };
        let compile_rule = |r: &RuleSpec, what: &str| -> Result<CompiledRule, ScriptError> {
            let goal = match &r.goal {
                GoalMatcher::Any => CompiledMatcher::Any,
                GoalMatcher::Statement => CompiledMatcher::Statement,
                GoalMatcher::Exact(s) => CompiledMatcher::Exact(s.clone()),
                GoalMatcher::Substring(s) => CompiledMatcher::Substring(s.clone()),
                GoalMatcher::Regex(s) => CompiledMatcher::Pattern(
                    Regex::new(s).map_err(|e| err(format!("{what}: bad regex: {e}")))?,
                ),
                GoalMatcher::Glob(s) => CompiledMatcher::Pattern(
                    glob_regex(s).map_err(|e| err(format!("{what}: bad glob: {e}")))?,
                ),
            };
            if let Outcome::CloseAtTactic(i) = r.outcome {
                if i >= tactics.len() {
                    return Err(err(format!("{what}: tactic index {i} out of range")));
                }
            }
            Ok(CompiledRule {
                theorem: theorem_glob(&r.theorem, what)?,
                goal,
                outcome: r.outcome.clone(),
                latency: Duration::from_millis(r.latency_ms),
            })
        };
        let rules = file
            .rules
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let what = r.name.clone().unwrap_or_else(|| format!("rule {i}"));
                compile_rule(r, &what)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let default = compile_rule(
            &RuleSpec {
                name: None,
                theorem: None,
                goal: GoalMatcher::Any,
                outcome: file.default.outcome.clone(),
                latency_ms: file.default.latency_ms,
            },
            "default rule",
        )?;
        let verify = file
            .verify
            .iter()
            .enumerate()
            .map(|(i, v)| {
                Ok(CompiledVerify {
                    theorem: theorem_glob(&v.theorem, &format!("verify rule {i}"))?,
                    contains: v.contains.clone(),
                    accept: v.accept,
                    reason: v
                        .reason
                        .clone()
                        .unwrap_or_else(|| "rejected by script".into()),
                })
            })
            .collect::<Result<Vec<_>, ScriptError>>()?;
        Ok(Self {
            tactic_steps: tactics.iter().map(|t| tactic_step(t)).collect(),
            rules,
            default,
            verify,
            verify_default_accept: file.verify_default_accept,
        })
    }

    fn rule_for(
        &self,
        theorem: Option<&str>,
        shows: Option<&str>,
        top_level: bool,
        goal: &str,
    ) -> &CompiledRule {
        self.rules
            .iter()
            .find(|r| {
                let theorem_ok = match (&r.theorem, theorem) {
                    (None, _) => true,
                    (Some(re), Some(t)) => re.is_match(t),
                    (Some(_), None) => false,
                };
                theorem_ok
                    && match &r.goal {
                        CompiledMatcher::Any => true,
                        CompiledMatcher::Statement => top_level && shows == Some(goal),
                        CompiledMatcher::Exact(s) => s == goal,
                        CompiledMatcher::Substring(s) => goal.contains(s.as_str()),
                        CompiledMatcher::Pattern(re) => re.is_match(goal),
                    }
            })
            .unwrap_or(&self.default)
    }
}

/// What the mock backend does with one request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    /// Wait `delay`, then send `response`.
    Reply { delay: Duration, response: Response },
    /// Drop the connection without answering.
    Crash,
}

/// Per-connection state of the mock backend.
pub struct ScriptedProver<'a> {
    script: &'a Script,
    theorem: Option<String>,
    shows: Option<String>,
    statement: String,
    next_state: u64,
}

impl<'a> ScriptedProver<'a> {
    pub fn new(script: &'a Script) -> Self {
        Self {
            script,
            theorem: None,
            shows: None,
            statement: String::new(),
            next_state: 0,
        }
    }

    fn ok(&mut self, reconstruction: Option<String>) -> Reply {
        self.next_state += 1;
        Reply::Ok {
            state_id: self.next_state,
            reconstruction,
        }
    }

    fn rule_for(&self, context: Option<&str>, goal: &str) -> &'a CompiledRule {
        let top_level = context.is_none_or(|c| c.trim() == self.statement);
        self.script.rule_for(
            self.theorem.as_deref(),
            self.shows.as_deref(),
            top_level,
            goal,
        )
    }

    pub fn handle(&mut self, request: &Request) -> Action {
        let reply = |delay: Duration, reply: Reply| Action::Reply {
            delay,
            response: Response {
                id: request.id,
                reply,
            },
        };
        match &request.command {
            Command::Init {
                statement, theorem, ..
            } => {
                let header = dsp_sketch::parse_sketch(statement)
                    .ok()
                    .and_then(|a| a.header);
                self.theorem = theorem
                    .clone()
                    .or_else(|| header.as_ref().and_then(|h| h.name.clone()));
                self.shows = header.map(|h| h.shows);
                self.statement = statement.trim().to_string();
                let r = self.ok(None);
                reply(Duration::ZERO, r)
            }
            Command::Reset => {
                let r = self.ok(None);
                reply(Duration::ZERO, r)
            }
            Command::Quit => reply(
                Duration::ZERO,
                Reply::Ok {
                    state_id: 0,
                    reconstruction: None,
                },
            ),
            Command::Step {
                text, goal: None, ..
            } => {
                let theorem = self.theorem.as_deref();
                let decision = self.script.verify.iter().find(|v| {
                    v.theorem
                        .as_ref()
                        .is_none_or(|re| theorem.is_some_and(|t| re.is_match(t)))
                        && v.contains
                            .as_ref()
                            .is_none_or(|c| text.contains(c.as_str()))
                });
                let r = match decision {
                    Some(v) if v.accept => self.ok(None),
                    Some(v) => Reply::Fail {
                        reason: v.reason.clone(),
                    },
                    None if self.script.verify_default_accept => self.ok(None),
                    None => Reply::Fail {
                        reason: "rejected by script".into(),
                    },
                };
                reply(Duration::ZERO, r)
            }
            Command::Step {
                text,
                timeout_ms,
                goal: Some(goal),
                context,
            } => {
                let rule = self.rule_for(context.as_deref(), goal);
                let success = match &rule.outcome {
                    Outcome::CloseAtTactic(i) => self.script.tactic_steps[*i] == *text,
                    _ => false,
                };
                self.timed(rule, *timeout_ms, success.then_some(None), request.id)
            }
            Command::Hammer {
                timeout_ms,
                goal: Some(goal),
                context,
            } => {
                let rule = self.rule_for(context.as_deref(), goal);
                let success = match &rule.outcome {
                    Outcome::CloseByHammer(step) => Some(Some(step.clone())),
                    _ => None,
                };
                self.timed(rule, *timeout_ms, success, request.id)
            }
            Command::Hammer { goal: None, .. } => reply(
                Duration::ZERO,
                Reply::Fail {
                    reason: "hammer needs a goal".into(),
                },
            ),
        }
    }

    /// Applies the rule's delays. `success` carries the reconstruction of a
    /// successful command.
    fn timed(
        &mut self,
        rule: &CompiledRule,
        timeout_ms: u64,
        success: Option<Option<String>>,
        id: u64,
    ) -> Action {
        if rule.outcome == Outcome::Crash {
            return Action::Crash;
        }
        let limit = Duration::from_millis(timeout_ms);
        let mut delay = rule.latency;
        if let Outcome::Timeout(ms) = rule.outcome {
            delay += Duration::from_millis(ms);
        }
        let reply = if delay >= limit {
            delay = limit;
            Reply::Timeout
        } else {
            match success {
                Some(reconstruction) => self.ok(reconstruction),
                None => Reply::Fail {
                    reason: "no proof found".into(),
                },
            }
        };
        Action::Reply {
            delay,
            response: Response { id, reply },
        }
    }
}

/// Serves requests read line by line until `quit`, a crash rule or the end of
/// input. `emit` returns false when the peer is gone.
pub fn serve_lines<I, F>(script: &Script, lines: I, mut emit: F)
where
    I: IntoIterator<Item = String>,
    F: FnMut(String) -> bool,
{
    let mut prover = ScriptedProver::new(script);
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let request: Request = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                tracing::warn!(error = %e, "malformed request frame");
                continue;
            }
        };
        let quit = matches!(request.command, Command::Quit);
        match prover.handle(&request) {
            Action::Crash => return,
            Action::Reply { delay, response } => {
                if !delay.is_zero() {
                    std::thread::sleep(delay);
                }
                if !emit(super::protocol::encode(&response)) || quit {
                    return;
                }
            }
        }
    }
}
