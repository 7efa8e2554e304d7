use serde::{Deserialize, Serialize};

/// Quick tactics tried, in order, before the hammer.
pub const DEFAULT_TACTICS: [&str; 11] = [
    "auto",
    "simp",
    "blast",
    "fastforce",
    "force",
    "eval",
    "presburger",
    "sos",
    "arith",
    "linarith",
    "auto simp: field_simps",
];

pub const HAMMER: &str = "sledgehammer";

const DEFAULT_TACTIC_TIMEOUT_MS: u64 = 10_000;
const DEFAULT_HAMMER_TIMEOUT_MS: u64 = 120_000;
const DEFAULT_MARGIN_MS: u64 = 5_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProverConfig {
    pub tactics: Vec<String>,
    pub tactic_timeout_ms: u64,
    pub hammer_timeout_ms: u64,
    /// Wall-clock cap for closing one gap, cascade and hammer included.
    pub per_gap_budget_ms: u64,
    /// Theory context sent when a theorem is initialised.
    pub theory: String,
    pub connect_timeout_ms: u64,
    /// Extra time granted to a reply after its command timeout elapsed.
    pub response_grace_ms: u64,
    /// Session reopen attempts after the backend dies.
    pub max_reopen: u32,
}

impl Default for ProverConfig {
    fn default() -> Self {
        Self::with_timeouts(
            DEFAULT_TACTIC_TIMEOUT_MS,
            DEFAULT_HAMMER_TIMEOUT_MS,
            DEFAULT_MARGIN_MS,
        )
    }
}

impl ProverConfig {
    /// Default cascade with the given timeouts; the per-gap budget is the sum
    /// of all timeouts plus `margin_ms`.
    pub fn with_timeouts(tactic_timeout_ms: u64, hammer_timeout_ms: u64, margin_ms: u64) -> Self {
        let tactics: Vec<String> = DEFAULT_TACTICS.iter().map(|t| t.to_string()).collect();
        Self {
            per_gap_budget_ms: tactics.len() as u64 * tactic_timeout_ms
                + hammer_timeout_ms
                + margin_ms,
            tactics,
            tactic_timeout_ms,
            hammer_timeout_ms,
            theory: "Complex_Main".into(),
            connect_timeout_ms: 10_000,
            response_grace_ms: margin_ms.min(1_000),
            max_reopen: 2,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.tactics.is_empty() {
            return Err("tactic list is empty".into());
        }
        if self.tactic_timeout_ms == 0 || self.hammer_timeout_ms == 0 || self.per_gap_budget_ms == 0
        {
            return Err("timeouts must be positive".into());
        }
        Ok(())
    }
}

/// The closing step that applies `tactic`.
pub fn tactic_step(tactic: &str) -> String {
    if tactic.contains(char::is_whitespace) {
        format!("by ({tactic})")
    } else {
        format!("by {tactic}")
    }
}
