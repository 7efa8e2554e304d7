//! Text-completion client with a record/replay cache.

mod cache;
mod canned;
mod client;
mod http;

use serde::{Deserialize, Serialize};

pub use cache::{cache_key, CacheError, ReplayCache};
pub use canned::{CannedBackend, CannedCompletions};
pub use client::{CompletionClient, RetryPolicy};
pub use http::{HttpBackend, HttpConfig};

use crate::prompting::STOP_SEQUENCE;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
    pub n: u32,
    pub stop_sequences: Vec<String>,
}

impl SamplingConfig {
    /// Nucleus sampling for informal drafts.
    pub fn draft(n: u32) -> Self {
        Self {
            temperature: 0.6,
            top_p: 0.95,
            max_tokens: 1024,
            n,
            stop_sequences: vec![STOP_SEQUENCE.to_string()],
        }
    }

    /// Greedy decoding for formal sketches.
    pub fn sketch() -> Self {
        Self {
            temperature: 0.0,
            top_p: 1.0,
            max_tokens: 2048,
            n: 1,
            stop_sequences: vec![STOP_SEQUENCE.to_string()],
        }
    }

    pub fn is_greedy(&self) -> bool {
        self.temperature == 0.0
    }

    pub fn validate(&self) -> Result<(), ClientError> {
        let bad = |m: &str| Err(ClientError::InvalidConfig(m.to_string()));
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return bad("temperature must be a finite number >= 0");
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return bad("top_p must lie in (0, 1]");
        }
        if self.max_tokens == 0 {
            return bad("max_tokens must be positive");
        }
        if self.is_greedy() && self.n > 1 {
            return bad("greedy decoding with n > 1 yields identical samples");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub config: SamplingConfig,
    pub endpoint_id: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_units: u64,
    pub completion_units: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub completions: Vec<String>,
    pub usage: Usage,
    pub latency_ms: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CacheMode {
    /// Call the endpoint, no cache.
    #[default]
    Live,
    /// Serve from cache when possible, otherwise call the endpoint and store.
    Record,
    /// Serve exclusively from cache.
    Replay,
}

impl CacheMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "live" => Some(Self::Live),
            "record" => Some(Self::Record),
            "replay" => Some(Self::Replay),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Live => "live",
            Self::Record => "record",
            Self::Replay => "replay",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("endpoint returned status {status}: {body}")]
    Endpoint { status: u16, body: String },
    #[error("endpoint unreachable: {0}")]
    Transport(String),
    #[error("request timed out")]
    Timeout,
    #[error("no cached completion for this request (key {key})")]
    CacheMiss { key: String },
    #[error("invalid sampling config: {0}")]
    InvalidConfig(String),
    #[error("no endpoint configured")]
    NoEndpoint,
    #[error(transparent)]
    Cache(#[from] CacheError),
}

impl ClientError {
    /// Whether a retry may succeed.
    pub fn is_transient(&self) -> bool {
        match self {
            ClientError::Endpoint { status, .. } => *status == 429 || *status >= 500,
            ClientError::Transport(_) | ClientError::Timeout => true,
            _ => false,
        }
    }
}

/// Something that turns a request into completions.
pub trait CompletionBackend: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ClientError>;
}

fn normalize(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Drops completions that repeat an earlier one up to whitespace. Kept
/// completions are trimmed and stay in first-occurrence order.
pub fn dedup(completions: &[String]) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    completions
        .iter()
        .filter(|c| seen.insert(normalize(c)))
        .map(|c| c.trim().to_string())
        .collect()
}
