use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{ClientError, CompletionBackend, CompletionRequest, CompletionResponse, Usage};
use crate::dataset::Problem;
use crate::prompting::{is_sketch_prompt, target_formal_statement, target_informal_statement};

/// Pre-written completions per problem id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CannedCompletions {
    pub schema_version: u32,
    /// Informal drafts; a request for n drafts gets the first n (cycling).
    #[serde(default)]
    pub drafts: BTreeMap<String, Vec<String>>,
    /// Sketch completions, handed out in order per problem (cycling).
    #[serde(default)]
    pub sketches: BTreeMap<String, Vec<String>>,
}

impl CannedCompletions {
    pub fn load(path: &Path) -> Result<Self, ClientError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ClientError::InvalidConfig(format!("canned completions {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text).map_err(|e| {
            ClientError::InvalidConfig(format!("canned completions {}: {e}", path.display()))
        })
    }
}

/// Offline stand-in for a model endpoint. Recognises the target problem of a
/// prompt by its statement.
pub struct CannedBackend {
    canned: CannedCompletions,
    by_formal: HashMap<String, String>,
    by_informal: HashMap<String, String>,
    next_sketch: Mutex<HashMap<String, usize>>,
}

impl CannedBackend {
    pub fn new(canned: CannedCompletions, problems: &[Problem]) -> Self {
        Self {
            canned,
            by_formal: problems
                .iter()
                .map(|p| (p.formal_statement.trim_end().to_string(), p.id.clone()))
                .collect(),
            by_informal: problems
                .iter()
                .map(|p| (p.informal_statement.trim_end().to_string(), p.id.clone()))
                .collect(),
            next_sketch: Mutex::new(HashMap::new()),
        }
    }

    fn unknown(what: &str) -> ClientError {
        ClientError::Endpoint {
            status: 404,
            body: format!("no canned completion for {what}"),
        }
    }
}

impl CompletionBackend for CannedBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ClientError> {
        let prompt = &request.prompt;
        let n = request.config.n as usize;
        let completions = if is_sketch_prompt(prompt) {
            let id = target_formal_statement(prompt)
                .and_then(|s| self.by_formal.get(s))
                .ok_or_else(|| Self::unknown("this sketch prompt"))?;
            let list = self
                .canned
                .sketches
                .get(id)
                .filter(|l| !l.is_empty())
                .ok_or_else(|| Self::unknown(id))?;
            let mut counters = self.next_sketch.lock().expect("counter lock");
            let counter = counters.entry(id.clone()).or_default();
            let out = (0..n)
                .map(|i| list[(*counter + i) % list.len()].clone())
                .collect();
            *counter += n;
            out
        } else {
            let id = target_informal_statement(prompt)
                .and_then(|s| self.by_informal.get(s))
                .ok_or_else(|| Self::unknown("this draft prompt"))?;
            let list = self
                .canned
                .drafts
                .get(id)
                .filter(|l| !l.is_empty())
                .ok_or_else(|| Self::unknown(id))?;
            (0..n).map(|i| list[i % list.len()].clone()).collect()
        };
        Ok(CompletionResponse {
            completions,
            usage: Usage::default(),
            latency_ms: 0,
        })
    }
}
