use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{ClientError, CompletionBackend, CompletionRequest, CompletionResponse, Usage};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpConfig {
    pub url: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: Option<String>,
    /// Model name sent in the request body, if the endpoint wants one.
    pub model: Option<String>,
    pub timeout_ms: u64,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            url: "http://127.0.0.1:8000/v1/completions".into(),
            api_key_env: None,
            model: None,
            timeout_ms: 120_000,
        }
    }
}

/// Backend for completion endpoints taking
/// `{prompt, max_tokens, temperature, top_p, n, stop}` and answering
/// `{choices: [{text}]}`.
pub struct HttpBackend {
    config: HttpConfig,
    api_key: Option<String>,
    agent: ureq::Agent,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    text: String,
}

#[derive(Deserialize)]
struct WireUsage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

impl HttpBackend {
    /// Fails when the configured credential variable is unset.
    pub fn new(config: HttpConfig) -> Result<Self, ClientError> {
        let api_key = match &config.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                ClientError::InvalidConfig(format!("credential variable {var} is not set"))
            })?),
            None => None,
        };
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build();
        Ok(Self {
            config,
            api_key,
            agent,
        })
    }
}

impl CompletionBackend for HttpBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ClientError> {
        let c = &request.config;
        let mut body = json!({
            "prompt": request.prompt,
            "max_tokens": c.max_tokens,
            "temperature": c.temperature,
            "top_p": c.top_p,
            "n": c.n,
            "stop": c.stop_sequences,
        });
        if let Some(model) = &self.config.model {
            body["model"] = json!(model);
        }
        let mut req = self.agent.post(&self.config.url);
        if let Some(key) = &self.api_key {
            req = req.set("Authorization", &format!("Bearer {key}"));
        }
        let started = Instant::now();
        let response = match req.send_json(body) {
            Ok(r) => r,
            Err(ureq::Error::Status(status, r)) => {
                let body = r.into_string().unwrap_or_default();
                return Err(ClientError::Endpoint { status, body });
            }
            Err(ureq::Error::Transport(t)) => {
                let message = t.to_string();
                if message.contains("timed out") {
                    return Err(ClientError::Timeout);
                }
                return Err(ClientError::Transport(message));
            }
        };
        let wire: WireResponse = response.into_json().map_err(|e| ClientError::Endpoint {
            status: 200,
            body: format!("malformed response body: {e}"),
        })?;
        let mut completions: Vec<String> = wire.choices.into_iter().map(|c| c.text).collect();
        completions.truncate(c.n as usize);
        Ok(CompletionResponse {
            completions,
            usage: wire
                .usage
                .map(|u| Usage {
                    prompt_units: u.prompt_tokens,
                    completion_units: u.completion_tokens,
                })
                .unwrap_or_default(),
            latency_ms: started.elapsed().as_millis() as u64,
        })
    }
}
