//! Effective run configuration: command-line flags over environment over a
//! TOML file over built-in defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::llm::{CacheMode, HttpConfig};
use crate::prompting::{PromptConfig, PromptMode};
use crate::prover::ProverConfig;
use crate::scheduler::{BudgetPolicy, DraftSource};

pub const CACHE_MODE_ENV: &str = "DSP_CACHE_MODE";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    File { path: String, message: String },
    #[error("invalid value for {key}: {message}")]
    Value { key: String, message: String },
}

/// Completion endpoint settings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndpointConfig {
    /// Identifies the model in cache keys; record and replay must agree.
    pub id: String,
    /// HTTP endpoint; unused when `canned` is set.
    pub http: Option<HttpConfig>,
    /// Offline completions file standing in for the endpoint.
    pub canned: Option<PathBuf>,
    pub max_in_flight: usize,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            id: "default".into(),
            http: None,
            canned: None,
            max_in_flight: 4,
        }
    }
}

/// Everything a run depends on. Serialized into the run manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub pool: Option<PathBuf>,
    pub cache_mode: CacheMode,
    pub cache: Option<PathBuf>,
    pub endpoint: EndpointConfig,
    /// `scripted:<path>` or `external:<address>`.
    pub prover: Option<String>,
    pub prover_config: ProverConfig,
    pub policy: BudgetPolicy,
    pub prompt: PromptConfig,
    pub out: PathBuf,
    pub seed: u64,
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            pool: None,
            cache_mode: CacheMode::Replay,
            cache: None,
            endpoint: EndpointConfig::default(),
            prover: None,
            prover_config: ProverConfig::default(),
            policy: BudgetPolicy::default(),
            prompt: PromptConfig::default(),
            out: PathBuf::from("out"),
            seed: 0,
            jobs: 1,
        }
    }
}

/// Values given on the command line; `None` leaves lower layers in effect.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub dataset: Option<PathBuf>,
    pub pool: Option<PathBuf>,
    pub cache_mode: Option<String>,
    pub cache: Option<PathBuf>,
    pub canned: Option<PathBuf>,
    pub endpoint_url: Option<String>,
    pub drafts: Option<usize>,
    pub sketches_per_draft: Option<usize>,
    pub budget: Option<usize>,
    pub full_run: bool,
    pub human: bool,
    pub mode: Option<String>,
    pub k_examples: Option<usize>,
    pub prover: Option<String>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
}

fn value_error(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key: key.into(),
        message: message.into(),
    }
}

fn parse_cache_mode(key: &str, s: &str) -> Result<CacheMode, ConfigError> {
    CacheMode::parse(s)
        .ok_or_else(|| value_error(key, format!("`{s}` is not one of live, record, replay")))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::File {
            path: "<inline>".into(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let file_error = |message: String| ConfigError::File {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| file_error(e.to_string()))?;
        let mut config: Self = toml::from_str(&text).map_err(|e| file_error(e.to_string()))?;
        config.resolve_relative_to(path.parent().unwrap_or(Path::new(".")));
        Ok(config)
    }

    /// Makes file paths in a config file relative to the file's directory.
    fn resolve_relative_to(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p.as_mut().filter(|p| p.is_relative()) {
                *path = base.join(&*path);
            }
        };
        fix(&mut self.dataset);
        fix(&mut self.pool);
        fix(&mut self.cache);
        fix(&mut self.endpoint.canned);
        if let Some(spec) = &self.prover {
            if let Some(rest) = spec.strip_prefix("scripted:") {
                if Path::new(rest).is_relative() {
                    self.prover = Some(format!("scripted:{}", base.join(rest).display()));
                }
            }
        }
    }

    /// Layers environment and flag values over this configuration.
    pub fn layered(
        mut self,
        env_cache_mode: Option<&str>,
        flags: &Overrides,
    ) -> Result<Self, ConfigError> {
        if let Some(mode) = env_cache_mode.filter(|m| !m.is_empty()) {
            self.cache_mode = parse_cache_mode(CACHE_MODE_ENV, mode)?;
        }
        if let Some(mode) = &flags.cache_mode {
            self.cache_mode = parse_cache_mode("--cache-mode", mode)?;
        }
        macro_rules! set {
            ($field:expr, $flag:expr) => {
                if let Some(v) = $flag.clone() {
                    $field = v;
                }
            };
        }
        set!(self.dataset, flags.dataset.clone().map(Some));
        set!(self.pool, flags.pool.clone().map(Some));
        set!(self.cache, flags.cache.clone().map(Some));
        set!(self.endpoint.canned, flags.canned.clone().map(Some));
        if let Some(url) = &flags.endpoint_url {
            let mut http = self.endpoint.http.take().unwrap_or_default();
            http.url = url.clone();
            self.endpoint.http = Some(http);
        }
        set!(self.policy.drafts_per_problem, flags.drafts);
        set!(self.policy.sketches_per_draft, flags.sketches_per_draft);
        set!(self.policy.total_budget, flags.budget);
        if flags.full_run {
            self.policy.stop_on_first_success = false;
        }
        if flags.human {
            self.policy.draft_source = DraftSource::Human;
        }
        if let Some(mode) = &flags.mode {
            self.prompt.mode = PromptMode::parse(mode).ok_or_else(|| {
                value_error(
                    "--mode",
                    format!("`{mode}` is not one of full, no-comments, no-informal, full-proof"),
                )
            })?;
        }
        set!(self.prompt.k_examples, flags.k_examples);
        set!(self.prover, flags.prover.clone().map(Some));
        set!(self.seed, flags.seed);
        set!(self.jobs, flags.jobs);
        set!(self.out, flags.out.clone());
        self.policy = self.policy.normalized();
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.jobs == 0 {
            return Err(value_error("jobs", "must be at least 1"));
        }
        if self.prompt.k_examples == 0 {
            return Err(value_error("prompt.k_examples", "must be at least 1"));
        }
        if self.endpoint.max_in_flight == 0 {
            return Err(value_error("endpoint.max_in_flight", "must be at least 1"));
        }
        self.prover_config
            .validate()
            .map_err(|m| value_error("prover_config", m))?;
        if self.policy.attempts() > self.policy.total_budget {
            return Err(value_error(
                "policy",
                format!(
                    "{} drafts x {} sketches exceeds the budget of {}",
                    self.policy.drafts_per_problem,
                    self.policy.sketches_per_draft,
                    self.policy.total_budget
                ),
            ));
        }
        Ok(())
    }
}
