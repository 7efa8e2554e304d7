use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{
    cache_key, CacheMode, ClientError, CompletionBackend, CompletionRequest, CompletionResponse,
    ReplayCache, Usage,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 4,
            base_delay_ms: 500,
            max_delay_ms: 8_000,
        }
    }
}

impl RetryPolicy {
    pub fn delay(&self, retry: u32) -> Duration {
        let ms = self.base_delay_ms.saturating_mul(1u64 << retry.min(20));
        Duration::from_millis(ms.min(self.max_delay_ms))
    }
}

/// Counting semaphore bounding in-flight backend calls.
struct Limiter {
    capacity: usize,
    in_flight: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a Limiter);

impl Limiter {
    fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            in_flight: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_flight.lock().expect("limiter lock");
        while *n >= self.capacity {
            n = self.freed.wait(n).expect("limiter lock");
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.in_flight.lock().expect("limiter lock") -= 1;
        self.0.freed.notify_one();
    }
}

/// Shareable completion client. Every completion of a request is cached
/// under its own sample index.
pub struct CompletionClient {
    endpoint_id: String,
    mode: CacheMode,
    backend: Option<Arc<dyn CompletionBackend>>,
    cache: Option<Arc<ReplayCache>>,
    limiter: Limiter,
    retry: RetryPolicy,
}

impl CompletionClient {
    pub fn new(
        endpoint_id: impl Into<String>,
        mode: CacheMode,
        backend: Option<Arc<dyn CompletionBackend>>,
        cache: Option<Arc<ReplayCache>>,
        max_in_flight: usize,
        retry: RetryPolicy,
    ) -> Result<Self, ClientError> {
        match mode {
            CacheMode::Live | CacheMode::Record if backend.is_none() => {
                return Err(ClientError::NoEndpoint)
            }
            CacheMode::Record | CacheMode::Replay if cache.is_none() => {
                return Err(ClientError::InvalidConfig(format!(
                    "cache mode {} needs a cache file",
                    mode.as_str()
                )))
            }
            _ => {}
        }
        Ok(Self {
            endpoint_id: endpoint_id.into(),
            mode,
            backend,
            cache,
            limiter: Limiter::new(max_in_flight),
            retry,
        })
    }

    pub fn mode(&self) -> CacheMode {
        self.mode
    }

    pub fn endpoint_id(&self) -> &str {
        &self.endpoint_id
    }

    pub fn request(&self, prompt: &str, config: super::SamplingConfig) -> CompletionRequest {
        CompletionRequest {
            prompt: prompt.to_string(),
            config,
            endpoint_id: self.endpoint_id.clone(),
        }
    }

    pub fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ClientError> {
        request.config.validate()?;
        let started = Instant::now();
        let n = request.config.n;
        let keys: Vec<String> = (0..n)
            .map(|i| cache_key(&request.endpoint_id, &request.prompt, &request.config, i))
            .collect();

        match self.mode {
            CacheMode::Live => self.call_backend(request),
            CacheMode::Replay => {
                let cache = self.cache.as_ref().expect("checked in new");
                let completions: Vec<String> = keys.iter().map_while(|k| cache.get(k)).collect();
                if completions.is_empty() && n > 0 {
                    return Err(ClientError::CacheMiss {
                        key: keys[0].clone(),
                    });
                }
                Ok(CompletionResponse {
                    completions,
                    usage: Usage::default(),
                    latency_ms: started.elapsed().as_millis() as u64,
                })
            }
            CacheMode::Record => {
                let cache = self.cache.as_ref().expect("checked in new");
                let cached: Vec<Option<String>> = keys.iter().map(|k| cache.get(k)).collect();
                if cached.iter().all(Option::is_some) {
                    return Ok(CompletionResponse {
                        completions: cached.into_iter().flatten().collect(),
                        usage: Usage::default(),
                        latency_ms: started.elapsed().as_millis() as u64,
                    });
                }
                let fresh = self.call_backend(request)?;
                let mut completions = Vec::with_capacity(fresh.completions.len());
                for (key, text) in keys.iter().zip(&fresh.completions) {
                    completions.push(cache.put(key, text)?);
                }
                Ok(CompletionResponse {
                    completions,
                    ..fresh
                })
            }
        }
    }

    fn call_backend(&self, request: &CompletionRequest) -> Result<CompletionResponse, ClientError> {
        let backend = self.backend.as_ref().ok_or(ClientError::NoEndpoint)?;
        let mut retry = 0;
        loop {
            let result = {
                let _permit = self.limiter.acquire();
                backend.complete(request)
            };
            match result {
                Ok(mut r) => {
                    r.completions.truncate(request.config.n as usize);
                    return Ok(r);
                }
                Err(e) if e.is_transient() && retry < self.retry.max_retries => {
                    let delay = self.retry.delay(retry);
                    tracing::warn!(error = %e, retry, ?delay, "transient endpoint failure, retrying");
                    std::thread::sleep(delay);
                    retry += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
}
