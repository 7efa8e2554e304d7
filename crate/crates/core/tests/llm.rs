use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use dsp_core::llm::{
    cache_key, dedup, CacheMode, ClientError, CompletionBackend, CompletionClient,
    CompletionRequest, CompletionResponse, HttpBackend, HttpConfig, ReplayCache, RetryPolicy,
    SamplingConfig, Usage,
};

/// A completion endpoint answering from a closure of (request number, body).
/// Request body and authorization header of one request.
type Seen = (serde_json::Value, Option<String>);

struct Endpoint {
    url: String,
    hits: Arc<AtomicUsize>,
    bodies: Arc<Mutex<Vec<Seen>>>,
}

fn endpoint<F>(respond: F) -> Endpoint
where
    F: Fn(usize, &serde_json::Value) -> (u16, String) + Send + 'static,
{
    let server = tiny_http::Server::http("127.0.0.1:0").unwrap();
    let url = format!(
        "http://{}/v1/completions",
        server.server_addr().to_ip().unwrap()
    );
    let hits = Arc::new(AtomicUsize::new(0));
    let bodies = Arc::new(Mutex::new(Vec::new()));
    let (h, b) = (hits.clone(), bodies.clone());
    thread::spawn(move || {
        for mut request in server.incoming_requests() {
            let mut text = String::new();
            request.as_reader().read_to_string(&mut text).unwrap();
            let body: serde_json::Value = serde_json::from_str(&text).unwrap_or_default();
            let auth = request
                .headers()
                .iter()
                .find(|h| h.field.equiv("Authorization"))
                .map(|h| h.value.to_string());
            let n = h.fetch_add(1, Ordering::SeqCst);
            b.lock().unwrap().push((body.clone(), auth));
            let (status, reply) = respond(n, &body);
            let _ =
                request.respond(tiny_http::Response::from_string(reply).with_status_code(status));
        }
    });
    Endpoint { url, hits, bodies }
}

fn choices(n: u64, tag: &str) -> String {
    let list: Vec<serde_json::Value> = (0..n)
        .map(|i| serde_json::json!({"text": format!("{tag}{i}")}))
        .collect();
    serde_json::json!({"choices": list, "usage": {"prompt_tokens": 5, "completion_tokens": 7}})
        .to_string()
}

fn fast_retry() -> RetryPolicy {
    RetryPolicy {
        max_retries: 3,
        base_delay_ms: 1,
        max_delay_ms: 5,
    }
}

fn http(url: &str) -> Arc<dyn CompletionBackend> {
    Arc::new(
        HttpBackend::new(HttpConfig {
            url: url.into(),
            timeout_ms: 5_000,
            ..HttpConfig::default()
        })
        .unwrap(),
    )
}

fn live(backend: Arc<dyn CompletionBackend>) -> CompletionClient {
    CompletionClient::new("ep", CacheMode::Live, Some(backend), None, 4, fast_retry()).unwrap()
}

#[test]
fn http_backend_sends_sampling_fields_and_reads_choices() {
    let ep = endpoint(|_, body| (200, choices(body["n"].as_u64().unwrap(), "c")));
    let client = live(http(&ep.url));
    let response = client
        .complete(&client.request("prompt", SamplingConfig::draft(3)))
        .unwrap();
    assert_eq!(response.completions, vec!["c0", "c1", "c2"]);
    assert_eq!(
        response.usage,
        Usage {
            prompt_units: 5,
            completion_units: 7
        }
    );
    let (body, auth) = ep.bodies.lock().unwrap()[0].clone();
    assert_eq!(body["prompt"], "prompt");
    assert_eq!(body["temperature"], 0.6);
    assert_eq!(body["top_p"], 0.95);
    assert_eq!(body["stop"][0], "Informal Statement:");
    assert!(auth.is_none());
}

#[test]
fn credential_variable_becomes_a_bearer_token() {
    let ep = endpoint(|_, _| (200, choices(1, "x")));
    std::env::set_var("DSP_TEST_TOKEN_PRESENT", "s3cret");
    let backend = HttpBackend::new(HttpConfig {
        url: ep.url.clone(),
        api_key_env: Some("DSP_TEST_TOKEN_PRESENT".into()),
        ..HttpConfig::default()
    })
    .unwrap();
    let client = live(Arc::new(backend));
    client
        .complete(&client.request("p", SamplingConfig::sketch()))
        .unwrap();
    assert_eq!(
        ep.bodies.lock().unwrap()[0].1.as_deref(),
        Some("Bearer s3cret")
    );

    let missing = HttpBackend::new(HttpConfig {
        api_key_env: Some("DSP_TEST_TOKEN_ABSENT".into()),
        ..HttpConfig::default()
    });
    assert!(matches!(missing, Err(ClientError::InvalidConfig(_))));
}

#[test]
fn transient_failures_are_retried() {
    let ep = endpoint(|n, _| match n {
        0 => (503, "busy".into()),
        1 => (429, "slow down".into()),
        _ => (200, choices(1, "ok")),
    });
    let client = live(http(&ep.url));
    let response = client
        .complete(&client.request("p", SamplingConfig::sketch()))
        .unwrap();
    assert_eq!(response.completions, vec!["ok0"]);
    assert_eq!(ep.hits.load(Ordering::SeqCst), 3);
}

#[test]
fn retries_are_bounded_and_client_errors_are_not_retried() {
    let ep = endpoint(|_, _| (500, "down".into()));
    let client = live(http(&ep.url));
    let err = client
        .complete(&client.request("p", SamplingConfig::sketch()))
        .unwrap_err();
    assert!(matches!(err, ClientError::Endpoint { status: 500, .. }));
    assert_eq!(ep.hits.load(Ordering::SeqCst), 4);

    let ep = endpoint(|_, _| (400, "bad".into()));
    let client = live(http(&ep.url));
    let err = client
        .complete(&client.request("p", SamplingConfig::sketch()))
        .unwrap_err();
    assert!(matches!(err, ClientError::Endpoint { status: 400, .. }));
    assert_eq!(ep.hits.load(Ordering::SeqCst), 1);
}

#[test]
fn malformed_bodies_and_dead_endpoints_are_reported() {
    let ep = endpoint(|_, _| (200, "{\"nope\": 1}".into()));
    let err = live(http(&ep.url))
        .complete(&CompletionRequest {
            prompt: "p".into(),
            config: SamplingConfig::sketch(),
            endpoint_id: "ep".into(),
        })
        .unwrap_err();
    assert!(matches!(err, ClientError::Endpoint { status: 200, .. }));

    let err = live(http("http://127.0.0.1:9/v1")).complete(&CompletionRequest {
        prompt: "p".into(),
        config: SamplingConfig::sketch(),
        endpoint_id: "ep".into(),
    });
    assert!(matches!(err, Err(ClientError::Transport(_))));
}

/// Backend that records how many calls overlap.
struct Slow {
    current: AtomicUsize,
    peak: AtomicUsize,
}

impl CompletionBackend for Slow {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ClientError> {
        let now = self.current.fetch_add(1, Ordering::SeqCst) + 1;
        self.peak.fetch_max(now, Ordering::SeqCst);
        thread::sleep(Duration::from_millis(20));
        self.current.fetch_sub(1, Ordering::SeqCst);
        Ok(CompletionResponse {
            completions: vec![request.prompt.clone()],
            usage: Usage::default(),
            latency_ms: 20,
        })
    }
}

#[test]
fn in_flight_calls_are_capped() {
    let slow = Arc::new(Slow {
        current: AtomicUsize::new(0),
        peak: AtomicUsize::new(0),
    });
    let client = Arc::new(
        CompletionClient::new(
            "ep",
            CacheMode::Live,
            Some(slow.clone()),
            None,
            2,
            fast_retry(),
        )
        .unwrap(),
    );
    thread::scope(|s| {
        for i in 0..8 {
            let client = client.clone();
            s.spawn(move || {
                client
                    .complete(&client.request(&format!("p{i}"), SamplingConfig::sketch()))
                    .unwrap()
            });
        }
    });
    assert_eq!(slow.peak.load(Ordering::SeqCst), 2);
}

#[test]
fn record_then_replay_without_the_endpoint() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cache.jsonl");
    let ep = endpoint(|n, body| (200, choices(body["n"].as_u64().unwrap(), &format!("r{n}-"))));
    let cache = Arc::new(ReplayCache::open(&path).unwrap());
    let recorder = CompletionClient::new(
        "ep",
        CacheMode::Record,
        Some(http(&ep.url)),
        Some(cache),
        2,
        fast_retry(),
    )
    .unwrap();
    let request = recorder.request("p", SamplingConfig::draft(3));
    let first = recorder.complete(&request).unwrap();
    let again = recorder.complete(&request).unwrap();
    assert_eq!(first.completions, again.completions);
    assert_eq!(ep.hits.load(Ordering::SeqCst), 1);

    let cache = Arc::new(ReplayCache::open(&path).unwrap());
    let replayer =
        CompletionClient::new("ep", CacheMode::Replay, None, Some(cache), 2, fast_retry()).unwrap();
    assert_eq!(
        replayer.complete(&request).unwrap().completions,
        first.completions
    );
    let fewer = replayer
        .complete(&replayer.request("p", SamplingConfig::draft(2)))
        .unwrap();
    assert_eq!(fewer.completions, first.completions[..2]);
    let miss = replayer.complete(&replayer.request("other", SamplingConfig::draft(1)));
    assert!(matches!(miss, Err(ClientError::CacheMiss { .. })));
}

#[test]
fn cache_keys_cover_the_request_identity() {
    let c = SamplingConfig::draft(1);
    let k = cache_key("ep", "p", &c, 0);
    assert_eq!(k.len(), 64);
    assert_eq!(k, cache_key("ep", "p", &SamplingConfig::draft(9), 0));
    assert_ne!(k, cache_key("ep2", "p", &c, 0));
    assert_ne!(k, cache_key("ep", "p ", &c, 0));
    assert_ne!(k, cache_key("ep", "p", &c, 1));
    assert_ne!(k, cache_key("ep", "p", &SamplingConfig::sketch(), 0));
}

#[test]
fn cache_tolerates_a_torn_tail_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    std::fs::write(
        &path,
        "{\"key\":\"a\",\"value\":\"1\"}\n{\"key\":\"b\",\"va",
    )
    .unwrap();
    let cache = ReplayCache::open(&path).unwrap();
    assert_eq!(cache.get("a").as_deref(), Some("1"));
    assert_eq!(cache.len(), 1);
    cache.put("c", "3").unwrap();
    assert_eq!(cache.put("a", "other").unwrap(), "1");
    drop(cache);
    let reopened = ReplayCache::open(&path).unwrap();
    assert_eq!(reopened.get("c").as_deref(), Some("3"));

    std::fs::write(&path, "garbage\n{\"key\":\"a\",\"value\":\"1\"}\n").unwrap();
    assert!(ReplayCache::open(&path).is_err());
}

#[test]
fn sampling_configs_are_validated() {
    let client = CompletionClient::new(
        "ep",
        CacheMode::Live,
        Some(Arc::new(Slow {
            current: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
        })),
        None,
        1,
        fast_retry(),
    )
    .unwrap();
    let mut greedy_many = SamplingConfig::sketch();
    greedy_many.n = 2;
    assert!(matches!(
        client.complete(&client.request("p", greedy_many)),
        Err(ClientError::InvalidConfig(_))
    ));
    let mut bad_top_p = SamplingConfig::draft(1);
    bad_top_p.top_p = 0.0;
    assert!(client.complete(&client.request("p", bad_top_p)).is_err());
}

#[test]
fn modes_need_their_collaborators() {
    assert!(matches!(
        CompletionClient::new("ep", CacheMode::Live, None, None, 1, fast_retry()),
        Err(ClientError::NoEndpoint)
    ));
    assert!(matches!(
        CompletionClient::new("ep", CacheMode::Replay, None, None, 1, fast_retry()),
        Err(ClientError::InvalidConfig(_))
    ));
}

#[test]
fn dedup_ignores_whitespace_differences() {
    let input = vec![
        "a  b".to_string(),
        " a b\n".into(),
        "c".into(),
        "a b c".into(),
    ];
    assert_eq!(dedup(&input), vec!["a  b", "c", "a b c"]);
}
