#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use dsp_core::dataset::{load_dataset, Problem};
use dsp_core::eval::ProblemResult;
use dsp_core::llm::{
    CacheMode, CannedBackend, CannedCompletions, CompletionBackend, CompletionClient, ReplayCache,
    RetryPolicy,
};
use dsp_core::prompting::ExamplePool;
use dsp_core::prompting::PromptConfig;
use dsp_core::prover::{ProverBackend, ProverConfig, Script};
use dsp_core::scheduler::{run_experiment, BudgetPolicy, DraftSource, RunContext};

pub const GOLDEN_SEED: u64 = 7;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn problems() -> Vec<Problem> {
    load_dataset(&fixtures().join("dataset.jsonl")).expect("bundled dataset")
}

pub fn pool() -> ExamplePool {
    ExamplePool::load(&fixtures().join("pool.json")).expect("bundled pool")
}

pub fn script() -> Script {
    Script::load(&fixtures().join("script.json")).expect("bundled script")
}

pub fn golden_policy() -> BudgetPolicy {
    BudgetPolicy {
        drafts_per_problem: 4,
        sketches_per_draft: 2,
        total_budget: 8,
        stop_on_first_success: false,
        draft_source: DraftSource::Model,
    }
}

pub fn golden_prover_config() -> ProverConfig {
    ProverConfig {
        tactic_timeout_ms: 20,
        hammer_timeout_ms: 60,
        per_gap_budget_ms: 1320,
        response_grace_ms: 20,
        connect_timeout_ms: 2000,
        ..ProverConfig::default()
    }
}

pub fn golden_prompt() -> PromptConfig {
    PromptConfig {
        k_examples: 3,
        ..PromptConfig::default()
    }
}

pub fn canned_backend(problems: &[Problem]) -> Arc<dyn CompletionBackend> {
    let canned = CannedCompletions::load(&fixtures().join("canned.json"))
        .expect("bundled canned completions");
    Arc::new(CannedBackend::new(canned, problems))
}

pub fn client(
    mode: CacheMode,
    cache: &Path,
    backend: Option<Arc<dyn CompletionBackend>>,
) -> CompletionClient {
    let cache = Arc::new(ReplayCache::open(cache).expect("cache"));
    CompletionClient::new(
        "canned-mini",
        mode,
        backend,
        Some(cache),
        4,
        RetryPolicy::default(),
    )
    .expect("client")
}

pub fn context(client: CompletionClient, direct: bool) -> RunContext {
    RunContext {
        client: Arc::new(client),
        pool: Arc::new(pool()),
        prompt: golden_prompt(),
        prover_backend: ProverBackend::scripted(script()),
        prover_config: golden_prover_config(),
        experiment_seed: GOLDEN_SEED,
        direct,
    }
}

/// Runs the golden experiment against `cache` in the given mode.
pub fn golden_run(mode: CacheMode, cache: &Path, jobs: usize, direct: bool) -> Vec<ProblemResult> {
    let problems = problems();
    let backend = (mode != CacheMode::Replay).then(|| canned_backend(&problems));
    let ctx = context(client(mode, cache, backend), direct);
    let outcome = run_experiment(&problems, &golden_policy(), &ctx, jobs).expect("experiment");
    assert!(
        outcome.is_complete(),
        "infra failures: {:?}",
        outcome.failures
    );
    outcome.results
}

pub fn solved_ids(results: &[ProblemResult]) -> std::collections::BTreeSet<String> {
    results
        .iter()
        .filter(|r| r.solved)
        .map(|r| r.problem_id.clone())
        .collect()
}
