mod common;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use common::*;
use dsp_core::eval::FailureStage;
use dsp_core::llm::{
    CacheMode, ClientError, CompletionBackend, CompletionClient, CompletionRequest,
    CompletionResponse, RetryPolicy,
};
use dsp_core::prompting::is_sketch_prompt;
use dsp_core::scheduler::{
    attempt_seed, make_plan, run_experiment, run_problem, BudgetPolicy, DraftSource, SchedulerError,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Counts sketch requests passed to the wrapped backend.
struct Counting {
    inner: Arc<dyn CompletionBackend>,
    sketches: AtomicUsize,
}

impl CompletionBackend for Counting {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ClientError> {
        if is_sketch_prompt(&request.prompt) {
            self.sketches.fetch_add(1, Ordering::SeqCst);
        }
        self.inner.complete(request)
    }
}

fn random_policy(rng: &mut ChaCha8Rng) -> BudgetPolicy {
    BudgetPolicy {
        drafts_per_problem: rng.gen_range(0..7),
        sketches_per_draft: rng.gen_range(0..7),
        total_budget: rng.gen_range(0..40),
        stop_on_first_success: rng.gen_bool(0.5),
        draft_source: if rng.gen_bool(0.3) {
            DraftSource::Human
        } else {
            DraftSource::Model
        },
    }
}

#[test]
fn plans_are_draft_major_and_sized_by_the_policy() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let policy = random_policy(&mut rng);
        let effective = policy.clone().normalized();
        match make_plan(&policy, 11, "p") {
            Ok(plan) => {
                assert!(effective.attempts() <= policy.total_budget);
                assert_eq!(
                    plan.entries.len(),
                    effective.drafts_per_problem * effective.sketches_per_draft
                );
                let order: Vec<(usize, usize)> = plan
                    .entries
                    .iter()
                    .map(|e| (e.draft_index, e.sketch_index))
                    .collect();
                let mut sorted = order.clone();
                sorted.sort();
                assert_eq!(order, sorted);
                if policy.draft_source == DraftSource::Human {
                    assert!(plan.entries.iter().all(|e| e.draft_index == 0));
                }
            }
            Err(SchedulerError::BudgetExceeded { .. }) => {
                assert!(effective.attempts() > policy.total_budget)
            }
            Err(e) => panic!("unexpected {e}"),
        }
    }
}

#[test]
fn executed_attempts_never_exceed_the_budget() {
    let problems = problems();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let counting = Arc::new(Counting {
        inner: canned_backend(&problems),
        sketches: AtomicUsize::new(0),
    });
    let client = CompletionClient::new(
        "c",
        CacheMode::Live,
        Some(counting.clone()),
        None,
        4,
        RetryPolicy::default(),
    )
    .unwrap();
    let ctx = context(client, false);
    // Problems whose attempts end before the prover or after few steps.
    let cheap: Vec<_> = problems
        .iter()
        .filter(|p| {
            [
                "mathd_numbertheory_320",
                "mathd_algebra_320",
                "mathd_numbertheory_551",
            ]
            .contains(&p.id.as_str())
        })
        .collect();
    for i in 0..1000 {
        let policy = random_policy(&mut rng);
        let problem = cheap[i % cheap.len()];
        let before = counting.sketches.load(Ordering::SeqCst);
        match run_problem(problem, &policy, &ctx) {
            Ok(result) => {
                let executed = counting.sketches.load(Ordering::SeqCst) - before;
                let effective = policy.clone().normalized();
                assert!(executed <= policy.total_budget);
                assert_eq!(result.attempts.len(), effective.attempts());
                let attempted = result
                    .attempts
                    .iter()
                    .filter(|a| {
                        !matches!(
                            a.failure_stage,
                            Some(FailureStage::Draft | FailureStage::NotRun)
                        )
                    })
                    .count();
                assert_eq!(attempted, executed);
                if policy.stop_on_first_success {
                    if let Some(first) = result.first_success_index {
                        assert!(result.attempts[first + 1..]
                            .iter()
                            .all(|a| a.failure_stage == Some(FailureStage::NotRun)));
                    }
                }
            }
            Err(SchedulerError::BudgetExceeded { .. }) => {
                assert_eq!(counting.sketches.load(Ordering::SeqCst), before);
            }
            Err(e) => panic!("unexpected {e}"),
        }
    }
}

#[test]
fn human_drafts_are_reused_for_every_sketch() {
    let problems = problems();
    let client = CompletionClient::new(
        "c",
        CacheMode::Live,
        Some(canned_backend(&problems)),
        None,
        4,
        RetryPolicy::default(),
    )
    .unwrap();
    let ctx = context(client, false);
    let policy = BudgetPolicy {
        drafts_per_problem: 50,
        sketches_per_draft: 3,
        total_budget: 3,
        stop_on_first_success: false,
        draft_source: DraftSource::Human,
    };
    let result = run_problem(&problems[0], &policy, &ctx).unwrap();
    assert_eq!(result.attempts.len(), 3);
    assert!(result.attempts.iter().all(|a| a.draft_index == 0));
    assert!(result.solved);

    let no_proof = problems
        .iter()
        .find(|p| p.informal_proof.is_none())
        .unwrap();
    assert!(matches!(
        run_problem(no_proof, &policy, &ctx),
        Err(SchedulerError::MissingInformalProof(_))
    ));
}

#[test]
fn duplicate_drafts_shrink_the_draft_axis() {
    let problems = problems();
    let client = CompletionClient::new(
        "c",
        CacheMode::Live,
        Some(canned_backend(&problems)),
        None,
        4,
        RetryPolicy::default(),
    )
    .unwrap();
    let ctx = context(client, false);
    let problem = problems
        .iter()
        .find(|p| p.id == "mathd_algebra_200")
        .unwrap();
    let result = run_problem(problem, &golden_policy(), &ctx).unwrap();
    let draft_failures: Vec<_> = result
        .attempts
        .iter()
        .filter(|a| a.failure_stage == Some(FailureStage::Draft))
        .map(|a| a.draft_index)
        .collect();
    assert_eq!(draft_failures, vec![3, 3]);
}

#[test]
fn seeds_are_stable_and_distinct() {
    assert_eq!(attempt_seed(1, "p", 2, 3), attempt_seed(1, "p", 2, 3));
    let mut seen = std::collections::HashSet::new();
    for d in 0..10 {
        for s in 0..10 {
            assert!(seen.insert(attempt_seed(1, "p", d, s)));
        }
    }
    assert_ne!(attempt_seed(1, "p", 0, 0), attempt_seed(2, "p", 0, 0));
    assert_ne!(attempt_seed(1, "p", 0, 0), attempt_seed(1, "q", 0, 0));
}

#[test]
fn zero_workers_and_oversized_plans_are_rejected_up_front() {
    let problems = problems();
    let dir = tempfile::tempdir().unwrap();
    let ctx = context(
        client(CacheMode::Replay, &dir.path().join("c.jsonl"), None),
        false,
    );
    assert!(matches!(
        run_experiment(&problems, &golden_policy(), &ctx, 0),
        Err(SchedulerError::NoWorkers)
    ));
    let policy = BudgetPolicy {
        total_budget: 7,
        ..golden_policy()
    };
    assert!(matches!(
        run_experiment(&problems, &policy, &ctx, 2),
        Err(SchedulerError::BudgetExceeded { .. })
    ));
}
