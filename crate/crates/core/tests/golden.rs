mod common;

use common::*;
use dsp_core::dataset::Split;
use dsp_core::eval::{read_records, records_to_string, success_rate};
use dsp_core::llm::CacheMode;

fn golden_text(name: &str) -> String {
    std::fs::read_to_string(fixtures().join("golden").join(name)).expect("golden file")
}

#[test]
fn record_then_replay_matches_golden_records() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache.jsonl");
    let recorded = records_to_string(&golden_run(CacheMode::Record, &cache, 1, false));
    let replay_1 = records_to_string(&golden_run(CacheMode::Replay, &cache, 1, false));
    let replay_again = records_to_string(&golden_run(CacheMode::Replay, &cache, 1, false));
    let replay_8 = records_to_string(&golden_run(CacheMode::Replay, &cache, 8, false));
    assert_eq!(recorded, replay_1);
    assert_eq!(replay_1, replay_again);
    assert_eq!(replay_1, replay_8);
    assert_eq!(replay_1, golden_text("records.jsonl"));
}

#[test]
fn shipped_cache_replays_to_golden_records() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache.jsonl");
    std::fs::copy(fixtures().join("golden/cache.jsonl"), &cache).unwrap();
    let results = golden_run(CacheMode::Replay, &cache, 4, false);
    assert_eq!(records_to_string(&results), golden_text("records.jsonl"));
}

#[test]
fn baseline_matches_golden_and_is_strictly_weaker() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache.jsonl");
    let baseline = golden_run(CacheMode::Replay, &cache, 8, true);
    assert_eq!(
        records_to_string(&baseline),
        golden_text("baseline_records.jsonl")
    );
    assert!(baseline.iter().all(|r| r.attempts.len() == 1));

    let dsp = read_records(golden_text("records.jsonl").as_bytes()).unwrap();
    let (dsp_solved, base_solved) = (solved_ids(&dsp), solved_ids(&baseline));
    assert!(base_solved.is_subset(&dsp_solved));
    assert!(dsp_solved.len() > base_solved.len());
}

#[test]
fn golden_table_hand_count() {
    let problems = problems();
    let dsp = read_records(golden_text("records.jsonl").as_bytes()).unwrap();
    assert_eq!(
        success_rate(&dsp, &problems, Some(Split::Valid))
            .unwrap()
            .fraction(),
        "8/10"
    );
    assert_eq!(
        success_rate(&dsp, &problems, Some(Split::Test))
            .unwrap()
            .fraction(),
        "7/10"
    );
    assert_eq!(
        success_rate(&dsp, &problems, None).unwrap().fraction(),
        "15/20"
    );
    let unsolved: Vec<&str> = dsp
        .iter()
        .filter(|r| !r.solved)
        .map(|r| r.problem_id.as_str())
        .collect();
    assert_eq!(
        unsolved,
        [
            "algebra_absxm1pabsxpabsxp1eqxp2_0leqxleq1",
            "mathd_numbertheory_233",
            "mathd_algebra_211",
            "mathd_algebra_320",
            "mathd_numbertheory_320",
        ]
    );
}

#[test]
fn replay_without_recording_is_an_infra_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("empty.jsonl");
    let problems = problems();
    let ctx = context(client(CacheMode::Replay, &cache, None), false);
    let outcome =
        dsp_core::scheduler::run_experiment(&problems[..2], &golden_policy(), &ctx, 2).unwrap();
    assert_eq!(outcome.failures.len(), 2);
    for r in &outcome.results {
        assert!(r
            .attempts
            .iter()
            .all(|a| a.failure_stage.is_some_and(|s| s.is_uncovered())));
    }
}
