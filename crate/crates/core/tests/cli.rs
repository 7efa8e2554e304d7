mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::fixtures;

fn dsp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsp"))
        .args(args)
        .env_remove("DSP_CACHE_MODE")
        .output()
        .expect("dsp runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn golden_config() -> String {
    fixtures().join("golden.toml").display().to_string()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn sketch_reports_seven_gaps_for_the_binomial_sketch() {
    let dir = tempfile::tempdir().unwrap();
    let o = dsp(&[
        "sketch",
        "--config",
        &golden_config(),
        "--cache-mode",
        "live",
        "--out",
        p(dir.path()),
        "--id",
        "algebra_binomnegdiscrineq_10alt28asqp1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("parse: ok"));
    assert!(out.contains("gaps: 7"), "{out}");
}

#[test]
fn sketch_reports_parse_errors_with_offsets_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let canned = dir.path().join("canned.json");
    std::fs::write(
        &canned,
        r#"{"schema_version":1,"sketches":{"mathd_algebra_160":["proof -\n  have \"x = 1\"\n    sledgehammer\n"]}}"#,
    )
    .unwrap();
    let o = dsp(&[
        "sketch",
        "--config",
        &golden_config(),
        "--cache-mode",
        "live",
        "--canned",
        p(&canned),
        "--out",
        p(dir.path()),
        "--id",
        "mathd_algebra_160",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("parse: error at byte "), "{out}");
}

#[test]
fn no_comments_prompt_preview_has_no_comments() {
    let dir = tempfile::tempdir().unwrap();
    let o = dsp(&[
        "sketch",
        "--config",
        &golden_config(),
        "--cache-mode",
        "live",
        "--out",
        p(dir.path()),
        "--id",
        "mathd_algebra_160",
        "--mode",
        "no-comments",
        "--show-prompt",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let prompt = &out[..out.find("--- end prompt ---").unwrap()];
    assert!(prompt.contains("Formal Proof Sketch:"));
    assert!(!prompt.contains("(*"));
}

#[test]
fn drafts_are_deterministic_and_zero_drafts_write_nothing() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = dsp(&[
            "draft",
            "--config",
            &golden_config(),
            "--out",
            p(dir.path()),
            "--ids",
            "mathd_algebra_200,imo_1959_p1",
            "--n",
            "4",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let read = |d: &tempfile::TempDir| {
        std::fs::read_to_string(d.path().join("drafts/mathd_algebra_200.json")).unwrap()
    };
    assert_eq!(read(&a), read(&b));
    assert!(read(&a).contains("mathd_algebra_200-d2"));
    assert!(!read(&a).contains("mathd_algebra_200-d3"));

    let empty = tempfile::tempdir().unwrap();
    let o = dsp(&[
        "draft",
        "--config",
        &golden_config(),
        "--out",
        p(empty.path()),
        "--n",
        "0",
    ]);
    assert!(o.status.success());
    assert_eq!(std::fs::read_dir(empty.path()).unwrap().count(), 0);
}

#[test]
fn sketch_uses_a_stored_draft() {
    let dir = tempfile::tempdir().unwrap();
    let o = dsp(&[
        "draft",
        "--config",
        &golden_config(),
        "--out",
        p(dir.path()),
        "--ids",
        "mathd_algebra_211",
        "--n",
        "4",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = dsp(&[
        "sketch",
        "--config",
        &golden_config(),
        "--cache-mode",
        "live",
        "--out",
        p(dir.path()),
        "--id",
        "mathd_algebra_211",
        "--draft-id",
        "mathd_algebra_211-d1",
        "--show-prompt",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("gaps: 3"));
    let o = dsp(&[
        "sketch",
        "--config",
        &golden_config(),
        "--out",
        p(dir.path()),
        "--id",
        "mathd_algebra_211",
    ]);
    assert_eq!(o.status.code(), Some(2), "no human proof and no draft id");
}

#[test]
fn live_mode_without_credentials_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    std::fs::write(
        &config,
        format!(
            "dataset = {:?}\npool = {:?}\n[endpoint.http]\nurl = \"http://127.0.0.1:9/v1\"\napi_key_env = \"DSP_TEST_UNSET_CREDENTIAL\"\n",
            fixtures().join("dataset.jsonl"),
            fixtures().join("pool.json")
        ),
    )
    .unwrap();
    let o = dsp(&[
        "draft",
        "--config",
        p(&config),
        "--cache-mode",
        "live",
        "--n",
        "2",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("DSP_TEST_UNSET_CREDENTIAL"));
}

#[test]
fn unreachable_endpoint_is_an_infra_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = dsp(&[
        "draft",
        "--dataset",
        p(&fixtures().join("dataset.jsonl")),
        "--pool",
        p(&fixtures().join("pool.json")),
        "--cache-mode",
        "live",
        "--endpoint-url",
        "http://127.0.0.1:9/v1",
        "--n",
        "1",
        "--ids",
        "mathd_algebra_160",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("draft:"));
}

#[test]
fn bad_flags_and_configs_exit_two() {
    assert_eq!(
        dsp(&["run", "--cache-mode", "sometimes"]).status.code(),
        Some(2)
    );
    assert_eq!(dsp(&["run", "--jobs", "zero"]).status.code(), Some(2));
    assert_eq!(dsp(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        dsp(&["run", "--config", "/nonexistent/x.toml"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(dsp(&["run"]).status.code(), Some(2));
    let o = dsp(&["run", "--config", &golden_config(), "--budget", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("budget"));
}

#[test]
fn environment_selects_the_cache_mode() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_dsp"))
        .args(["run", "--config", &golden_config(), "--out", p(dir.path())])
        .env("DSP_CACHE_MODE", "bogus")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("DSP_CACHE_MODE"));
}

#[test]
fn run_writes_golden_records_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = dsp(&[
        "run",
        "--config",
        &golden_config(),
        "--jobs",
        "4",
        "--out",
        p(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("all: 15/20 (75.0%)"));
    let records = std::fs::read_to_string(dir.path().join("records.jsonl")).unwrap();
    assert_eq!(
        records,
        std::fs::read_to_string(fixtures().join("golden/records.jsonl")).unwrap()
    );
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["config"]["seed"], 7);
    assert_eq!(manifest["config"]["policy"]["drafts_per_problem"], 4);
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    assert!(manifest["outputs"].to_string().contains("records.jsonl"));

    let again = tempfile::tempdir().unwrap();
    let o = dsp(&[
        "run",
        "--config",
        &golden_config(),
        "--out",
        p(again.path()),
    ]);
    assert!(o.status.success());
    let hash = |d: &Path| {
        let m: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(d.join("manifest.json")).unwrap())
                .unwrap();
        (m["config_hash"].clone(), m["outputs"].clone())
    };
    let (h1, out1) = hash(dir.path());
    let (h2, out2) = hash(again.path());
    assert_ne!(h1, h2, "jobs differ, so the echoed config differs");
    assert_eq!(out1["records.jsonl"], out2["records.jsonl"]);
}

#[test]
fn run_with_a_missing_cache_entry_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = dsp(&[
        "run",
        "--config",
        &golden_config(),
        "--cache",
        p(&dir.path().join("empty.jsonl")),
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(dir.path().join("records.jsonl").exists());
}

#[test]
fn eval_curve_and_grid_read_golden_records() {
    let records = fixtures().join("golden/records.jsonl");
    let dataset = fixtures().join("dataset.jsonl");
    let o = dsp(&["eval", "--records", p(&records), "--dataset", p(&dataset)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(
        out.contains("8/10") && out.contains("7/10") && out.contains("15/20"),
        "{out}"
    );

    let o = dsp(&["curve", "--records", p(&records), "--max-attempts", "100"]);
    assert!(o.status.success());
    let csv = stdout(&o);
    assert_eq!(csv.lines().count(), 101);
    assert_eq!(csv.lines().nth(1), Some("1,6"));

    let o = dsp(&[
        "curve",
        "--records",
        p(&records),
        "--max-attempts",
        "8",
        "--split",
        "test",
        "--dataset",
        p(&dataset),
    ]);
    assert!(stdout(&o).ends_with("8,7\n"));

    let o = dsp(&[
        "grid",
        "--records",
        p(&records),
        "--drafts",
        "1,2,4",
        "--sketches",
        "1,2",
        "--budget",
        "8",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("15"));
    let o = dsp(&[
        "grid",
        "--records",
        p(&records),
        "--drafts",
        "8",
        "--sketches",
        "1",
        "--budget",
        "100",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn prove_reports_each_gap() {
    let dir = tempfile::tempdir().unwrap();
    let sketch = dir.path().join("s.thy");
    std::fs::write(
        &sketch,
        "theorem mathd_algebra_200:\n  fixes f :: \"real \\<Rightarrow> real\"\n  assumes h0: \"\\<And>x. f x = 3 * x + 2\"\n  shows \"f (f 1) = 17\"\nproof -\n  have c0: \"f 1 = 5\"\n    using h0 sledgehammer\n  show ?thesis\n    using c0 h0 sledgehammer\nqed\n",
    )
    .unwrap();
    let o = dsp(&["prove", "--config", &golden_config(), p(&sketch)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(
        out.contains("gap 1: closed by `by simp` (tactic 1)"),
        "{out}"
    );
    assert!(out.contains("result: proved"));

    std::fs::write(
        &sketch,
        "theorem t: shows \"x\"\nproof -\n  show ?thesis sorry\nqed\n",
    )
    .unwrap();
    let o = dsp(&["prove", "--config", &golden_config(), p(&sketch)]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("cheating keyword sorry"));
    assert!(stdout(&o).contains("result: failed"));
}

#[test]
fn mock_prover_speaks_the_wire_protocol_on_stdio() {
    use std::io::Write;
    let mut child = Command::new(env!("CARGO_BIN_EXE_dsp"))
        .args([
            "mock-prover",
            "--script",
            p(&fixtures().join("script.json")),
        ])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    let mut stdin = child.stdin.take().unwrap();
    writeln!(stdin, r#"{{"id":1,"cmd":"init","theory":"Complex_Main","statement":"theorem mathd_algebra_160:\n  shows \"n = 1\""}}"#).unwrap();
    writeln!(
        stdin,
        r#"{{"id":2,"cmd":"step","text":"by auto","timeout_ms":50,"context":"x","goal":"n = 1"}}"#
    )
    .unwrap();
    writeln!(stdin, r#"{{"id":3,"cmd":"quit"}}"#).unwrap();
    drop(stdin);
    let out = child.wait_with_output().unwrap();
    let lines: Vec<serde_json::Value> = String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines[0]["status"], "ok");
    assert_eq!(lines[1]["id"], 2);
    assert_eq!(lines[1]["status"], "ok");
}
