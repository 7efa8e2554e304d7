use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use dsp_core::config::{Overrides, RunConfig, CACHE_MODE_ENV};
use dsp_core::dataset::{load_dataset, Problem, Split};
use dsp_core::eval::export::{curve_csv, grid_csv, table_csv, Manifest};
use dsp_core::eval::{
    budget_grid, cumulative_curve, read_records, split_curve, success_rate, write_records,
    write_timings, ProblemResult,
};
use dsp_core::llm::{
    dedup, CacheMode, CannedBackend, CannedCompletions, ClientError, CompletionBackend,
    CompletionClient, HttpBackend, ReplayCache, RetryPolicy, SamplingConfig,
};
use dsp_core::prompting::ExamplePool;
use dsp_core::prover::{
    open_session, prove_sketch, GapResult, ProverBackend, Script, SketchOutcome,
};
use dsp_core::scheduler::{draft_prompt, make_plan, run_experiment, RunContext};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(
    name = "dsp",
    version,
    about = "Draft informal proofs, sketch formal proofs, close the gaps with a prover"
)]
struct Cli {
    /// TOML configuration file; flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Common {
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    pool: Option<PathBuf>,
    /// live, record or replay; also read from DSP_CACHE_MODE.
    #[arg(long)]
    cache_mode: Option<String>,
    /// Completion cache file.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Offline completions file used in place of an HTTP endpoint.
    #[arg(long)]
    canned: Option<PathBuf>,
    #[arg(long)]
    endpoint_url: Option<String>,
    #[arg(long)]
    drafts: Option<usize>,
    #[arg(long)]
    sketches_per_draft: Option<usize>,
    #[arg(long)]
    budget: Option<usize>,
    /// Run every planned attempt instead of stopping at the first success.
    #[arg(long)]
    full_run: bool,
    /// Use the dataset's informal proofs as drafts.
    #[arg(long)]
    human: bool,
    /// full, no-comments, no-informal or full-proof.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    k_examples: Option<usize>,
    /// scripted:<path> or external:<address>.
    #[arg(long)]
    prover: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            dataset: self.dataset.clone(),
            pool: self.pool.clone(),
            cache_mode: self.cache_mode.clone(),
            cache: self.cache.clone(),
            canned: self.canned.clone(),
            endpoint_url: self.endpoint_url.clone(),
            drafts: self.drafts,
            sketches_per_draft: self.sketches_per_draft,
            budget: self.budget,
            full_run: self.full_run,
            human: self.human,
            mode: self.mode.clone(),
            k_examples: self.k_examples,
            prover: self.prover.clone(),
            seed: self.seed,
            jobs: self.jobs,
            out: self.out.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample informal drafts and store them under <out>/drafts.
    Draft {
        #[command(flatten)]
        common: Common,
        /// Comma-separated problem ids; all problems when absent.
        #[arg(long, value_delimiter = ',')]
        ids: Vec<String>,
        /// Drafts to request per problem.
        #[arg(long, default_value_t = 1)]
        n: usize,
    },
    /// Produce one formal sketch and report how it parses.
    Sketch {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        id: String,
        /// Draft id from a previous `draft` run; the human proof when absent.
        #[arg(long)]
        draft_id: Option<String>,
        #[arg(long, default_value_t = 0)]
        sketch_index: usize,
        /// Print the prompt before the sketch.
        #[arg(long)]
        show_prompt: bool,
    },
    /// Close the gaps of a sketch file and verify the result.
    Prove {
        #[command(flatten)]
        common: Common,
        sketch: PathBuf,
    },
    /// Run the whole pipeline over the dataset.
    Run {
        #[command(flatten)]
        common: Common,
        /// Prove each statement directly without drafts or sketches.
        #[arg(long)]
        baseline: bool,
    },
    /// Success-rate table from a records stream.
    Eval {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Cumulative success curve as CSV.
    Curve {
        #[arg(long)]
        records: PathBuf,
        #[arg(long, default_value_t = 100)]
        max_attempts: usize,
        /// Restrict to one split (needs --dataset).
        #[arg(long)]
        split: Option<String>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solved counts over drafts x sketches-per-draft cells of a full run.
    Grid {
        #[arg(long)]
        records: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        drafts: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        sketches: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        budget: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the scripted prover on standard streams or a TCP address.
    MockProver {
        #[arg(long)]
        script: PathBuf,
        #[arg(long)]
        listen: Option<String>,
    },
}

enum Failure {
    Config(String),
    Infra(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Infra(_) => 1,
            Failure::Config(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Infra(m) => m,
        }
    }
}

fn config_err(stage: &str) -> impl Fn(String) -> Failure + '_ {
    move |m| Failure::Config(format!("{stage}: {m}"))
}

fn infra_err(stage: &str) -> impl Fn(String) -> Failure + '_ {
    move |m| Failure::Infra(format!("{stage}: {m}"))
}

fn client_err(stage: &str, e: ClientError) -> Failure {
    match e {
        ClientError::InvalidConfig(_) | ClientError::NoEndpoint => {
            Failure::Config(format!("{stage}: {e}"))
        }
        other => Failure::Infra(format!("{stage}: {other}")),
    }
}

fn effective_config(path: Option<&Path>, common: &Common) -> Result<RunConfig, Failure> {
    let base = match path {
        Some(p) => RunConfig::load(p).map_err(|e| Failure::Config(format!("config: {e}")))?,
        None => RunConfig::default(),
    };
    let env = std::env::var(CACHE_MODE_ENV).ok();
    base.layered(env.as_deref(), &common.overrides())
        .map_err(|e| Failure::Config(format!("config: {e}")))
}

fn load_problems(config: &RunConfig) -> Result<Vec<Problem>, Failure> {
    let path = config
        .dataset
        .as_ref()
        .ok_or_else(|| Failure::Config("dataset: no --dataset given".into()))?;
    load_dataset(path).map_err(|e| config_err("dataset")(e.to_string()))
}

fn load_pool(config: &RunConfig) -> Result<ExamplePool, Failure> {
    let path = config
        .pool
        .as_ref()
        .ok_or_else(|| Failure::Config("pool: no --pool given".into()))?;
    ExamplePool::load(path).map_err(|e| config_err("pool")(e.to_string()))
}

fn build_client(config: &RunConfig, problems: &[Problem]) -> Result<CompletionClient, Failure> {
    let needs_backend = config.cache_mode != CacheMode::Replay;
    let backend: Option<Arc<dyn CompletionBackend>> = if let Some(path) = &config.endpoint.canned {
        let canned = CannedCompletions::load(path).map_err(|e| client_err("endpoint", e))?;
        Some(Arc::new(CannedBackend::new(canned, problems)))
    } else if let (true, Some(http)) = (needs_backend, &config.endpoint.http) {
        Some(Arc::new(
            HttpBackend::new(http.clone()).map_err(|e| client_err("endpoint", e))?,
        ))
    } else {
        None
    };
    let cache = match &config.cache {
        Some(path) if config.cache_mode != CacheMode::Live => Some(Arc::new(
            ReplayCache::open(path).map_err(|e| infra_err("cache")(e.to_string()))?,
        )),
        _ => None,
    };
    if config.cache_mode == CacheMode::Replay && cache.is_none() {
        return Err(Failure::Config("cache: replay mode needs --cache".into()));
    }
    CompletionClient::new(
        config.endpoint.id.clone(),
        config.cache_mode,
        backend,
        cache,
        config.endpoint.max_in_flight,
        RetryPolicy::default(),
    )
    .map_err(|e| client_err("endpoint", e))
}

fn prover_backend(config: &RunConfig) -> Result<ProverBackend, Failure> {
    let spec = config
        .prover
        .as_deref()
        .ok_or_else(|| Failure::Config("prover: no --prover given".into()))?;
    ProverBackend::parse(spec).map_err(|e| config_err("prover")(e.to_string()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| infra_err("output")(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents)
        .map_err(|e| infra_err("output")(format!("{}: {e}", path.display())))
}

#[derive(Serialize, Deserialize)]
struct DraftFile {
    problem_id: String,
    drafts: Vec<StoredDraft>,
}

#[derive(Serialize, Deserialize)]
struct StoredDraft {
    id: String,
    text: String,
}

fn draft_id(problem_id: &str, index: usize) -> String {
    format!("{problem_id}-d{index}")
}

fn cmd_draft(config: RunConfig, ids: &[String], n: usize) -> Result<(), Failure> {
    if n == 0 {
        return Ok(());
    }
    let problems = load_problems(&config)?;
    let pool = load_pool(&config)?;
    let client = build_client(&config, &problems)?;
    let selected: Vec<&Problem> = if ids.is_empty() {
        problems.iter().collect()
    } else {
        ids.iter()
            .map(|id| {
                problems
                    .iter()
                    .find(|p| &p.id == id)
                    .ok_or_else(|| Failure::Config(format!("draft: unknown problem `{id}`")))
            })
            .collect::<Result<_, _>>()?
    };
    let n = u32::try_from(n).map_err(|_| Failure::Config("draft: n is too large".into()))?;
    for problem in selected {
        let prompt = draft_prompt(problem, &pool, &config.prompt, config.seed);
        let response = client
            .complete(&client.request(&prompt, SamplingConfig::draft(n)))
            .map_err(|e| client_err("draft", e))?;
        let drafts: Vec<StoredDraft> = dedup(&response.completions)
            .into_iter()
            .enumerate()
            .map(|(i, text)| StoredDraft {
                id: draft_id(&problem.id, i),
                text,
            })
            .collect();
        println!("{}: {} distinct drafts", problem.id, drafts.len());
        let file = DraftFile {
            problem_id: problem.id.clone(),
            drafts,
        };
        let text = serde_json::to_string_pretty(&file).expect("drafts serialize") + "\n";
        write_file(
            &config
                .out
                .join("drafts")
                .join(format!("{}.json", problem.id)),
            &text,
        )?;
    }
    Ok(())
}

fn cmd_sketch(
    config: RunConfig,
    id: &str,
    draft: Option<&str>,
    sketch_index: usize,
    show_prompt: bool,
) -> Result<(), Failure> {
    let problems = load_problems(&config)?;
    let pool = load_pool(&config)?;
    let problem = problems
        .iter()
        .find(|p| p.id == id)
        .ok_or_else(|| Failure::Config(format!("sketch: unknown problem `{id}`")))?;
    let draft_text = match draft {
        Some(draft) => {
            let path = config.out.join("drafts").join(format!("{id}.json"));
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Failure::Config(format!("sketch: {}: {e}", path.display())))?;
            let file: DraftFile = serde_json::from_str(&text)
                .map_err(|e| Failure::Config(format!("sketch: {}: {e}", path.display())))?;
            file.drafts
                .into_iter()
                .find(|d| d.id == draft)
                .map(|d| d.text)
                .ok_or_else(|| Failure::Config(format!("sketch: no draft `{draft}`")))?
        }
        None => problem.informal_proof.clone().ok_or_else(|| {
            Failure::Config(format!(
                "sketch: `{id}` has no informal proof; pass --draft-id"
            ))
        })?,
    };
    let draft_index = draft
        .and_then(|d| d.rsplit_once("-d"))
        .and_then(|(_, i)| i.parse().ok())
        .unwrap_or(0);
    let seed = dsp_core::scheduler::attempt_seed(config.seed, id, draft_index, sketch_index);
    let prompt =
        dsp_core::scheduler::sketch_prompt(problem, &draft_text, seed, &pool, &config.prompt)
            .map_err(|e| config_err("prompt_build")(e.to_string()))?;
    if show_prompt {
        println!("--- prompt ---\n{prompt}--- end prompt ---");
    }
    let client = build_client(&config, &problems)?;
    let response = client
        .complete(&client.request(&prompt, SamplingConfig::sketch()))
        .map_err(|e| client_err("sketch", e))?;
    let completion = response.completions.first().cloned().unwrap_or_default();
    let text = format!(
        "{}\n{}",
        problem.formal_statement.trim_end(),
        completion.trim_matches('\n')
    );
    println!("{text}");
    match dsp_sketch::parse_sketch(&text) {
        Ok(ast) => {
            println!("parse: ok");
            println!("gaps: {}", ast.gap_count());
            println!("comments: {}", ast.comment_count());
            let cheat = dsp_sketch::check_no_cheat(&text);
            if !cheat.clean {
                println!("cheating keywords: {}", cheat.offending.len());
            }
        }
        Err(e) => {
            println!("parse: error at byte {}: {}", e.offset, e.message);
            if !e.expected.is_empty() {
                println!("expected: {}", e.expected.join(", "));
            }
        }
    }
    Ok(())
}

fn describe_gap(i: usize, g: &GapResult) -> String {
    match g {
        GapResult::Closed {
            closing_step,
            tactic_index,
            ..
        } => match tactic_index {
            Some(t) => format!("gap {}: closed by `{closing_step}` (tactic {t})", i + 1),
            None => format!("gap {}: closed by hammer `{closing_step}`", i + 1),
        },
        GapResult::Failed { attempts } => {
            format!("gap {}: failed after {} attempts", i + 1, attempts.len())
        }
        GapResult::TimedOut { elapsed_ms, .. } => {
            format!("gap {}: timed out after {elapsed_ms} ms", i + 1)
        }
    }
}

fn cmd_prove(config: RunConfig, sketch: &Path) -> Result<(), Failure> {
    let text = std::fs::read_to_string(sketch)
        .map_err(|e| Failure::Config(format!("prove: {}: {e}", sketch.display())))?;
    let ast = match dsp_sketch::parse_sketch(&text) {
        Ok(ast) => ast,
        Err(e) => {
            println!("parse: {e}");
            println!("result: failed");
            return Ok(());
        }
    };
    let backend = prover_backend(&config)?;
    let mut session = open_session(&backend, &config.prover_config)
        .map_err(|e| infra_err("prove")(e.to_string()))?;
    let outcome =
        prove_sketch(&mut session, &ast).map_err(|e| infra_err("prove")(e.to_string()))?;
    match outcome {
        SketchOutcome::Proved(full) => {
            for (i, g) in full.per_gap.iter().enumerate() {
                println!("{}", describe_gap(i, g));
            }
            match full.verdict {
                dsp_core::prover::Verdict::Valid => {
                    println!("{}", full.proof_text);
                    println!("result: proved");
                }
                dsp_core::prover::Verdict::Invalid(reason) => {
                    println!("verify: {reason}");
                    println!("result: failed");
                }
            }
        }
        SketchOutcome::Failed(f) => {
            for (i, g) in f.partial.iter().enumerate() {
                println!("{}", describe_gap(i, g));
            }
            println!("result: failed");
        }
        SketchOutcome::Cheat { keywords } => {
            println!("verify: cheating keyword {}", keywords.join(", "));
            println!("result: failed");
        }
    }
    Ok(())
}

fn cmd_run(config: RunConfig, baseline: bool) -> Result<(), Failure> {
    let started = Instant::now();
    let problems = load_problems(&config)?;
    if !baseline {
        make_plan(&config.policy, config.seed, "")
            .map_err(|e| config_err("policy")(e.to_string()))?;
    }
    let pool = load_pool(&config)?;
    let client = build_client(&config, &problems)?;
    let ctx = RunContext {
        client: Arc::new(client),
        pool: Arc::new(pool),
        prompt: config.prompt.clone(),
        prover_backend: prover_backend(&config)?,
        prover_config: config.prover_config.clone(),
        experiment_seed: config.seed,
        direct: baseline,
    };
    let outcome = run_experiment(&problems, &config.policy, &ctx, config.jobs)
        .map_err(|e| config_err("run")(e.to_string()))?;

    std::fs::create_dir_all(&config.out).map_err(|e| infra_err("output")(e.to_string()))?;
    let mut manifest = Manifest::new(
        ManifestConfig::new(&config, baseline),
        started.elapsed().as_millis() as u64,
    );
    let mut records = Vec::new();
    write_records(&mut records, &outcome.results)
        .map_err(|e| infra_err("output")(e.to_string()))?;
    let mut timings = Vec::new();
    write_timings(&mut timings, &outcome.results)
        .map_err(|e| infra_err("output")(e.to_string()))?;
    let max_attempts = if baseline {
        1
    } else {
        config.policy.attempts()
    };
    let curve = curve_csv(&cumulative_curve(&outcome.results, max_attempts))
        .map_err(|e| infra_err("output")(e.to_string()))?;
    let table = rate_rows(&outcome.results, &problems).ok();
    let io = |e: std::io::Error| infra_err("output")(e.to_string());
    manifest
        .write_output(&config.out, "records.jsonl", &records)
        .map_err(io)?;
    manifest
        .write_output(&config.out, "curve.csv", curve.as_bytes())
        .map_err(io)?;
    if let Some(rows) = &table {
        let labelled: Vec<(&str, _)> = rows.iter().map(|(l, r)| (l.as_str(), *r)).collect();
        let csv = table_csv(&labelled).map_err(io)?;
        manifest
            .write_output(&config.out, "table.csv", csv.as_bytes())
            .map_err(io)?;
        for (label, rate) in rows {
            println!("{label}: {rate}");
        }
    }
    std::fs::write(config.out.join("timings.jsonl"), &timings).map_err(io)?;
    manifest.wall_ms = started.elapsed().as_millis() as u64;
    manifest
        .save(&config.out.join("manifest.json"))
        .map_err(io)?;

    for f in &outcome.failures {
        eprintln!("infra: {}: {}", f.problem_id, f.error);
    }
    if outcome.is_complete() {
        Ok(())
    } else {
        Err(Failure::Infra(format!(
            "run: {} problems hit infrastructure errors",
            outcome.failures.len()
        )))
    }
}

/// Configuration echoed into the manifest, with paths made printable.
#[derive(Serialize)]
struct ManifestConfig<'a> {
    baseline: bool,
    #[serde(flatten)]
    run: &'a RunConfig,
}

impl<'a> ManifestConfig<'a> {
    fn new(run: &'a RunConfig, baseline: bool) -> Self {
        Self { baseline, run }
    }
}

fn rate_rows(
    results: &[ProblemResult],
    problems: &[Problem],
) -> Result<Vec<(String, dsp_core::eval::Rate)>, Failure> {
    let mut rows = Vec::new();
    for (label, split) in [
        ("valid", Some(Split::Valid)),
        ("test", Some(Split::Test)),
        ("all", None),
    ] {
        let rate = success_rate(results, problems, split)
            .map_err(|e| config_err("eval")(e.to_string()))?;
        rows.push((label.to_string(), rate));
    }
    Ok(rows)
}

fn open_records(path: &Path) -> Result<Vec<ProblemResult>, Failure> {
    let file = std::fs::File::open(path)
        .map_err(|e| Failure::Config(format!("records: {}: {e}", path.display())))?;
    read_records(BufReader::new(file))
        .map_err(|e| Failure::Config(format!("records: {}: {e}", path.display())))
}

fn cmd_eval(records: &Path, dataset: &Path, csv: Option<&Path>) -> Result<(), Failure> {
    let results = open_records(records)?;
    let problems = load_dataset(dataset).map_err(|e| config_err("dataset")(e.to_string()))?;
    let rows = rate_rows(&results, &problems)?;
    println!("{:<6} {:>9} {:>7}", "split", "solved", "rate");
    for (label, rate) in &rows {
        println!("{label:<6} {:>9} {:>7}", rate.fraction(), rate.percent());
    }
    if let Some(path) = csv {
        let labelled: Vec<(&str, _)> = rows.iter().map(|(l, r)| (l.as_str(), *r)).collect();
        let text = table_csv(&labelled).map_err(|e| infra_err("output")(e.to_string()))?;
        write_file(path, &text)?;
    }
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_curve(
    records: &Path,
    max_attempts: usize,
    split: Option<&str>,
    dataset: Option<&Path>,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let results = open_records(records)?;
    let curve = match split {
        None => cumulative_curve(&results, max_attempts),
        Some(s) => {
            let split = match s {
                "valid" => Split::Valid,
                "test" => Split::Test,
                other => return Err(Failure::Config(format!("curve: unknown split `{other}`"))),
            };
            let dataset =
                dataset.ok_or_else(|| Failure::Config("curve: --split needs --dataset".into()))?;
            let problems =
                load_dataset(dataset).map_err(|e| config_err("dataset")(e.to_string()))?;
            split_curve(&results, &problems, split, max_attempts)
        }
    };
    emit(
        out,
        &curve_csv(&curve).map_err(|e| infra_err("output")(e.to_string()))?,
    )
}

fn cmd_grid(
    records: &Path,
    drafts: &[usize],
    sketches: &[usize],
    budget: usize,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let results = open_records(records)?;
    let grid = budget_grid(&results, drafts, sketches, budget)
        .map_err(|e| config_err("grid")(e.to_string()))?;
    emit(
        out,
        &grid_csv(&grid).map_err(|e| infra_err("output")(e.to_string()))?,
    )
}

fn cmd_mock_prover(script: &Path, listen: Option<&str>) -> Result<(), Failure> {
    let script =
        Arc::new(Script::load(script).map_err(|e| config_err("mock-prover")(e.to_string()))?);
    use std::io::BufRead;
    match listen {
        None => {
            let stdin = std::io::stdin();
            let lines = stdin.lock().lines().map_while(Result::ok);
            let mut stdout = std::io::stdout();
            dsp_core::prover::script::serve_lines(&script, lines, |line| {
                writeln!(stdout, "{line}")
                    .and_then(|_| stdout.flush())
                    .is_ok()
            });
            Ok(())
        }
        Some(addr) => {
            let listener = std::net::TcpListener::bind(addr)
                .map_err(|e| infra_err("mock-prover")(format!("{addr}: {e}")))?;
            eprintln!(
                "listening on {}",
                listener
                    .local_addr()
                    .map(|a| a.to_string())
                    .unwrap_or_default()
            );
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let script = Arc::clone(&script);
                std::thread::spawn(move || {
                    let _ = stream.set_nodelay(true);
                    let Ok(mut out) = stream.try_clone() else {
                        return;
                    };
                    let lines = BufReader::new(stream).lines().map_while(Result::ok);
                    dsp_core::prover::script::serve_lines(&script, lines, |line| {
                        out.write_all(format!("{line}\n").as_bytes()).is_ok()
                    });
                });
            }
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config_path = cli.config.as_deref();
    match cli.command {
        Command::Draft { common, ids, n } => {
            cmd_draft(effective_config(config_path, &common)?, &ids, n)
        }
        Command::Sketch {
            common,
            id,
            draft_id,
            sketch_index,
            show_prompt,
        } => cmd_sketch(
            effective_config(config_path, &common)?,
            &id,
            draft_id.as_deref(),
            sketch_index,
            show_prompt,
        ),
        Command::Prove { common, sketch } => {
            cmd_prove(effective_config(config_path, &common)?, &sketch)
        }
        Command::Run { common, baseline } => {
            cmd_run(effective_config(config_path, &common)?, baseline)
        }
        Command::Eval {
            records,
            dataset,
            csv,
        } => cmd_eval(&records, &dataset, csv.as_deref()),
        Command::Curve {
            records,
            max_attempts,
            split,
            dataset,
            out,
        } => cmd_curve(
            &records,
            max_attempts,
            split.as_deref(),
            dataset.as_deref(),
            out.as_deref(),
        ),
        Command::Grid {
            records,
            drafts,
            sketches,
            budget,
            out,
        } => cmd_grid(&records, &drafts, &sketches, budget, out.as_deref()),
        Command::MockProver { script, listen } => cmd_mock_prover(&script, listen.as_deref()),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
