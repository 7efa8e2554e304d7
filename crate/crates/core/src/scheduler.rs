//! Attempt budgets, the per-problem draft/sketch/prove loop and the worker
//! pool that runs it across problems.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use dsp_sketch::{check_no_cheat, parse_sketch};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::Problem;
use crate::eval::{AttemptRecord, FailureStage, ProblemResult};
use crate::llm::{dedup, ClientError, CompletionClient, SamplingConfig};
use crate::prompting::{
    apply_mode, build_draft_prompt, build_sketch_prompt, select_examples, ExamplePool,
    PromptConfig, PromptError, PromptMode,
};
use crate::prover::{
    direct_prove, open_session, prove_sketch, verify_full, DirectResult, GapResult, ProverBackend,
    ProverConfig, ProverError, ProverSession, SketchOutcome, Verdict,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DraftSource {
    Human,
    Model,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BudgetPolicy {
    pub drafts_per_problem: usize,
    pub sketches_per_draft: usize,
    pub total_budget: usize,
    pub stop_on_first_success: bool,
    pub draft_source: DraftSource,
}

impl Default for BudgetPolicy {
    fn default() -> Self {
        Self {
            drafts_per_problem: 100,
            sketches_per_draft: 1,
            total_budget: 100,
            stop_on_first_success: true,
            draft_source: DraftSource::Model,
        }
    }
}

impl BudgetPolicy {
    /// Human drafts exist once per problem, so they are reused for every
    /// sketch.
    pub fn normalized(mut self) -> Self {
        if self.draft_source == DraftSource::Human {
            self.drafts_per_problem = 1;
        }
        self
    }

    pub fn attempts(&self) -> usize {
        self.drafts_per_problem
            .saturating_mul(self.sketches_per_draft)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub draft_index: usize,
    pub sketch_index: usize,
    pub prompt_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptPlan {
    pub entries: Vec<PlanEntry>,
}

#[derive(Debug, thiserror::Error)]
pub enum SchedulerError {
    #[error("{drafts} drafts x {sketches} sketches exceeds the budget of {budget}")]
    BudgetExceeded {
        drafts: usize,
        sketches: usize,
        budget: usize,
    },
    #[error("problem `{0}` has no informal proof but the draft source is human")]
    MissingInformalProof(String),
    #[error("parallelism must be at least 1")]
    NoWorkers,
    #[error(transparent)]
    Prover(#[from] ProverError),
}

/// Stable per-attempt seed.
pub fn attempt_seed(
    experiment_seed: u64,
    problem_id: &str,
    draft_index: usize,
    sketch_index: usize,
) -> u64 {
    let mut h = Sha256::new();
    h.update(experiment_seed.to_le_bytes());
    h.update(problem_id.as_bytes());
    h.update([0]);
    h.update((draft_index as u64).to_le_bytes());
    h.update((sketch_index as u64).to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Draft-major enumeration of the drafts x sketches grid.
pub fn make_plan(
    policy: &BudgetPolicy,
    experiment_seed: u64,
    problem_id: &str,
) -> Result<AttemptPlan, SchedulerError> {
    let policy = policy.clone().normalized();
    if policy.attempts() > policy.total_budget {
        return Err(SchedulerError::BudgetExceeded {
            drafts: policy.drafts_per_problem,
            sketches: policy.sketches_per_draft,
            budget: policy.total_budget,
        });
    }
    let entries = (0..policy.drafts_per_problem)
        .flat_map(|d| (0..policy.sketches_per_draft).map(move |s| (d, s)))
        .map(|(d, s)| PlanEntry {
            draft_index: d,
            sketch_index: s,
            prompt_seed: attempt_seed(experiment_seed, problem_id, d, s),
        })
        .collect();
    Ok(AttemptPlan { entries })
}

/// Everything a worker needs besides the problem.
pub struct RunContext {
    pub client: Arc<CompletionClient>,
    pub pool: Arc<ExamplePool>,
    pub prompt: PromptConfig,
    pub prover_backend: ProverBackend,
    pub prover_config: ProverConfig,
    pub experiment_seed: u64,
    /// Prove statements directly instead of drafting and sketching.
    pub direct: bool,
}

impl RunContext {
    pub fn open_session(&self) -> Result<ProverSession, ProverError> {
        open_session(&self.prover_backend, &self.prover_config)
    }
}

/// A prover session that is reopened when its backend dies.
pub struct SessionSlot<'a> {
    ctx: &'a RunContext,
    session: Option<ProverSession>,
    reopens: u32,
}

impl<'a> SessionSlot<'a> {
    pub fn new(ctx: &'a RunContext) -> Self {
        Self {
            ctx,
            session: None,
            reopens: 0,
        }
    }

    /// Runs `f` on a live session, reopening after `SessionDead` up to the
    /// configured limit.
    fn with<T>(
        &mut self,
        mut f: impl FnMut(&mut ProverSession) -> Result<T, ProverError>,
    ) -> Result<T, ProverError> {
        loop {
            if self.session.is_none() {
                self.session = Some(self.ctx.open_session()?);
            }
            let session = self.session.as_mut().expect("opened above");
            match f(session) {
                Err(ProverError::SessionDead(reason)) => {
                    self.session = None;
                    if self.reopens >= self.ctx.prover_config.max_reopen {
                        return Err(ProverError::SessionDead(reason));
                    }
                    self.reopens += 1;
                    tracing::warn!(%reason, reopens = self.reopens, "prover session died, reopening");
                }
                other => return other,
            }
        }
    }
}

fn client_failure(record: AttemptRecord, stage: FailureStage, e: &ClientError) -> AttemptRecord {
    let stage = if matches!(e, ClientError::CacheMiss { .. }) {
        FailureStage::Infra
    } else {
        stage
    };
    record.failed(stage, format!("{}: {e}", stage.as_str()))
}

/// The drafting prompt for a problem: informal statement/proof pairs of
/// same-category pool examples, then the target statement.
pub fn draft_prompt(
    problem: &Problem,
    pool: &ExamplePool,
    prompt: &PromptConfig,
    experiment_seed: u64,
) -> String {
    let mut rng =
        ChaCha8Rng::seed_from_u64(attempt_seed(experiment_seed, &problem.id, usize::MAX, 0));
    let examples: Vec<(String, String)> = select_examples(
        pool,
        &problem.id,
        problem.category,
        prompt.k_examples,
        &mut rng,
    )
    .map(|qs| {
        qs.into_iter()
            .map(|q| (q.informal_statement.clone(), q.informal_proof.clone()))
            .collect()
    })
    .unwrap_or_default();
    build_draft_prompt(problem, &examples)
}

/// Informal drafts for the problem, deduplicated, in sample order.
fn obtain_drafts(
    problem: &Problem,
    policy: &BudgetPolicy,
    ctx: &RunContext,
) -> Result<Vec<String>, ClientError> {
    match policy.draft_source {
        DraftSource::Human => Ok(problem.informal_proof.iter().cloned().collect()),
        DraftSource::Model => {
            let n = u32::try_from(policy.drafts_per_problem).unwrap_or(u32::MAX);
            if n == 0 {
                return Ok(Vec::new());
            }
            let prompt = draft_prompt(problem, &ctx.pool, &ctx.prompt, ctx.experiment_seed);
            let request = ctx.client.request(&prompt, SamplingConfig::draft(n));
            let response = ctx.client.complete(&request)?;
            Ok(dedup(&response.completions))
        }
    }
}

/// The sketching prompt for one attempt; examples are drawn with
/// `prompt_seed`.
pub fn sketch_prompt(
    problem: &Problem,
    draft: &str,
    prompt_seed: u64,
    pool: &ExamplePool,
    prompt: &PromptConfig,
) -> Result<String, PromptError> {
    let mut rng = ChaCha8Rng::seed_from_u64(prompt_seed);
    let examples = select_examples(
        pool,
        &problem.id,
        problem.category,
        prompt.k_examples,
        &mut rng,
    )?
    .into_iter()
    .map(|q| apply_mode(q, prompt.mode))
    .collect::<Result<Vec<_>, _>>()?;
    let config = PromptConfig {
        rng_seed: prompt_seed,
        ..prompt.clone()
    };
    Ok(build_sketch_prompt(&examples, problem, draft, &config))
}

/// Names the gap without timing-dependent details, so records stay
/// reproducible.
fn gap_failure_message(index: usize, label: Option<&str>, proposition: &str) -> String {
    match label {
        Some(l) => format!("prove: gap {index} ({l}) not closed"),
        None => format!("prove: gap {index} \"{proposition}\" not closed"),
    }
}

/// Parses, proves and verifies one completion.
fn prove_completion(
    mut record: AttemptRecord,
    problem: &Problem,
    completion: &str,
    ctx: &RunContext,
    slot: &mut SessionSlot<'_>,
) -> Result<AttemptRecord, ProverError> {
    let text = format!(
        "{}\n{}",
        problem.formal_statement.trim_end(),
        completion.trim_matches('\n')
    );
    let ast = match parse_sketch(&text) {
        Ok(ast) => ast,
        Err(e) => return Ok(record.failed(FailureStage::Parse, format!("parse: {e}"))),
    };
    record.parse_ok = true;
    record.gaps_total = ast.gap_count();
    let cheat = check_no_cheat(&text);
    if !cheat.clean {
        let words: Vec<&str> = cheat.offending.iter().map(|(w, _)| w.as_str()).collect();
        return Ok(record.failed(
            FailureStage::Verify,
            format!("verify: cheating keyword {}", words.join(", ")),
        ));
    }
    if ctx.prompt.mode == PromptMode::FullProof {
        if record.gaps_total > 0 {
            return Ok(record.failed(FailureStage::Prove, "prove: full proof contains gaps"));
        }
        let verdict = slot.with(|s| {
            let header_only = dsp_sketch::SketchAst::new(ast.header.clone(), Vec::new());
            let theorem = ast.header.as_ref().and_then(|h| h.name.clone());
            s.init(theorem.as_deref(), &dsp_sketch::serialize(&header_only))?;
            verify_full(s, &dsp_sketch::serialize(&ast))
        })?;
        return Ok(match verdict {
            Verdict::Valid => {
                record.success = true;
                record.proof_text = Some(dsp_sketch::serialize(&ast));
                record
            }
            Verdict::Invalid(reason) => {
                record.failed(FailureStage::Verify, format!("verify: {reason}"))
            }
        });
    }
    let outcome = slot.with(|s| prove_sketch(s, &ast))?;
    Ok(match outcome {
        SketchOutcome::Proved(full) => {
            record.gaps_closed = full.per_gap.len();
            match full.verdict {
                Verdict::Valid => {
                    record.success = true;
                    record.proof_text = Some(full.proof_text);
                    record
                }
                Verdict::Invalid(reason) => {
                    record.failed(FailureStage::Verify, format!("verify: {reason}"))
                }
            }
        }
        SketchOutcome::Failed(f) => {
            record.gaps_closed = f.partial.iter().filter(|g| g.is_closed()).count();
            let message = gap_failure_message(
                f.partial.len(),
                f.failed_site.label.as_deref(),
                &f.failed_site.proposition,
            );
            record.failed(FailureStage::Prove, message)
        }
        SketchOutcome::Cheat { keywords } => record.failed(
            FailureStage::Verify,
            format!("verify: cheating keyword {}", keywords.join(", ")),
        ),
    })
}

/// Runs the plan for one problem with a caller-owned session slot.
pub fn run_problem_with(
    problem: &Problem,
    policy: &BudgetPolicy,
    ctx: &RunContext,
    slot: &mut SessionSlot<'_>,
) -> Result<ProblemResult, SchedulerError> {
    slot.reopens = 0;
    if ctx.direct {
        return run_direct(problem, ctx, slot);
    }
    let policy = policy.clone().normalized();
    if policy.draft_source == DraftSource::Human && problem.informal_proof.is_none() {
        return Err(SchedulerError::MissingInformalProof(problem.id.clone()));
    }
    let plan = make_plan(&policy, ctx.experiment_seed, &problem.id)?;
    let drafts = obtain_drafts(problem, &policy, ctx);
    let mut attempts = Vec::with_capacity(plan.entries.len());
    let mut solved = false;
    for (index, entry) in plan.entries.iter().enumerate() {
        let record = AttemptRecord::new(
            &problem.id,
            index,
            entry.draft_index,
            entry.sketch_index,
            entry.prompt_seed,
        );
        if solved && policy.stop_on_first_success {
            attempts.push(record.failed(FailureStage::NotRun, "not run: solved earlier"));
            continue;
        }
        let started = Instant::now();
        let mut record = match &drafts {
            Err(e) => client_failure(record, FailureStage::Draft, e),
            Ok(drafts) => match drafts.get(entry.draft_index) {
                None => record.failed(
                    FailureStage::Draft,
                    format!("draft: only {} distinct drafts available", drafts.len()),
                ),
                Some(draft) => {
                    match sketch_prompt(problem, draft, entry.prompt_seed, &ctx.pool, &ctx.prompt) {
                        Err(e) => {
                            record.failed(FailureStage::PromptBuild, format!("prompt_build: {e}"))
                        }
                        Ok(prompt) => {
                            let request = ctx.client.request(&prompt, SamplingConfig::sketch());
                            match ctx.client.complete(&request) {
                                Err(e) => client_failure(record, FailureStage::Infra, &e),
                                Ok(response) => match response.completions.first() {
                                    None => record.failed(
                                        FailureStage::Infra,
                                        "infra: empty completion response",
                                    ),
                                    Some(completion) => match prove_completion(
                                        record.clone(),
                                        problem,
                                        completion,
                                        ctx,
                                        slot,
                                    ) {
                                        Ok(r) => r,
                                        Err(ProverError::SessionDead(reason)) => {
                                            return Err(ProverError::SessionDead(reason).into())
                                        }
                                        Err(e) => record
                                            .failed(FailureStage::Infra, format!("infra: {e}")),
                                    },
                                },
                            }
                        }
                    }
                }
            },
        };
        record.wall_ms = started.elapsed().as_millis() as u64;
        solved |= record.success;
        attempts.push(record);
    }
    Ok(ProblemResult::from_attempts(&problem.id, attempts))
}

fn run_direct(
    problem: &Problem,
    ctx: &RunContext,
    slot: &mut SessionSlot<'_>,
) -> Result<ProblemResult, SchedulerError> {
    let started = Instant::now();
    let mut record = AttemptRecord::new(
        &problem.id,
        0,
        0,
        0,
        attempt_seed(ctx.experiment_seed, &problem.id, 0, 0),
    );
    let result = match slot.with(|s| direct_prove(s, &problem.formal_statement)) {
        Ok(r) => r,
        Err(e @ ProverError::SessionDead(_)) => return Err(e.into()),
        Err(e) => {
            let record = record.failed(FailureStage::Infra, format!("infra: {e}"));
            return Ok(ProblemResult::from_attempts(&problem.id, vec![record]));
        }
    };
    record.parse_ok = true;
    record.gaps_total = 1;
    record = match result {
        DirectResult::Valid { proof_text, .. } => {
            record.gaps_closed = 1;
            record.success = true;
            record.proof_text = Some(proof_text);
            record
        }
        DirectResult::Invalid { reason, gap } => {
            let closed = gap.as_ref().is_some_and(GapResult::is_closed);
            record.gaps_closed = usize::from(closed);
            let stage = if closed {
                FailureStage::Verify
            } else {
                FailureStage::Prove
            };
            record.failed(stage, format!("{}: {reason}", stage.as_str()))
        }
    };
    record.wall_ms = started.elapsed().as_millis() as u64;
    Ok(ProblemResult::from_attempts(&problem.id, vec![record]))
}

/// Runs one problem on a fresh session.
pub fn run_problem(
    problem: &Problem,
    policy: &BudgetPolicy,
    ctx: &RunContext,
) -> Result<ProblemResult, SchedulerError> {
    let mut slot = SessionSlot::new(ctx);
    run_problem_with(problem, policy, ctx, &mut slot)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemFailure {
    pub problem_id: String,
    pub error: String,
}

#[derive(Debug, Default)]
pub struct ExperimentOutcome {
    /// Input order; problems that aborted are absent.
    pub results: Vec<ProblemResult>,
    /// Problems that aborted, plus problems with infrastructure-tagged attempts.
    pub failures: Vec<ProblemFailure>,
}

impl ExperimentOutcome {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Processes problems on `parallelism` workers, each with its own prover
/// session. Results come back in input order.
pub fn run_experiment(
    problems: &[Problem],
    policy: &BudgetPolicy,
    ctx: &RunContext,
    parallelism: usize,
) -> Result<ExperimentOutcome, SchedulerError> {
    if parallelism == 0 {
        return Err(SchedulerError::NoWorkers);
    }
    if !ctx.direct {
        make_plan(policy, ctx.experiment_seed, "")?;
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<ProblemResult, SchedulerError>>>> =
        Mutex::new((0..problems.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..parallelism.min(problems.len()) {
            scope.spawn(|| {
                let mut slot = SessionSlot::new(ctx);
                loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(problem) = problems.get(i) else {
                        break;
                    };
                    tracing::info!(problem = %problem.id, "running");
                    let result = run_problem_with(problem, policy, ctx, &mut slot);
                    if result.is_err() {
                        slot = SessionSlot::new(ctx);
                    }
                    slots.lock().expect("results lock")[i] = Some(result);
                }
            });
        }
    });
    let mut outcome = ExperimentOutcome::default();
    for (problem, slot) in problems
        .iter()
        .zip(slots.into_inner().expect("results lock"))
    {
        match slot.expect("every problem processed") {
            Ok(result) => {
                let infra: Vec<&str> = result
                    .attempts
                    .iter()
                    .filter(|a| a.failure_stage == Some(FailureStage::Infra))
                    .filter_map(|a| a.error.as_deref())
                    .collect();
                if let Some(first) = infra.first() {
                    outcome.failures.push(ProblemFailure {
                        problem_id: problem.id.clone(),
                        error: format!(
                            "{} attempts hit infrastructure errors, first: {first}",
                            infra.len()
                        ),
                    });
                }
                outcome.results.push(result);
            }
            Err(e) => outcome.failures.push(ProblemFailure {
                problem_id: problem.id.clone(),
                error: e.to_string(),
            }),
        }
    }
    Ok(outcome)
}
