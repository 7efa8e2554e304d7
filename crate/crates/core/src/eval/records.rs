use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

pub const RECORDS_SCHEMA_VERSION: u32 = 1;

/// Pipeline stage at which an attempt stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureStage {
    Draft,
    PromptBuild,
    Parse,
    Prove,
    Verify,
    /// Completion cache miss, endpoint or prover infrastructure failure.
    Infra,
    /// Skipped after an earlier success.
    NotRun,
}

impl FailureStage {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Draft => "draft",
            Self::PromptBuild => "prompt_build",
            Self::Parse => "parse",
            Self::Prove => "prove",
            Self::Verify => "verify",
            Self::Infra => "infra",
            Self::NotRun => "not_run",
        }
    }

    /// Whether the attempt's outcome is unknown rather than a failure.
    pub fn is_uncovered(self) -> bool {
        matches!(self, Self::Infra | Self::NotRun)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub problem_id: String,
    /// Position in the attempt plan.
    pub attempt_index: usize,
    pub draft_index: usize,
    pub sketch_index: usize,
    pub parse_ok: bool,
    pub gaps_total: usize,
    pub gaps_closed: usize,
    pub success: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_stage: Option<FailureStage>,
    /// Kept out of the records stream; see [`write_timings`].
    #[serde(skip)]
    pub wall_ms: u64,
    pub prompt_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proof_text: Option<String>,
}

impl AttemptRecord {
    pub fn new(
        problem_id: &str,
        attempt_index: usize,
        draft_index: usize,
        sketch_index: usize,
        prompt_seed: u64,
    ) -> Self {
        Self {
            problem_id: problem_id.to_string(),
            attempt_index,
            draft_index,
            sketch_index,
            parse_ok: false,
            gaps_total: 0,
            gaps_closed: 0,
            success: false,
            failure_stage: None,
            wall_ms: 0,
            prompt_seed,
            error: None,
            proof_text: None,
        }
    }

    pub fn failed(mut self, stage: FailureStage, error: impl Into<String>) -> Self {
        self.success = false;
        self.failure_stage = Some(stage);
        self.error = Some(error.into());
        self
    }

    pub fn check_invariants(&self) -> Result<(), String> {
        if self.gaps_closed > self.gaps_total {
            return Err(format!(
                "{}#{}: gaps_closed > gaps_total",
                self.problem_id, self.attempt_index
            ));
        }
        if self.success
            && (!self.parse_ok
                || self.gaps_closed != self.gaps_total
                || self.failure_stage.is_some())
        {
            return Err(format!(
                "{}#{}: inconsistent success",
                self.problem_id, self.attempt_index
            ));
        }
        if !self.success && self.failure_stage.is_none() {
            return Err(format!(
                "{}#{}: failure without stage",
                self.problem_id, self.attempt_index
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemResult {
    pub problem_id: String,
    /// Plan order.
    pub attempts: Vec<AttemptRecord>,
    pub solved: bool,
    pub first_success_index: Option<usize>,
}

impl ProblemResult {
    pub fn from_attempts(problem_id: &str, attempts: Vec<AttemptRecord>) -> Self {
        let first_success_index = attempts.iter().position(|a| a.success);
        Self {
            problem_id: problem_id.to_string(),
            solved: first_success_index.is_some(),
            first_success_index,
            attempts,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RecordsError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

#[derive(Serialize)]
struct StreamLineOut<'a> {
    schema_version: u32,
    #[serde(flatten)]
    record: &'a AttemptRecord,
}

#[derive(Deserialize)]
struct StreamLineIn {
    schema_version: u32,
    #[serde(flatten)]
    record: AttemptRecord,
}

#[derive(Serialize, Deserialize)]
struct TimingLine {
    problem_id: String,
    attempt_index: usize,
    wall_ms: u64,
}

/// One JSON object per attempt, in result order. Wall-clock times are
/// excluded so identical runs produce identical bytes.
pub fn write_records<W: Write>(out: &mut W, results: &[ProblemResult]) -> std::io::Result<()> {
    for record in results.iter().flat_map(|r| &r.attempts) {
        let line = StreamLineOut {
            schema_version: RECORDS_SCHEMA_VERSION,
            record,
        };
        serde_json::to_writer(&mut *out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn records_to_string(results: &[ProblemResult]) -> String {
    let mut buf = Vec::new();
    write_records(&mut buf, results).expect("writing to memory");
    String::from_utf8(buf).expect("json is utf-8")
}

/// Sidecar with the wall-clock time of every attempt.
pub fn write_timings<W: Write>(out: &mut W, results: &[ProblemResult]) -> std::io::Result<()> {
    for a in results.iter().flat_map(|r| &r.attempts) {
        let line = TimingLine {
            problem_id: a.problem_id.clone(),
            attempt_index: a.attempt_index,
            wall_ms: a.wall_ms,
        };
        serde_json::to_writer(&mut *out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a records stream back into per-problem results, in first-seen
/// problem order. A torn final line is ignored.
pub fn read_records<R: BufRead>(input: R) -> Result<Vec<ProblemResult>, RecordsError> {
    let lines: Vec<String> = input.lines().collect::<Result<_, _>>()?;
    let last = lines.iter().rposition(|l| !l.trim().is_empty());
    let mut order: Vec<String> = Vec::new();
    let mut grouped: BTreeMap<String, Vec<AttemptRecord>> = BTreeMap::new();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: StreamLineIn = match serde_json::from_str(line) {
            Ok(p) => p,
            Err(_) if Some(i) == last && !line.trim_end().ends_with('}') => {
                tracing::warn!(line = i + 1, "ignoring torn final record");
                continue;
            }
            Err(e) => {
                return Err(RecordsError::Malformed {
                    line: i + 1,
                    message: e.to_string(),
                })
            }
        };
        if parsed.schema_version != RECORDS_SCHEMA_VERSION {
            return Err(RecordsError::Malformed {
                line: i + 1,
                message: format!("unsupported schema_version {}", parsed.schema_version),
            });
        }
        let record = parsed.record;
        if let Err(message) = record.check_invariants() {
            return Err(RecordsError::Malformed {
                line: i + 1,
                message,
            });
        }
        if !grouped.contains_key(&record.problem_id) {
            order.push(record.problem_id.clone());
        }
        grouped
            .entry(record.problem_id.clone())
            .or_default()
            .push(record);
    }
    Ok(order
        .into_iter()
        .map(|id| {
            let mut attempts = grouped.remove(&id).unwrap_or_default();
            attempts.sort_by_key(|a| a.attempt_index);
            ProblemResult::from_attempts(&id, attempts)
        })
        .collect())
}

/// Restores wall-clock times from a timings sidecar.
pub fn merge_timings<R: BufRead>(
    results: &mut [ProblemResult],
    input: R,
) -> Result<(), RecordsError> {
    let mut times = BTreeMap::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let t: TimingLine = serde_json::from_str(&line).map_err(|e| RecordsError::Malformed {
            line: i + 1,
            message: e.to_string(),
        })?;
        times.insert((t.problem_id, t.attempt_index), t.wall_ms);
    }
    for a in results.iter_mut().flat_map(|r| r.attempts.iter_mut()) {
        if let Some(ms) = times.get(&(a.problem_id.clone(), a.attempt_index)) {
            a.wall_ms = *ms;
        }
    }
    Ok(())
}
