use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::records::ProblemResult;
use crate::dataset::{Problem, Split};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("no results for problems: {}", .0.join(", "))]
    MissingResults(Vec<String>),
    #[error("attempt (draft {draft_index}, sketch {sketch_index}) of `{problem_id}` is missing or was not run")]
    Coverage {
        problem_id: String,
        draft_index: usize,
        sketch_index: usize,
    },
}

/// An exact success fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rate {
    pub solved: usize,
    pub total: usize,
}

impl Rate {
    pub fn value(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.solved as f64 / self.total as f64
        }
    }

    pub fn fraction(&self) -> String {
        format!("{}/{}", self.solved, self.total)
    }

    /// Percentage with one decimal, e.g. `39.3%`.
    pub fn percent(&self) -> String {
        format!("{:.1}%", 100.0 * self.value())
    }
}

impl std::fmt::Display for Rate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({})", self.fraction(), self.percent())
    }
}

/// Share of `problems` (restricted to `split` when given) that were solved.
/// Every counted problem must have a result.
pub fn success_rate(
    results: &[ProblemResult],
    problems: &[Problem],
    split: Option<Split>,
) -> Result<Rate, EvalError> {
    let by_id: BTreeMap<&str, &ProblemResult> =
        results.iter().map(|r| (r.problem_id.as_str(), r)).collect();
    let mut missing = Vec::new();
    let mut rate = Rate {
        solved: 0,
        total: 0,
    };
    for p in problems
        .iter()
        .filter(|p| split.is_none_or(|s| p.split == s))
    {
        rate.total += 1;
        match by_id.get(p.id.as_str()) {
            Some(r) => rate.solved += usize::from(r.solved),
            None => missing.push(p.id.clone()),
        }
    }
    if missing.is_empty() {
        Ok(rate)
    } else {
        Err(EvalError::MissingResults(missing))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Curve {
    /// `points[k - 1]` is the number of problems solved within `k` attempts.
    pub points: Vec<usize>,
}

/// Problems solved within the first k attempts, for k = 1..=max_attempts.
pub fn cumulative_curve<'a, I>(results: I, max_attempts: usize) -> Curve
where
    I: IntoIterator<Item = &'a ProblemResult>,
{
    let mut points = vec![0; max_attempts];
    for r in results {
        let first = r
            .attempts
            .iter()
            .filter(|a| a.success)
            .map(|a| a.attempt_index)
            .min();
        if let Some(i) = first {
            for p in points.iter_mut().skip(i) {
                *p += 1;
            }
        }
    }
    Curve { points }
}

/// Curve over the problems of one split.
pub fn split_curve(
    results: &[ProblemResult],
    problems: &[Problem],
    split: Split,
    max_attempts: usize,
) -> Curve {
    let ids: BTreeSet<&str> = problems
        .iter()
        .filter(|p| p.split == split)
        .map(|p| p.id.as_str())
        .collect();
    cumulative_curve(
        results
            .iter()
            .filter(|r| ids.contains(r.problem_id.as_str())),
        max_attempts,
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetGrid {
    pub draft_counts: Vec<usize>,
    pub sketch_counts: Vec<usize>,
    /// `cells[i][j]` for `draft_counts[i]` drafts and `sketch_counts[j]`
    /// sketches per draft; `None` where the product exceeds the cap.
    pub cells: Vec<Vec<Option<usize>>>,
}

/// Regroups full-run attempts: cell (d, s) counts problems with a success
/// among attempts with draft_index < d and sketch_index < s.
pub fn budget_grid(
    results: &[ProblemResult],
    draft_counts: &[usize],
    sketch_counts: &[usize],
    budget_cap: usize,
) -> Result<BudgetGrid, EvalError> {
    let mut cells = vec![vec![None; sketch_counts.len()]; draft_counts.len()];
    for (i, &d) in draft_counts.iter().enumerate() {
        for (j, &s) in sketch_counts.iter().enumerate() {
            if d * s > budget_cap {
                continue;
            }
            let mut solved = 0;
            for r in results {
                let mut seen = BTreeMap::new();
                for a in &r.attempts {
                    if a.draft_index < d && a.sketch_index < s {
                        seen.insert((a.draft_index, a.sketch_index), a);
                    }
                }
                for di in 0..d {
                    for si in 0..s {
                        let covered = seen
                            .get(&(di, si))
                            .is_some_and(|a| !a.failure_stage.is_some_and(|f| f.is_uncovered()));
                        if !covered {
                            return Err(EvalError::Coverage {
                                problem_id: r.problem_id.clone(),
                                draft_index: di,
                                sketch_index: si,
                            });
                        }
                    }
                }
                solved += usize::from(seen.values().any(|a| a.success));
            }
            cells[i][j] = Some(solved);
        }
    }
    Ok(BudgetGrid {
        draft_counts: draft_counts.to_vec(),
        sketch_counts: sketch_counts.to_vec(),
        cells,
    })
}
