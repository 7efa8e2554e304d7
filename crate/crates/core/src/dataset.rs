//! Benchmark problems and the line-oriented dataset file.
//!
//! The first line of a dataset file is a header object carrying
//! `schema_version`; every following non-empty line is one problem record.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::prompting::{infer_category, Category};

pub const DATASET_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Valid,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Problem {
    pub id: String,
    pub split: Split,
    pub category: Category,
    pub informal_statement: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub informal_proof: Option<String>,
    pub formal_statement: String,
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("cannot read dataset {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error at line {line}, field `{field}`: {message}")]
    Schema {
        line: usize,
        field: String,
        message: String,
    },
    #[error("duplicate problem id `{id}` at line {line}")]
    DuplicateId { id: String, line: usize },
}

fn schema(line: usize, field: &str, message: impl Into<String>) -> DatasetError {
    DatasetError::Schema {
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

/// Problems per split, in the order they first appear.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SplitCounts {
    pub valid: usize,
    pub test: usize,
}

pub fn split_counts(problems: &[Problem]) -> SplitCounts {
    let mut c = SplitCounts::default();
    for p in problems {
        match p.split {
            Split::Valid => c.valid += 1,
            Split::Test => c.test += 1,
        }
    }
    c
}

pub fn load_dataset(path: &Path) -> Result<Vec<Problem>, DatasetError> {
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let problems = parse_dataset(&text)?;
    let counts = split_counts(&problems);
    if counts.valid != counts.test {
        tracing::warn!(
            valid = counts.valid,
            test = counts.test,
            "dataset splits are unbalanced"
        );
    }
    tracing::info!(valid = counts.valid, test = counts.test, "loaded dataset");
    Ok(problems)
}

pub fn parse_dataset(text: &str) -> Result<Vec<Problem>, DatasetError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| schema(1, "schema_version", "empty file"))?;
    let header: Value =
        serde_json::from_str(header).map_err(|e| schema(1, "schema_version", e.to_string()))?;
    match header.get("schema_version").and_then(Value::as_u64) {
        Some(v) if v == u64::from(DATASET_SCHEMA_VERSION) => {}
        Some(v) => {
            return Err(schema(
                1,
                "schema_version",
                format!("unsupported version {v}"),
            ))
        }
        None => return Err(schema(1, "schema_version", "missing header line")),
    }

    let mut seen = HashSet::new();
    let mut problems = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        let problem = parse_record(line, lineno)?;
        if !seen.insert(problem.id.clone()) {
            return Err(DatasetError::DuplicateId {
                id: problem.id,
                line: lineno,
            });
        }
        problems.push(problem);
    }
    Ok(problems)
}

fn parse_record(line: &str, lineno: usize) -> Result<Problem, DatasetError> {
    let value: Value =
        serde_json::from_str(line).map_err(|e| schema(lineno, "<record>", e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| schema(lineno, "<record>", "expected an object"))?;
    let text_field = |name: &str| -> Result<String, DatasetError> {
        match obj.get(name) {
            Some(Value::String(s)) if !s.trim().is_empty() => Ok(s.clone()),
            Some(Value::String(_)) => Err(schema(lineno, name, "must not be empty")),
            Some(_) => Err(schema(lineno, name, "expected a string")),
            None => Err(schema(lineno, name, "missing")),
        }
    };
    let id = text_field("id")?;
    let split = match text_field("split")?.as_str() {
        "valid" => Split::Valid,
        "test" => Split::Test,
        other => return Err(schema(lineno, "split", format!("unknown split `{other}`"))),
    };
    let category = match obj.get("category") {
        None | Some(Value::Null) => infer_category(&id),
        Some(v) => serde_json::from_value(v.clone()).map_err(|_| {
            schema(
                lineno,
                "category",
                "expected algebra, numbertheory or unknown",
            )
        })?,
    };
    let informal_proof = match obj.get("informal_proof") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) if s.trim().is_empty() => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(schema(lineno, "informal_proof", "expected a string")),
    };
    Ok(Problem {
        id,
        split,
        category,
        informal_statement: text_field("informal_statement")?,
        informal_proof,
        formal_statement: text_field("formal_statement")?,
    })
}

/// Renders problems in the dataset file format.
pub fn write_dataset(problems: &[Problem]) -> String {
    let mut out = serde_json::json!({ "schema_version": DATASET_SCHEMA_VERSION }).to_string();
    out.push('\n');
    for p in problems {
        out.push_str(&serde_json::to_string(p).expect("problem serializes"));
        out.push('\n');
    }
    out
}
