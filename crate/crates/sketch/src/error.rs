use std::fmt;

use crate::ast::NodePath;

/// A parse failure at a byte offset of the source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
    /// Tokens that would have been accepted at `offset`.
    pub expected: Vec<String>,
}

impl ParseError {
    pub fn new(offset: usize, message: impl Into<String>) -> Self {
        Self {
            offset,
            message: message.into(),
            expected: Vec::new(),
        }
    }

    pub fn expecting(offset: usize, message: impl Into<String>, expected: &[&str]) -> Self {
        Self {
            offset,
            message: message.into(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at byte {}: {}", self.offset, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected one of: {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FillError {
    #[error("no open gap at {path:?}")]
    InvalidSite { path: NodePath },
    #[error("closing step does not parse: {0}")]
    BadClosingStep(ParseError),
}
