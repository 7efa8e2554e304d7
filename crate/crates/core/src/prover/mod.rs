//! Closing sketch gaps against a proof checker: wire protocol, sessions,
//! the tactic cascade and a scripted mock backend.

pub mod config;
pub mod driver;
pub mod protocol;
pub mod script;
pub mod session;

pub use config::{tactic_step, ProverConfig, DEFAULT_TACTICS, HAMMER};
pub use driver::{
    close_gap, direct_prove, prove_sketch, verify_full, AttemptOutcome, DirectResult,
    FullProofResult, GapAttempt, GapResult, SketchFailure, SketchOutcome, Verdict,
};
pub use script::{Script, ScriptError};
pub use session::{open_session, ExternalAddress, ProverBackend, ProverSession, SessionState};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProverError {
    #[error("cannot connect to prover: {0}")]
    Connect(String),
    #[error("invalid prover script: {0}")]
    Script(String),
    #[error("invalid prover configuration: {0}")]
    Config(String),
    #[error("prover session died: {0}")]
    SessionDead(String),
    #[error("prover protocol error: {0}")]
    Protocol(String),
}
