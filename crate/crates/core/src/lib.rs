//! Draft, sketch and prove: turn informal proofs into formal proof sketches
//! and close their gaps with automated provers.

pub mod config;
pub mod dataset;
pub mod eval;
pub mod llm;
pub mod prompting;
pub mod prover;
pub mod scheduler;
