//! Declarative proof sketches: parsing, serialization, gap extraction and
//! filling, comment stripping and the cheating-keyword check.
//!
//! All operations are pure functions over immutable trees.

mod ast;
mod cheat;
mod error;
mod gaps;
mod lexer;
mod parser;
mod serialize;
#[cfg(feature = "strategies")]
pub mod strategy;

pub use ast::*;
pub use cheat::{check_no_cheat, CheatReport, CHEAT_KEYWORDS};
pub use error::{FillError, ParseError};
pub use gaps::{extract_gaps, fill_gap, strip_comments, unresolved_facts, GapSite, UnresolvedFact};
pub use parser::{parse_justification, parse_sketch, parse_sketch_bytes};
pub use serialize::{serialize, serialize_prefix};
