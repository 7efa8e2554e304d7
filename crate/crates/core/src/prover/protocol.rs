//! Newline-delimited JSON frames exchanged with a prover backend.
//!
//! ```text
//! -> {"id":1,"cmd":"init","theory":"Complex_Main","statement":"theorem t: ...","theorem":"t"}
//! <- {"id":1,"status":"ok","state_id":1}
//! -> {"id":2,"cmd":"step","text":"by auto","timeout_ms":10000,"context":"...","goal":"x = 5"}
//! <- {"id":2,"status":"fail","reason":"tactic failed"}
//! -> {"id":3,"cmd":"hammer","timeout_ms":120000,"context":"...","goal":"x = 5"}
//! <- {"id":3,"status":"ok","state_id":2,"reconstruction":"by (smt (z3) assms)"}
//! ```
//!
//! A `step` with a `goal` checks `text` against the open conjecture at the
//! end of `context`. A `step` without a goal checks `text` as a complete
//! proof of the initialised theorem.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    #[serde(flatten)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "cmd", rename_all = "lowercase")]
pub enum Command {
    Init {
        theory: String,
        statement: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        theorem: Option<String>,
    },
    Step {
        text: String,
        timeout_ms: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        context: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        goal: Option<String>,
    },
    Hammer {
        timeout_ms: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        context: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        goal: Option<String>,
    },
    Reset,
    Quit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Response {
    pub id: u64,
    #[serde(flatten)]
    pub reply: Reply,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Reply {
    Ok {
        state_id: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reconstruction: Option<String>,
    },
    Fail {
        reason: String,
    },
    Timeout,
}

pub fn encode<T: Serialize>(frame: &T) -> String {
    serde_json::to_string(frame).expect("frames serialize")
}
