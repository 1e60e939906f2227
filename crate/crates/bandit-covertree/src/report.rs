//! Run reports: oracle-call accounting and outcomes for experiments.
//!
//! Reports are serialized as NDJSON, one report per line. A report is fully
//! determined by the seed and configuration that produced it; wall-clock time
//! is kept in memory for display but never serialized, so report files are
//! byte-identical across reruns.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    /// All sampling loops separated their intervals before the pull cap.
    Success,
    /// At least one pair hit the pull cap and was classified by its
    /// empirical mean.
    Capped,
    /// The operation reported an error.
    Error,
}

impl Outcome {
    /// Combines outcomes: an error dominates, a cap survives a success.
    pub fn merge(self, other: Outcome) -> Outcome {
        use Outcome::*;
        match (self, other) {
            (Error, _) | (_, Error) => Error,
            (Capped, _) | (_, Capped) => Capped,
            _ => Success,
        }
    }

    pub fn from_capped(capped: bool) -> Outcome {
        if capped {
            Outcome::Capped
        } else {
            Outcome::Success
        }
    }
}

/// Per-level breakdown of a tree descent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelTrace {
    /// Tree level the candidates were expanded from.
    pub level: i32,
    /// Candidate set size handed to the bandit.
    pub candidates: usize,
    /// Size of the cover set returned for the next level.
    pub cover: usize,
    /// Oracle calls spent at this level.
    pub calls: u64,
}

/// Build-phase versus query-phase call split for graph construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseCalls {
    pub build: u64,
    pub query: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub operation: String,
    pub seed: u64,
    pub outcome: Outcome,
    /// Whether the result matched ground truth; set by the harness, absent
    /// for reports produced by the operations themselves.
    pub success: Option<bool>,
    pub total_oracle_calls: u64,
    pub phase_calls: Option<PhaseCalls>,
    /// Level at which an approximate search exited early, when it did.
    pub early_exit_level: Option<i32>,
    pub per_level: Vec<LevelTrace>,
    pub config: serde_json::Value,
    #[serde(skip)]
    pub wall_time_ms: f64,
}

impl RunReport {
    pub fn new(operation: impl Into<String>) -> Self {
        Self {
            schema: 1,
            operation: operation.into(),
            seed: 0,
            outcome: Outcome::Success,
            success: None,
            total_oracle_calls: 0,
            phase_calls: None,
            early_exit_level: None,
            per_level: Vec::new(),
            config: serde_json::Value::Null,
            wall_time_ms: 0.0,
        }
    }

    pub fn capped(&self) -> bool {
        self.outcome == Outcome::Capped
    }
}
