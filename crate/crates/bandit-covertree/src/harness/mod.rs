//! Experiment harness: dataset generation, exact ground truth, expansion
//! constants, and the seeded experiment runner.
//!
//! The harness is the only layer with access to true distances. Everything
//! under [`crate::covertree`], [`crate::bandits`], and [`crate::nngraph`]
//! sees the data exclusively through the oracle and ledger interfaces.

mod brute;
mod datasets;
mod experiment;
pub mod seeds;

pub use brute::{brute_force_nn, brute_force_nn_graph, estimate_expansion_constant};
pub use datasets::{generate_dataset, DatasetKind, GenParams};
pub use experiment::{
    run_experiment, summarize, summary_path, write_reports, CallStats, DatasetSpec,
    ExperimentOutput, ExperimentSpec, Operation, OracleSpec, Summary, SweepRow,
};
