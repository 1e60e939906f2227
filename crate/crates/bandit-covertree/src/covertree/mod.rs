//! The cover tree and its noisy operations.
//!
//! Construction, search, approximate search, insertion, and removal all
//! consume distances exclusively through the stochastic oracle; the
//! invariant checker is the one place exact distances enter, and it runs
//! harness-side.

mod insert;
mod invariants;
mod remove;
mod search;
mod tree;

pub use insert::{build, insert};
pub use invariants::{check_invariants, InvariantReport, Violation};
pub use remove::remove;
pub use search::{
    find_nearest, find_nearest_approx, find_nearest_excluding, SearchConfig, SearchResult,
};
pub use tree::{CoverTree, Node};
