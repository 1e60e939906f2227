//! Nearest neighbor search when distances can only be sampled, not computed.
//!
//! This crate indexes a point set with a cover tree while talking to the
//! data exclusively through a *stochastic distance oracle*: every query
//! returns the true distance plus zero-mean sub-Gaussian noise. Instead of
//! averaging a fixed number of oracle calls per distance, every tree
//! operation (construction, search, approximate search, insertion, removal,
//! and nearest-neighbor-graph extraction) runs adaptive bandit subroutines
//! with anytime confidence intervals, so easy comparisons stop after a few
//! samples and only genuinely close calls pay for precision.
//!
//! # Layout
//!
//! - [`oracle`] / [`points`] / [`ledger`] / [`confidence`]: the oracle
//!   abstraction, concrete noise models, per-pair sample bookkeeping, and
//!   the anytime confidence schedule.
//! - [`bandits`]: cover identification, threshold partitioning, and
//!   smallest-in-set selection.
//! - [`covertree`]: the leveled tree, its invariants, and the noisy
//!   operations built from the bandits.
//! - [`nngraph`]: all-nearest-neighbor graph construction.
//! - [`harness`]: dataset generators, exact brute-force ground truth,
//!   expansion-constant estimation, and the experiment runner behind the
//!   `bct` binary.
//!
//! # Quick start
//!
//! ```
//! use bandit_covertree::prelude::*;
//!
//! let params = GenParams { scale: 50.0, ..GenParams::default() };
//! let points = generate_dataset(DatasetKind::UniformCube, 32, 3, &params, 7)?;
//! let truth = points.clone();
//! let mut oracle = StochasticOracle::gaussian(points, 1.0, 42)?;
//! let config = SearchConfig::new(0.1);
//!
//! let (tree, _report) = build(32, &config, &mut oracle)?;
//! let q = vec![25.0, 25.0, 25.0];
//! let handle = oracle.register_external(&q)?;
//! let result = find_nearest(&tree, handle, &config, &mut oracle)?;
//! assert!(result.nn < truth.len());
//! # Ok::<(), bandit_covertree::Error>(())
//! ```

pub mod bandits;
pub mod confidence;
pub mod covertree;
pub mod error;
pub mod harness;
pub mod ledger;
pub mod nngraph;
pub mod oracle;
pub mod points;
pub mod report;

pub use crate::error::{Error, Result};

/// The types and functions most callers need.
pub mod prelude {
    pub use crate::bandits::{BanditConfig, BanditOutcome};
    pub use crate::confidence::ConfidenceSchedule;
    pub use crate::covertree::{
        build, check_invariants, find_nearest, find_nearest_approx, insert, remove, CoverTree,
        SearchConfig, SearchResult,
    };
    pub use crate::error::{Error, Result};
    pub use crate::harness::{
        brute_force_nn, brute_force_nn_graph, estimate_expansion_constant, generate_dataset,
        DatasetKind, GenParams,
    };
    pub use crate::ledger::SampleLedger;
    pub use crate::nngraph::{build_nn_graph, NnGraph};
    pub use crate::oracle::{DistanceOracle, Item, MatrixOracle, OracleKind, StochasticOracle};
    pub use crate::points::PointSet;
    pub use crate::report::{Outcome, RunReport};
}
