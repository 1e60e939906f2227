//! Nearest-neighbor descent driven by the bandit subroutines.
//!
//! Starting from the top cover, each level expands the children of the
//! current cover set and asks [`identify_cover`] for the candidates within
//! `2^i` of the closest — the reach of a level-`(i-1)` candidate's
//! descendants — tolerating `2^(i-1)` of slack; the margin decays with the
//! level, so the final set pins the true nearest neighbor. Every
//! bandit call runs at failure probability `delta / alpha`, where `alpha`
//! bounds the number of calls along a descent: `n + 1` when nothing is known
//! about the data, or a height bound derived from a known expansion
//! constant. Each cover identification starts from fresh bandit state.
//!
//! The approximate variant additionally checks, after each level, whether
//! every surviving candidate is confidently farther than
//! `2^(i+1) * (1 + 1/epsilon)`; when that holds the closest survivor is
//! already an `(1+epsilon)`-approximate nearest neighbor and the descent
//! stops early.

use std::collections::BTreeSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bandits::{
    confirm_min_above, find_smallest_in_set, identify_cover, BanditConfig, CoverQuery,
    SmallestQuery, ThresholdQuery,
};
use crate::error::{Error, Result};
use crate::ledger::SampleLedger;
use crate::oracle::{DistanceOracle, Item};
use crate::report::{LevelTrace, Outcome, RunReport};

use super::tree::CoverTree;

/// Parameters shared by the tree operations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Overall failure probability of the operation.
    pub delta: f64,
    /// Known bound on the expansion constant, if any. Tightens the union
    /// bound used during search from `n + 1` to a height bound.
    pub expansion_bound: Option<f64>,
    /// Approximation slack for [`find_nearest_approx`].
    pub epsilon_approx: Option<f64>,
    /// See [`BanditConfig::lt_variant`].
    pub lt_variant: bool,
    /// Per-pair pull cap.
    pub t_max: u64,
    /// Minimum level insertion may descend to; reaching it means the point
    /// being inserted is indistinguishable from an existing one.
    pub level_floor: i32,
}

impl SearchConfig {
    pub fn new(delta: f64) -> Self {
        Self {
            delta,
            expansion_bound: None,
            epsilon_approx: None,
            lt_variant: false,
            t_max: 1_000_000,
            level_floor: -52,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon_approx = Some(epsilon);
        self
    }

    pub fn bandit(&self) -> BanditConfig {
        BanditConfig {
            t_max: self.t_max,
            lt_variant: self.lt_variant,
        }
    }

    pub(crate) fn validate_common(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid(format!(
                "delta must be in (0, 1), got {}",
                self.delta
            )));
        }
        if let Some(c) = self.expansion_bound {
            if !(c >= 2.0 && c.is_finite()) {
                return Err(Error::invalid(format!(
                    "expansion bound must be at least 2, got {c}"
                )));
            }
        }
        if self.t_max == 0 {
            return Err(Error::invalid("pull cap must be at least 1"));
        }
        Ok(())
    }

    fn validate_search(&self) -> Result<()> {
        self.validate_common()?;
        if self.delta > 0.5 {
            return Err(Error::invalid(format!(
                "search requires delta <= 1/2, got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub nn: usize,
    pub report: RunReport,
}

/// Number of bandit calls the union bound must cover during one search:
/// `n + 1` by default; with a known expansion bound `c`, the height bound
/// `min(ceil(ln n / ln(1 + 1/c^2)) + 1, n) + 1`.
pub(crate) fn alpha(n: usize, expansion_bound: Option<f64>) -> f64 {
    match expansion_bound {
        None => (n + 1) as f64,
        Some(c) => {
            let height = ((n as f64).ln() / (1.0 + 1.0 / (c * c)).ln()).ceil() + 1.0;
            height.min(n as f64) + 1.0
        }
    }
}

/// Returns the index of the nearest tree point to the anchor with
/// probability at least `1 - delta`.
pub fn find_nearest(
    tree: &CoverTree,
    anchor: Item,
    config: &SearchConfig,
    oracle: &mut dyn DistanceOracle,
) -> Result<SearchResult> {
    search_core(tree, anchor, None, None, config, oracle)
}

/// Returns a point whose distance is within `(1 + epsilon)` of the nearest,
/// exiting the descent early once that is certain. Requires
/// `config.epsilon_approx`.
pub fn find_nearest_approx(
    tree: &CoverTree,
    anchor: Item,
    config: &SearchConfig,
    oracle: &mut dyn DistanceOracle,
) -> Result<SearchResult> {
    let epsilon = config
        .epsilon_approx
        .ok_or_else(|| Error::invalid("approximate search requires epsilon_approx"))?;
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon_approx must be positive"));
    }
    search_core(tree, anchor, None, Some(epsilon), config, oracle)
}

/// Nearest neighbor of a point that is itself in the tree, excluding it from
/// every candidate set. Used for nearest-neighbor-graph construction.
pub fn find_nearest_excluding(
    tree: &CoverTree,
    point: usize,
    config: &SearchConfig,
    oracle: &mut dyn DistanceOracle,
) -> Result<SearchResult> {
    if !tree.contains(point) {
        return Err(Error::NotFound(point));
    }
    if tree.len() < 2 {
        return Err(Error::invalid("exclusion search needs at least two points"));
    }
    search_core(tree, Item::Point(point), Some(point), None, config, oracle)
}

fn search_core(
    tree: &CoverTree,
    anchor: Item,
    exclude: Option<usize>,
    approx_epsilon: Option<f64>,
    config: &SearchConfig,
    oracle: &mut dyn DistanceOracle,
) -> Result<SearchResult> {
    config.validate_search()?;
    let root = tree.root().ok_or(Error::EmptyTree)?;
    let started = Instant::now();
    let start_calls = oracle.calls();
    let n = tree.len();
    let alpha = alpha(n, config.expansion_bound);
    let call_delta = config.delta / alpha;
    let bandit_cfg = config.bandit();

    let mut outcome = Outcome::Success;
    let mut per_level = Vec::new();
    let mut early_exit_level = None;

    let mut cover: Vec<usize> = vec![root];
    for level in (tree.i_bottom()..=tree.i_top()).rev() {
        let level_start = oracle.calls();

        // Expand children; the excluded point stays in the traversal set so
        // its subtree remains reachable, but never reaches a bandit.
        let mut expanded: BTreeSet<usize> = BTreeSet::new();
        for &p in &cover {
            expanded.extend(tree.children_at(p, level - 1));
        }
        let anchored_excluded = exclude.map_or(false, |x| expanded.remove(&x));
        let mut candidates: Vec<usize> = expanded.into_iter().collect();
        if candidates.is_empty() {
            // The excluded point was the only candidate: fall back to its
            // parent's sibling set (its own children when it is the root).
            candidates = exclusion_fallback(tree, exclude.expect("emptiness implies exclusion"));
            if candidates.is_empty() {
                return Err(Error::Internal("exclusion fallback produced no candidates"));
            }
        }

        // Candidates live in C_{level-1}; a candidate's descendants reach up
        // to sum(2^k, k <= level-1) = 2^level below it, so the must-keep
        // margin is 2^level. Half of it again is tolerated as slack.
        let epsilon = 2f64.powi(level);
        let gamma = 2f64.powi(level - 1);
        let mut ledger = SampleLedger::new();
        let out = identify_cover(
            &CoverQuery {
                anchor,
                candidates: &candidates,
                epsilon,
                gamma,
                delta: call_delta,
                union_denominator: candidates.len(),
            },
            &bandit_cfg,
            oracle,
            &mut ledger,
            None,
        )?;
        outcome = outcome.merge(Outcome::from_capped(out.capped));
        cover = out.selected;
        if anchored_excluded {
            if let Err(pos) = cover.binary_search(&exclude.expect("excluded")) {
                cover.insert(pos, exclude.expect("excluded"));
            }
        }

        // Early exit for approximate search: if every survivor is
        // confidently farther than 2^level * (1 + 1/eps), the closest
        // survivor is a (1 + eps)-approximate nearest neighbor.
        if let Some(eps_approx) = approx_epsilon {
            if level > tree.i_bottom() {
                let theta = 2f64.powi(level) * (1.0 + 1.0 / eps_approx);
                let check_candidates: Vec<usize> = cover
                    .iter()
                    .copied()
                    .filter(|&c| Some(c) != exclude)
                    .collect();
                let mut check_ledger = SampleLedger::new();
                let check = confirm_min_above(
                    &ThresholdQuery {
                        anchor,
                        candidates: &check_candidates,
                        theta,
                        delta: config.delta,
                        union_denominator: n,
                    },
                    &bandit_cfg,
                    oracle,
                    &mut check_ledger,
                    None,
                )?;
                outcome = outcome.merge(Outcome::from_capped(check.capped));
                if check.selected {
                    early_exit_level = Some(level - 1);
                    per_level.push(LevelTrace {
                        level,
                        candidates: candidates.len(),
                        cover: cover.len(),
                        calls: oracle.calls() - level_start,
                    });
                    break;
                }
            }
        }

        per_level.push(LevelTrace {
            level,
            candidates: candidates.len(),
            cover: cover.len(),
            calls: oracle.calls() - level_start,
        });
    }

    let finalists: Vec<usize> = cover
        .iter()
        .copied()
        .filter(|&c| Some(c) != exclude)
        .collect();
    if finalists.is_empty() {
        return Err(Error::Internal("descent ended with no finalists"));
    }
    let mut ledger = SampleLedger::new();
    let out = find_smallest_in_set(
        &SmallestQuery {
            anchor,
            candidates: &finalists,
            delta: call_delta,
            union_denominator: finalists.len(),
        },
        &bandit_cfg,
        oracle,
        &mut ledger,
        None,
    )?;
    outcome = outcome.merge(Outcome::from_capped(out.capped));

    let mut report = RunReport::new(if approx_epsilon.is_some() {
        "query-approx"
    } else {
        "query"
    });
    report.outcome = outcome;
    report.total_oracle_calls = oracle.calls() - start_calls;
    report.per_level = per_level;
    report.early_exit_level = early_exit_level;
    report.config = serde_json::to_value(config)?;
    report.wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(SearchResult {
        nn: out.selected,
        report,
    })
}

/// Candidates to use when excluding `x` empties a level: the other children
/// of its parent (the parent included), or all of its own explicit children
/// when `x` is the root.
fn exclusion_fallback(tree: &CoverTree, x: usize) -> Vec<usize> {
    let node = tree.node(x).expect("excluded point is in the tree");
    match node.parent {
        Some(parent) => tree
            .children_at(parent, node.top_level)
            .into_iter()
            .filter(|&c| c != x)
            .collect(),
        None => {
            let mut kids: Vec<usize> = tree
                .explicit_children(x)
                .into_iter()
                .map(|(_, c)| c)
                .collect();
            kids.sort_unstable();
            kids.dedup();
            kids
        }
    }
}
