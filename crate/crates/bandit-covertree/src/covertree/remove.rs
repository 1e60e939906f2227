//! Noisy removal.
//!
//! Removing a point strips its record and re-homes every orphaned child with
//! a thresholding bandit at widths `delta / n^2` (the extra factor of `n`
//! union-bounds over a node's children). Candidate parents at each level
//! come from a descent around the removed point that keeps everything within
//! `2^(level + 2)`; this window is wide enough that any point close enough to
//! an orphan to matter — for finding a parent or for preserving separation
//! when the orphan is promoted — is guaranteed to be in it.
//!
//! Orphans are processed from the lowest level up, so an orphan promoted
//! into a higher cover becomes a candidate parent for the ones after it, and
//! orphans that have not been processed yet stand in the candidate pools at
//! their own levels. One ledger is shared across the whole removal.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use crate::bandits::{threshold_partition, BanditConfig, ThresholdQuery};
use crate::confidence::ConfidenceSchedule;
use crate::error::{Error, Result};
use crate::ledger::{PairKey, SampleLedger};
use crate::oracle::{DistanceOracle, Item};
use crate::report::{Outcome, RunReport};

use super::search::SearchConfig;
use super::tree::CoverTree;

/// How far past the original top level an orphan may climb before the
/// search is declared broken. The metric bounds terminate it within two
/// levels; the margin absorbs noise.
const MAX_CLIMB: i32 = 64;

/// Removes point `p` from the tree. With probability at least
/// `1 - config.delta` the result is a valid cover tree on the remaining
/// points. The tree must hold at least two points.
pub fn remove(
    tree: &mut CoverTree,
    p: usize,
    config: &SearchConfig,
    oracle: &mut dyn DistanceOracle,
    ledger: &mut SampleLedger,
) -> Result<RunReport> {
    config.validate_common()?;
    if !tree.contains(p) {
        return Err(Error::NotFound(p));
    }
    if tree.len() < 2 {
        return Err(Error::invalid(
            "removal requires a tree of at least two points",
        ));
    }
    let started = Instant::now();
    let start_calls = oracle.calls();
    let denominator = tree.len() * tree.len();
    let bandit_cfg = config.bandit();
    let mut outcome = Outcome::Success;

    let was_root = tree.root() == Some(p);
    let old_top = tree.i_top();

    let new_root = if was_root {
        Some(pick_replacement_root(
            tree,
            p,
            config,
            denominator,
            &bandit_cfg,
            oracle,
            ledger,
            &mut outcome,
        )?)
    } else {
        None
    };

    let mut orphans = tree.detach(p);
    if let Some(r) = new_root {
        let r_level = orphans
            .iter()
            .find(|&&(_, c)| c == r)
            .map(|&(level, _)| level)
            .expect("replacement root is an orphan");
        orphans.retain(|&(_, c)| c != r);
        // The replacement keeps its own level: its cover memberships are
        // unchanged, so no new separation pairs appear. Everything else in
        // the tree sits at or below it, and the climb logic raises it later
        // if an orphan needs more headroom.
        tree.promote_to_root(r, r_level);
    }

    if !orphans.is_empty() {
        // Candidate sets around p, from the top down to one level above the
        // deepest orphan.
        let floor = orphans[0].0 + 1;
        let mut sets: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
        let root = tree.root().expect("nonempty");
        sets.insert(tree.i_top(), vec![root]);
        let mut level = tree.i_top();
        while level > floor {
            let current = sets[&level].clone();
            let mut expanded: BTreeSet<usize> = BTreeSet::new();
            for &x in &current {
                expanded.extend(tree.children_at(x, level - 1));
            }
            let candidates: Vec<usize> = expanded.into_iter().collect();
            let out = threshold_partition(
                &ThresholdQuery {
                    anchor: Item::Point(p),
                    candidates: &candidates,
                    theta: 2f64.powi(level + 1),
                    delta: config.delta,
                    union_denominator: denominator,
                },
                &bandit_cfg,
                oracle,
                ledger,
                None,
            )?;
            outcome = outcome.merge(Outcome::from_capped(out.capped));
            sets.insert(level - 1, out.selected.below);
            level -= 1;
        }

        for pos in 0..orphans.len() {
            let (orig_level, q) = orphans[pos];
            let mut climb = orig_level + 1;
            loop {
                if climb > old_top + MAX_CLIMB {
                    return Err(Error::Internal("orphan climbed past any coverable level"));
                }
                if climb > tree.i_top() {
                    tree.raise_root(climb);
                    sets.entry(climb)
                        .or_insert_with(|| vec![tree.root().expect("nonempty")]);
                }
                let mut pool: BTreeSet<usize> = sets
                    .get(&climb)
                    .map(|v| v.iter().copied().collect())
                    .unwrap_or_default();
                // Sibling orphans are candidates at their current levels,
                // whether still waiting or already re-attached; the descent
                // sets cannot see them.
                pool.extend(
                    orphans
                        .iter()
                        .filter(|&&(_, o)| o != q)
                        .filter(|&&(_, o)| tree.node(o).expect("orphan in tree").top_level >= climb)
                        .map(|&(_, o)| o),
                );
                pool.remove(&q);
                let candidates: Vec<usize> = pool.into_iter().collect();

                if !candidates.is_empty() {
                    let out = threshold_partition(
                        &ThresholdQuery {
                            anchor: Item::Point(q),
                            candidates: &candidates,
                            theta: 2f64.powi(climb),
                            delta: config.delta,
                            union_denominator: denominator,
                        },
                        &bandit_cfg,
                        oracle,
                        ledger,
                        None,
                    )?;
                    outcome = outcome.merge(Outcome::from_capped(out.capped));
                    if let Some(&parent) = out.selected.below.first() {
                        tree.attach(q, parent);
                        break;
                    }
                }

                // No parent confidently within 2^climb: q joins that cover.
                tree.set_top_level(q, climb);
                let entry = sets.entry(climb).or_default();
                if let Err(at) = entry.binary_search(&q) {
                    entry.insert(at, q);
                }
                climb += 1;
            }
        }
    }

    tree.recompute_bounds();

    let mut report = RunReport::new("remove");
    report.outcome = outcome;
    report.total_oracle_calls = oracle.calls() - start_calls;
    report.config = serde_json::to_value(config)?;
    report.wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

/// Selects the root's replacement among the children at the highest level:
/// the one whose largest estimated distance to its siblings is smallest.
/// Only a maximum-level child can keep its level as the new root, which is
/// what keeps the separation invariant intact. Pairwise estimates are
/// sampled to a fixed resolution relative to the top level.
#[allow(clippy::too_many_arguments)]
fn pick_replacement_root(
    tree: &CoverTree,
    p: usize,
    config: &SearchConfig,
    denominator: usize,
    bandit_cfg: &BanditConfig,
    oracle: &mut dyn DistanceOracle,
    ledger: &mut SampleLedger,
    outcome: &mut Outcome,
) -> Result<usize> {
    let all = tree.explicit_children(p);
    if all.is_empty() {
        return Err(Error::Internal(
            "a root of a multi-point tree has no children",
        ));
    }
    let max_level = all.iter().map(|&(level, _)| level).max().expect("nonempty");
    let mut kids: Vec<usize> = all
        .iter()
        .filter(|&&(level, _)| level == max_level)
        .map(|&(_, c)| c)
        .collect();
    kids.sort_unstable();
    kids.dedup();
    if kids.len() == 1 {
        return Ok(kids[0]);
    }

    let needed = if oracle.is_exact() {
        1
    } else {
        let schedule = ConfidenceSchedule::with_scale(
            config.delta / denominator as f64,
            oracle.noise_scale(),
        )?;
        let target = 2f64.powi(tree.i_top() - 3);
        let needed = schedule.samples_for_width(target);
        if needed > bandit_cfg.t_max {
            *outcome = outcome.merge(Outcome::Capped);
        }
        needed.min(bandit_cfg.t_max)
    };
    for (ai, &a) in kids.iter().enumerate() {
        for &b in kids.iter().skip(ai + 1) {
            let key = PairKey::new(Item::Point(a), Item::Point(b));
            while ledger.count(key) < needed {
                let x = oracle.sample(Item::Point(a), Item::Point(b))?;
                ledger.record(key, x)?;
            }
        }
    }
    let mut best: Option<(f64, usize)> = None;
    for &a in &kids {
        let worst = kids
            .iter()
            .filter(|&&b| b != a)
            .map(|&b| {
                ledger
                    .mean(PairKey::new(Item::Point(a), Item::Point(b)))
                    .expect("sampled above")
            })
            .fold(f64::NEG_INFINITY, f64::max);
        if best.map_or(true, |(score, _)| worst < score) {
            best = Some((worst, a));
        }
    }
    Ok(best.expect("nonempty children").1)
}
