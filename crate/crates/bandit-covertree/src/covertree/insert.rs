//! Noisy insertion and tree construction.
//!
//! Insertion descends with a thresholding bandit: at level `i` it splits the
//! children of the current cover set into those confidently within `2^i` of
//! the new point and the rest. The recursion shares one sample ledger, so a
//! pair measured at some level resumes with its counts intact below — the
//! union bound stays at `delta / n` over the tree's points rather than
//! paying per level. On unwinding, the first level whose child call found no
//! parent assigns one from the intersection of the two cover sets.
//!
//! A configurable level floor bounds the descent: a point that keeps finding
//! parents all the way to the floor is indistinguishable from an existing
//! point and raises a duplicate error with the tree unchanged.

use std::collections::BTreeSet;
use std::time::Instant;

use crate::bandits::{threshold_partition, BanditConfig, ThresholdQuery};
use crate::error::{Error, Result};
use crate::ledger::{PairKey, SampleLedger};
use crate::oracle::{DistanceOracle, Item};
use crate::report::{LevelTrace, Outcome, RunReport};

use super::search::SearchConfig;
use super::tree::CoverTree;

enum Placement {
    Found,
    NoParent,
}

struct InsertRun<'a> {
    tree: &'a mut CoverTree,
    point: usize,
    delta: f64,
    denominator: usize,
    bandit_cfg: BanditConfig,
    level_floor: i32,
    outcome: Outcome,
    per_level: Vec<LevelTrace>,
}

/// Inserts point `p` into the tree. With probability at least
/// `1 - config.delta` the result is a valid cover tree on the previous
/// points plus `p`. The ledger is shared across the recursive descent and
/// may carry prior samples involving `p`.
pub fn insert(
    tree: &mut CoverTree,
    p: usize,
    config: &SearchConfig,
    oracle: &mut dyn DistanceOracle,
    ledger: &mut SampleLedger,
) -> Result<RunReport> {
    config.validate_common()?;
    let started = Instant::now();
    let start_calls = oracle.calls();

    let mut report = RunReport::new("insert");
    report.config = serde_json::to_value(config)?;

    if tree.contains(p) {
        return Err(Error::Duplicate(p));
    }
    if tree.is_empty() {
        *tree = CoverTree::singleton(p);
        report.wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
        return Ok(report);
    }

    let top_before = tree.i_top();
    let mut run = InsertRun {
        point: p,
        delta: config.delta,
        denominator: tree.len(),
        bandit_cfg: config.bandit(),
        level_floor: config.level_floor,
        outcome: Outcome::Success,
        per_level: Vec::new(),
        tree,
    };

    let placed = run.raise_root_if_needed(oracle, ledger).and_then(|()| {
        let root = run.tree.root().expect("nonempty");
        let top = run.tree.i_top();
        run.descend(&[root], top, oracle, ledger)
    });
    match placed {
        Ok(Placement::Found) => {}
        Ok(Placement::NoParent) => {
            // After the root raise the root is confidently within 2^i_top,
            // so the top-level intersection can never be empty.
            return Err(Error::Internal(
                "insertion found no parent below a raised root",
            ));
        }
        Err(err) => {
            // A failed insertion leaves the tree as it was, including any
            // speculative root raise (a duplicate of a point far from the
            // root raises first and hits the level floor later).
            run.tree.force_root_level(top_before);
            return Err(err);
        }
    }

    report.outcome = run.outcome;
    report.per_level = run.per_level;
    report.total_oracle_calls = oracle.calls() - start_calls;
    report.wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

impl InsertRun<'_> {
    /// Ensures the root covers the new point, raising `i_top` to
    /// `ceil(log2(upper bound on d(p, root)))` when it does not.
    fn raise_root_if_needed(
        &mut self,
        oracle: &mut dyn DistanceOracle,
        ledger: &mut SampleLedger,
    ) -> Result<()> {
        let root = self.tree.root().expect("nonempty");
        loop {
            let theta = 2f64.powi(self.tree.i_top());
            let out = threshold_partition(
                &ThresholdQuery {
                    anchor: Item::Point(self.point),
                    candidates: &[root],
                    theta,
                    delta: self.delta,
                    union_denominator: self.denominator,
                },
                &self.bandit_cfg,
                oracle,
                ledger,
                None,
            )?;
            self.outcome = self.outcome.merge(Outcome::from_capped(out.capped));
            if out.selected.below.contains(&root) {
                return Ok(());
            }
            let key = PairKey::new(Item::Point(self.point), Item::Point(root));
            let mean = ledger.mean(key)?;
            let upper = if oracle.is_exact() {
                mean
            } else {
                let schedule = crate::confidence::ConfidenceSchedule::with_scale(
                    self.delta / self.denominator as f64,
                    oracle.noise_scale(),
                )?;
                mean + schedule.width(ledger.count(key))
            };
            let new_top = (upper.log2().ceil() as i32).max(self.tree.i_top() + 1);
            self.tree.raise_root(new_top);
        }
    }

    fn descend(
        &mut self,
        cover: &[usize],
        level: i32,
        oracle: &mut dyn DistanceOracle,
        ledger: &mut SampleLedger,
    ) -> Result<Placement> {
        let level_start = oracle.calls();
        let mut expanded: BTreeSet<usize> = BTreeSet::new();
        for &p in cover {
            expanded.extend(self.tree.children_at(p, level - 1));
        }
        let candidates: Vec<usize> = expanded.into_iter().collect();

        let out = threshold_partition(
            &ThresholdQuery {
                anchor: Item::Point(self.point),
                candidates: &candidates,
                theta: 2f64.powi(level),
                delta: self.delta,
                union_denominator: self.denominator,
            },
            &self.bandit_cfg,
            oracle,
            ledger,
            None,
        )?;
        self.outcome = self.outcome.merge(Outcome::from_capped(out.capped));
        let below = out.selected.below;
        self.per_level.push(LevelTrace {
            level,
            candidates: candidates.len(),
            cover: below.len(),
            calls: oracle.calls() - level_start,
        });

        if below.is_empty() {
            return Ok(Placement::NoParent);
        }
        if level <= self.level_floor {
            // Every threshold kept passing down to the floor: the point is
            // indistinguishable from an existing one.
            return Err(Error::Duplicate(self.point));
        }

        let deeper = self.descend(&below, level - 1, oracle, ledger)?;
        if let Placement::NoParent = deeper {
            let parent = intersect_first(cover, &below);
            if let Some(parent) = parent {
                self.tree.add_node(self.point, level - 1, parent);
                return Ok(Placement::Found);
            }
        }
        Ok(deeper)
    }
}

/// Lowest common member of two ascending-sorted index slices.
fn intersect_first(a: &[usize], b: &[usize]) -> Option<usize> {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Equal => return Some(a[i]),
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
        }
    }
    None
}

/// Builds a cover tree over points `0..n` by inserting them one at a time,
/// each insertion run at failure probability `config.delta / n`.
pub fn build(
    n: usize,
    config: &SearchConfig,
    oracle: &mut dyn DistanceOracle,
) -> Result<(CoverTree, RunReport)> {
    if n == 0 {
        return Err(Error::invalid("cannot build a tree over zero points"));
    }
    config.validate_common()?;
    let started = Instant::now();
    let start_calls = oracle.calls();

    let per_insert = SearchConfig {
        delta: config.delta / n as f64,
        ..config.clone()
    };
    let mut tree = CoverTree::new();
    let mut outcome = Outcome::Success;
    for p in 0..n {
        let mut ledger = SampleLedger::new();
        let insert_report = insert(&mut tree, p, &per_insert, oracle, &mut ledger)?;
        outcome = outcome.merge(insert_report.outcome);
    }

    let mut report = RunReport::new("build");
    report.outcome = outcome;
    report.total_oracle_calls = oracle.calls() - start_calls;
    report.config = serde_json::to_value(config)?;
    report.wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok((tree, report))
}
