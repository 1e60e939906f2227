//! Adaptive sampling subroutines built on anytime confidence intervals.
//!
//! Every tree operation reduces its distance questions to one of three
//! bandit problems against the stochastic oracle:
//!
//! - [`identify_cover`]: find the candidates within `epsilon` of the closest
//!   candidate, tolerating a `gamma` slack band (all-epsilon-good
//!   identification);
//! - [`threshold_partition`]: split candidates into those confidently below
//!   versus above a fixed distance threshold;
//! - [`find_smallest_in_set`]: return the single closest candidate
//!   (successive elimination).
//!
//! [`confirm_min_above`] is a restricted threshold check used by the
//! approximate search exit: it stops as soon as one candidate is confidently
//! at or below the threshold instead of classifying everything.
//!
//! All loops share per-pair samples through a [`SampleLedger`] — candidates
//! that already carry counts are not re-initialized — and guarantee
//! termination through a per-pair pull cap: a pair that reaches the cap is
//! classified by its empirical mean and the outcome is flagged as capped.
//! When the oracle declares itself noiseless the loops take one sample per
//! pair and compare exactly; that path is meant for ground-truth harness
//! runs.
//!
//! Each bandit call is single-threaded and owns the samples it draws.
//! Distinct calls on distinct anchors may run concurrently only with
//! independent oracle streams.

use serde::{Deserialize, Serialize};

use crate::confidence::ConfidenceSchedule;
use crate::error::{Error, Result};
use crate::ledger::{PairKey, SampleLedger};
use crate::oracle::{DistanceOracle, Item};

/// Cap and stopping-rule configuration shared by all bandit loops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BanditConfig {
    /// Per-pair pull cap. Zero-gap pairs (duplicate points, a distance
    /// exactly at a threshold) would otherwise never separate.
    pub t_max: u64,
    /// Tighter lower stopping threshold for [`identify_cover`]: uses
    /// `min lcb + epsilon` instead of `min lcb + epsilon + gamma`. Usually
    /// faster, with a worse worst case on adversarial gaps.
    pub lt_variant: bool,
}

impl Default for BanditConfig {
    fn default() -> Self {
        Self {
            t_max: 1_000_000,
            lt_variant: false,
        }
    }
}

/// Result of a bandit call.
#[derive(Debug, Clone)]
pub struct BanditOutcome<T> {
    pub selected: T,
    /// Oracle calls made by this call; always equals the call-counter delta
    /// and the total count of `ledger_delta`.
    pub oracle_calls: u64,
    /// True when a pull cap forced a classification by empirical mean.
    pub capped: bool,
    /// The samples drawn by this call alone.
    pub ledger_delta: SampleLedger,
}

/// Query for [`identify_cover`].
#[derive(Debug, Clone)]
pub struct CoverQuery<'a> {
    pub anchor: Item,
    pub candidates: &'a [usize],
    /// Cover resolution: the target is every candidate within
    /// `min distance + epsilon`.
    pub epsilon: f64,
    /// Tolerated slack: nothing farther than
    /// `min distance + epsilon + gamma` may be returned.
    pub gamma: f64,
    pub delta: f64,
    /// Denominator of the per-pair union bound; widths run at
    /// `delta / union_denominator`.
    pub union_denominator: usize,
}

/// Query for [`threshold_partition`] and [`confirm_min_above`].
#[derive(Debug, Clone)]
pub struct ThresholdQuery<'a> {
    pub anchor: Item,
    pub candidates: &'a [usize],
    pub theta: f64,
    pub delta: f64,
    pub union_denominator: usize,
}

/// Query for [`find_smallest_in_set`].
#[derive(Debug, Clone)]
pub struct SmallestQuery<'a> {
    pub anchor: Item,
    pub candidates: &'a [usize],
    pub delta: f64,
    pub union_denominator: usize,
}

/// Partition produced by [`threshold_partition`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ThresholdSplit {
    pub below: Vec<usize>,
    pub above: Vec<usize>,
}

/// One diagnostic row per pull, for NDJSON trace streams.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub round: u64,
    pub pulled: usize,
    pub mean: f64,
    pub width: f64,
}

/// Optional per-pull diagnostic sink.
pub type TraceSink<'a> = &'a mut dyn FnMut(&TraceRow);

/// Per-candidate running state. Sums and counts include any prior samples
/// read from the shared ledger; the delta against those priors becomes the
/// outcome's ledger contribution. Widths are cached per arm — they only
/// change when that arm is pulled, while the stopping rules reread them
/// every round.
struct Arms {
    anchor: Item,
    idx: Vec<usize>,
    sum: Vec<f64>,
    count: Vec<u64>,
    width: Vec<f64>,
    prior_sum: Vec<f64>,
    prior_count: Vec<u64>,
    schedule: Option<ConfidenceSchedule>,
    exact: bool,
    t_max: u64,
    start_calls: u64,
    capped_flag: bool,
    round: u64,
}

impl Arms {
    fn new(
        anchor: Item,
        candidates: &[usize],
        delta: f64,
        union_denominator: usize,
        cfg: &BanditConfig,
        oracle: &dyn DistanceOracle,
        ledger: &SampleLedger,
    ) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::invalid(format!(
                "delta must be in (0, 1), got {delta}"
            )));
        }
        if union_denominator == 0 {
            return Err(Error::invalid("union denominator must be at least 1"));
        }
        if cfg.t_max == 0 {
            return Err(Error::invalid("pull cap must be at least 1"));
        }
        if let Item::Point(a) = anchor {
            if candidates.contains(&a) {
                return Err(Error::invalid(format!(
                    "anchor {a} must not appear among the candidates"
                )));
            }
        }
        let exact = oracle.is_exact();
        let schedule = if exact {
            None
        } else {
            Some(ConfidenceSchedule::with_scale(
                delta / union_denominator as f64,
                oracle.noise_scale(),
            )?)
        };
        let mut sum = Vec::with_capacity(candidates.len());
        let mut count = Vec::with_capacity(candidates.len());
        let mut width = Vec::with_capacity(candidates.len());
        for &j in candidates {
            let key = PairKey::new(anchor, Item::Point(j));
            let c = ledger.count(key);
            sum.push(ledger.sum(key));
            count.push(c);
            width.push(match &schedule {
                Some(s) if c > 0 => s.width(c),
                _ => 0.0,
            });
        }
        Ok(Self {
            anchor,
            idx: candidates.to_vec(),
            prior_sum: sum.clone(),
            prior_count: count.clone(),
            sum,
            count,
            width,
            schedule,
            exact,
            t_max: cfg.t_max,
            start_calls: oracle.calls(),
            capped_flag: false,
            round: 0,
        })
    }

    fn len(&self) -> usize {
        self.idx.len()
    }

    fn pull(
        &mut self,
        i: usize,
        oracle: &mut dyn DistanceOracle,
        trace: &mut Option<TraceSink<'_>>,
    ) -> Result<()> {
        let item = Item::Point(self.idx[i]);
        let x = oracle.sample(self.anchor, item)?;
        self.sum[i] += x;
        self.count[i] += 1;
        if let Some(s) = &self.schedule {
            self.width[i] = s.width(self.count[i]);
        }
        if let Some(sink) = trace.as_mut() {
            sink(&TraceRow {
                round: self.round,
                pulled: self.idx[i],
                mean: self.mean(i),
                width: self.width(i),
            });
        }
        Ok(())
    }

    /// One initialization pull for every candidate without prior samples.
    fn init_pulls(
        &mut self,
        oracle: &mut dyn DistanceOracle,
        trace: &mut Option<TraceSink<'_>>,
    ) -> Result<()> {
        for i in 0..self.len() {
            if self.count[i] == 0 {
                self.pull(i, oracle, trace)?;
            }
        }
        Ok(())
    }

    fn mean(&self, i: usize) -> f64 {
        debug_assert!(self.count[i] > 0);
        self.sum[i] / self.count[i] as f64
    }

    fn width(&self, i: usize) -> f64 {
        self.width[i]
    }

    fn ucb(&self, i: usize) -> f64 {
        self.mean(i) + self.width(i)
    }

    fn lcb(&self, i: usize) -> f64 {
        self.mean(i) - self.width(i)
    }

    fn capped(&self, i: usize) -> bool {
        self.count[i] >= self.t_max
    }

    fn min_mean(&self) -> f64 {
        (0..self.len())
            .map(|i| self.mean(i))
            .fold(f64::INFINITY, f64::min)
    }

    fn min_ucb(&self) -> f64 {
        (0..self.len())
            .map(|i| self.ucb(i))
            .fold(f64::INFINITY, f64::min)
    }

    fn min_lcb(&self) -> f64 {
        (0..self.len())
            .map(|i| self.lcb(i))
            .fold(f64::INFINITY, f64::min)
    }

    fn finish<T>(
        self,
        selected: T,
        oracle: &dyn DistanceOracle,
        shared: &mut SampleLedger,
    ) -> BanditOutcome<T> {
        let mut delta = SampleLedger::new();
        for i in 0..self.len() {
            let new = self.count[i] - self.prior_count[i];
            if new > 0 {
                let key = PairKey::new(self.anchor, Item::Point(self.idx[i]));
                let sum = self.sum[i] - self.prior_sum[i];
                delta.record_batch(key, sum, new).expect("finite sums");
            }
        }
        shared.merge(&delta);
        let oracle_calls = oracle.calls() - self.start_calls;
        debug_assert_eq!(oracle_calls, delta.total_count());
        BanditOutcome {
            selected,
            oracle_calls,
            capped: self.capped_flag,
            ledger_delta: delta,
        }
    }
}

/// Identifies a cover of the candidates around the anchor.
///
/// With probability at least `1 - delta` the returned set `G` satisfies
///
/// ```text
/// { j : d(anchor, j) <= d(anchor, Q) + epsilon }            is a subset of G
/// G   is a subset of
/// { j : d(anchor, j) <= d(anchor, Q) + epsilon + gamma }
/// ```
///
/// Each round samples the optimistic member of the empirical good set, the
/// pessimistic non-member, and the candidate with the lowest lower bound;
/// the loop stops once every candidate's interval clears the moving
/// upper/lower thresholds.
pub fn identify_cover(
    query: &CoverQuery<'_>,
    cfg: &BanditConfig,
    oracle: &mut dyn DistanceOracle,
    ledger: &mut SampleLedger,
    mut trace: Option<TraceSink<'_>>,
) -> Result<BanditOutcome<Vec<usize>>> {
    if query.candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    if !(query.epsilon > 0.0) {
        return Err(Error::invalid("epsilon must be positive"));
    }
    if !(query.gamma >= 0.0) {
        return Err(Error::invalid("gamma must be nonnegative"));
    }
    let mut arms = Arms::new(
        query.anchor,
        query.candidates,
        query.delta,
        query.union_denominator,
        cfg,
        oracle,
        ledger,
    )?;
    arms.init_pulls(oracle, &mut trace)?;

    if arms.exact {
        // One sample per pair, exact comparisons: return the ideal target
        // set at resolution epsilon.
        let bar = arms.min_mean() + query.epsilon;
        let selected: Vec<usize> = (0..arms.len())
            .filter(|&i| arms.mean(i) <= bar)
            .map(|i| arms.idx[i])
            .collect();
        return Ok(arms.finish(selected, oracle, ledger));
    }

    let eps = query.epsilon;
    let slack = if cfg.lt_variant { 0.0 } else { query.gamma };
    loop {
        arms.round += 1;
        let upper = arms.min_ucb() + eps;
        let lower = arms.min_lcb() + eps + slack;
        let min_mean = arms.min_mean();

        // Unknown = interval not yet clear of both thresholds and still
        // below the pull cap.
        let unknown: Vec<usize> = (0..arms.len())
            .filter(|&i| !arms.capped(i) && arms.lcb(i) <= upper && arms.ucb(i) >= lower)
            .collect();
        if unknown.is_empty() {
            break;
        }

        // Optimistic member of the empirical good set.
        let good = |i: usize| arms.mean(i) <= min_mean + eps;
        let j1 = unknown
            .iter()
            .copied()
            .filter(|&i| good(i))
            .min_by(|&a, &b| arms.ucb(a).total_cmp(&arms.ucb(b)));
        // Pessimistic non-member.
        let j2 = unknown
            .iter()
            .copied()
            .filter(|&i| !good(i))
            .max_by(|&a, &b| arms.lcb(a).total_cmp(&arms.lcb(b)).then(b.cmp(&a)));
        // Lowest lower bound over everything still pullable.
        let j_star = (0..arms.len())
            .filter(|&i| !arms.capped(i))
            .min_by(|&a, &b| arms.lcb(a).total_cmp(&arms.lcb(b)));

        let mut pulled_any = false;
        for j in [j1, j2, j_star].into_iter().flatten() {
            if !arms.capped(j) {
                arms.pull(j, oracle, &mut trace)?;
                pulled_any = true;
            }
        }
        if !pulled_any {
            break;
        }
    }

    // Membership is decided from the final bounds; capped candidates are
    // classified by their empirical mean against the middle of the slack
    // band.
    let lower = arms.min_lcb() + eps + slack;
    let capped_bar = arms.min_mean() + eps + query.gamma / 2.0;
    let mut selected = Vec::new();
    for i in 0..arms.len() {
        let take = if arms.capped(i) {
            arms.capped_flag = true;
            arms.mean(i) <= capped_bar
        } else {
            arms.ucb(i) < lower
        };
        if take {
            selected.push(arms.idx[i]);
        }
    }
    if selected.is_empty() {
        // Unreachable for uncapped runs; under a cap storm fall back to the
        // empirical argmin so the descent can continue.
        let best = (0..arms.len())
            .min_by(|&a, &b| arms.mean(a).total_cmp(&arms.mean(b)))
            .expect("candidates nonempty");
        selected.push(arms.idx[best]);
    }
    Ok(arms.finish(selected, oracle, ledger))
}

/// Splits the candidates into those confidently below (`d <= theta`) versus
/// above (`d > theta`) the threshold, with per-pair widths at
/// `delta / union_denominator`. Pre-populated ledger counts are reused:
/// candidates with existing samples skip the initialization pull.
pub fn threshold_partition(
    query: &ThresholdQuery<'_>,
    cfg: &BanditConfig,
    oracle: &mut dyn DistanceOracle,
    ledger: &mut SampleLedger,
    mut trace: Option<TraceSink<'_>>,
) -> Result<BanditOutcome<ThresholdSplit>> {
    if !(query.theta > 0.0) {
        return Err(Error::invalid("theta must be positive"));
    }
    if query.candidates.is_empty() {
        return Ok(BanditOutcome {
            selected: ThresholdSplit::default(),
            oracle_calls: 0,
            capped: false,
            ledger_delta: SampleLedger::new(),
        });
    }
    let mut arms = Arms::new(
        query.anchor,
        query.candidates,
        query.delta,
        query.union_denominator,
        cfg,
        oracle,
        ledger,
    )?;
    arms.init_pulls(oracle, &mut trace)?;

    let theta = query.theta;
    if !arms.exact {
        loop {
            arms.round += 1;
            // The threshold is fixed, so a classification never reverts:
            // classified arms are simply not pulled again.
            let open: Vec<usize> = (0..arms.len())
                .filter(|&i| !arms.capped(i) && arms.ucb(i) > theta && arms.lcb(i) <= theta)
                .collect();
            let Some(&j) = open
                .iter()
                .min_by(|&&a, &&b| arms.lcb(a).total_cmp(&arms.lcb(b)))
            else {
                break;
            };
            arms.pull(j, oracle, &mut trace)?;
        }
    }

    let mut split = ThresholdSplit::default();
    for i in 0..arms.len() {
        let below = if arms.exact {
            arms.mean(i) <= theta
        } else if arms.ucb(i) <= theta {
            true
        } else if arms.lcb(i) > theta {
            false
        } else {
            // Interval still straddles theta: only possible at the cap.
            arms.capped_flag = true;
            arms.mean(i) <= theta
        };
        if below {
            split.below.push(arms.idx[i]);
        } else {
            split.above.push(arms.idx[i]);
        }
    }
    Ok(arms.finish(split, oracle, ledger))
}

/// Returns the candidate closest to the anchor by successive elimination:
/// every surviving candidate is sampled each round and a candidate is
/// eliminated once some upper bound sits below its lower bound. Exact ties
/// are resolved at the pull cap by the empirical argmin, flagged as capped.
pub fn find_smallest_in_set(
    query: &SmallestQuery<'_>,
    cfg: &BanditConfig,
    oracle: &mut dyn DistanceOracle,
    ledger: &mut SampleLedger,
    mut trace: Option<TraceSink<'_>>,
) -> Result<BanditOutcome<usize>> {
    if query.candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    if query.candidates.len() == 1 {
        // A singleton needs no sampling at all.
        return Ok(BanditOutcome {
            selected: query.candidates[0],
            oracle_calls: 0,
            capped: false,
            ledger_delta: SampleLedger::new(),
        });
    }
    let mut arms = Arms::new(
        query.anchor,
        query.candidates,
        query.delta,
        query.union_denominator,
        cfg,
        oracle,
        ledger,
    )?;
    arms.init_pulls(oracle, &mut trace)?;

    let selected = if arms.exact {
        let best = (0..arms.len())
            .min_by(|&a, &b| arms.mean(a).total_cmp(&arms.mean(b)))
            .expect("nonempty");
        arms.idx[best]
    } else {
        loop {
            arms.round += 1;
            let min_ucb = arms.min_ucb();
            let survivors: Vec<usize> = (0..arms.len())
                .filter(|&i| arms.lcb(i) <= min_ucb)
                .collect();
            if survivors.len() == 1 {
                break arms.idx[survivors[0]];
            }
            let pullable: Vec<usize> = survivors
                .iter()
                .copied()
                .filter(|&i| !arms.capped(i))
                .collect();
            if pullable.is_empty() {
                // Unresolvable tie: every survivor is at the cap.
                arms.capped_flag = true;
                let best = survivors
                    .into_iter()
                    .min_by(|&a, &b| arms.mean(a).total_cmp(&arms.mean(b)))
                    .expect("nonempty survivors");
                break arms.idx[best];
            }
            for i in pullable {
                arms.pull(i, oracle, &mut trace)?;
            }
        }
    };
    Ok(arms.finish(selected, oracle, ledger))
}

/// Checks whether every candidate is confidently farther than `theta`, i.e.
/// whether `d(anchor, candidates) >= theta`. Unlike [`threshold_partition`]
/// this refutes early: the first candidate whose upper bound reaches `theta`
/// settles the answer as `false` without classifying the rest.
pub fn confirm_min_above(
    query: &ThresholdQuery<'_>,
    cfg: &BanditConfig,
    oracle: &mut dyn DistanceOracle,
    ledger: &mut SampleLedger,
    mut trace: Option<TraceSink<'_>>,
) -> Result<BanditOutcome<bool>> {
    if !(query.theta > 0.0) {
        return Err(Error::invalid("theta must be positive"));
    }
    if query.candidates.is_empty() {
        return Ok(BanditOutcome {
            selected: true,
            oracle_calls: 0,
            capped: false,
            ledger_delta: SampleLedger::new(),
        });
    }
    let mut arms = Arms::new(
        query.anchor,
        query.candidates,
        query.delta,
        query.union_denominator,
        cfg,
        oracle,
        ledger,
    )?;
    arms.init_pulls(oracle, &mut trace)?;

    let theta = query.theta;
    let answer = if arms.exact {
        arms.min_mean() >= theta
    } else {
        loop {
            arms.round += 1;
            if (0..arms.len()).any(|i| arms.ucb(i) <= theta) {
                break false;
            }
            if (0..arms.len()).all(|i| arms.lcb(i) > theta) {
                break true;
            }
            let open: Vec<usize> = (0..arms.len())
                .filter(|&i| !arms.capped(i) && arms.lcb(i) <= theta)
                .collect();
            let Some(&j) = open
                .iter()
                .min_by(|&&a, &&b| arms.lcb(a).total_cmp(&arms.lcb(b)))
            else {
                // Every undecided candidate is capped; fall back to means.
                arms.capped_flag = true;
                break (0..arms.len())
                    .filter(|&i| arms.capped(i))
                    .all(|i| arms.mean(i) > theta);
            };
            arms.pull(j, oracle, &mut trace)?;
        }
    };
    Ok(arms.finish(answer, oracle, ledger))
}
