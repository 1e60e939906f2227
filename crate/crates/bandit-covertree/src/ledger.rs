//! Running per-pair sample statistics, shared between sampling rounds.
//!
//! The ledger keeps, for every unordered pair of items, the sum of the noisy
//! distance samples drawn so far and their count. Recursive tree operations
//! hand one ledger down the call chain so a pair measured at one level is not
//! re-measured from scratch at the next; the anytime confidence schedule
//! keeps the reuse statistically sound.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::oracle::Item;

/// Canonically ordered pair of items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairKey(Item, Item);

impl PairKey {
    pub fn new(a: Item, b: Item) -> Self {
        if a <= b {
            PairKey(a, b)
        } else {
            PairKey(b, a)
        }
    }

    pub fn items(&self) -> (Item, Item) {
        (self.0, self.1)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Cell {
    sum: f64,
    count: u64,
}

/// Per-pair running means and pull counts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleLedger {
    entries: BTreeMap<PairKey, Cell>,
}

impl SampleLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records one sample for the pair. Samples may be negative; clamping
    /// here would bias the stopping rules built on top.
    pub fn record(&mut self, pair: PairKey, sample: f64) -> Result<()> {
        if !sample.is_finite() {
            return Err(Error::invalid("ledger samples must be finite"));
        }
        let cell = self.entries.entry(pair).or_default();
        cell.sum += sample;
        cell.count += 1;
        Ok(())
    }

    /// Records a pre-aggregated batch of samples for the pair.
    pub fn record_batch(&mut self, pair: PairKey, sum: f64, count: u64) -> Result<()> {
        if !sum.is_finite() {
            return Err(Error::invalid("ledger samples must be finite"));
        }
        if count == 0 {
            return Ok(());
        }
        let cell = self.entries.entry(pair).or_default();
        cell.sum += sum;
        cell.count += count;
        Ok(())
    }

    /// Empirical mean for the pair; an error if nothing has been recorded.
    pub fn mean(&self, pair: PairKey) -> Result<f64> {
        match self.entries.get(&pair) {
            Some(cell) if cell.count > 0 => Ok(cell.sum / cell.count as f64),
            _ => Err(Error::NoData),
        }
    }

    /// Number of samples recorded for the pair (zero if unseen).
    pub fn count(&self, pair: PairKey) -> u64 {
        self.entries.get(&pair).map_or(0, |c| c.count)
    }

    pub fn sum(&self, pair: PairKey) -> f64 {
        self.entries.get(&pair).map_or(0.0, |c| c.sum)
    }

    /// Folds another ledger in: sums add, counts add.
    pub fn merge(&mut self, other: &SampleLedger) {
        for (key, cell) in &other.entries {
            let mine = self.entries.entry(*key).or_default();
            mine.sum += cell.sum;
            mine.count += cell.count;
        }
    }

    /// Total samples across all pairs.
    pub fn total_count(&self) -> u64 {
        self.entries.values().map(|c| c.count).sum()
    }

    pub fn pairs(&self) -> impl Iterator<Item = PairKey> + '_ {
        self.entries.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
