//! The stochastic distance oracle: the only distance channel the search
//! algorithms may use.
//!
//! Each invocation returns `d(i, j) + eta` where `eta` is zero-mean noise.
//! Samples are unbiased and may be negative; nothing is clamped. Three
//! concrete oracles are provided:
//!
//! - `exact`: `eta == 0`, the true Euclidean distance;
//! - `gaussian`: `eta ~ N(0, sigma^2)`;
//! - `subsample`: an unbiased estimate of the *squared* Euclidean distance
//!   built from `len` coordinates drawn uniformly with replacement and
//!   rescaled by `dim / len`. With `len >= dim` every coordinate is used and
//!   the estimate is exact. Trees built on this oracle index the
//!   squared-distance surrogate, which preserves nearest-neighbor identity.
//!
//! Oracles and ledgers are single-writer: concurrent queries need distinct
//! oracle instances (distinct seeds, see [`StochasticOracle::fork`]); a
//! shared instance must be serialized externally. No internal locking is
//! performed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::points::PointSet;

/// An item the oracle can measure: a dataset point or a registered external
/// vector (a query point that is not part of the indexed set).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Item {
    Point(usize),
    Ext(u32),
}

/// Source of noisy unbiased distance samples.
pub trait DistanceOracle {
    /// Draws one sample of the distance between two distinct items and
    /// increments the call counter by exactly one.
    fn sample(&mut self, a: Item, b: Item) -> Result<f64>;

    /// Monotone count of oracle invocations.
    fn calls(&self) -> u64;

    /// True when every sample equals the true surrogate distance. Noiseless
    /// oracles let the bandits take one sample per pair and compare exactly.
    fn is_exact(&self) -> bool;

    /// Sub-Gaussian scale of the noise, used to scale confidence widths.
    fn noise_scale(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleKind {
    Exact,
    Gaussian,
    Subsample,
}

impl std::fmt::Display for OracleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OracleKind::Exact => write!(f, "exact"),
            OracleKind::Gaussian => write!(f, "gaussian"),
            OracleKind::Subsample => write!(f, "subsample"),
        }
    }
}

impl std::str::FromStr for OracleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(OracleKind::Exact),
            "gaussian" => Ok(OracleKind::Gaussian),
            "subsample" => Ok(OracleKind::Subsample),
            other => Err(Error::invalid(format!("unknown oracle kind {other:?}"))),
        }
    }
}

/// Stochastic oracle over a vector point set.
#[derive(Debug, Clone)]
pub struct StochasticOracle {
    kind: OracleKind,
    points: Arc<PointSet>,
    externals: Vec<Vec<f64>>,
    sigma: f64,
    subsample_len: usize,
    seed: u64,
    rng: ChaCha8Rng,
    calls: u64,
}

impl StochasticOracle {
    /// Noiseless oracle: every sample is the exact Euclidean distance.
    pub fn exact(points: PointSet, seed: u64) -> Self {
        Self {
            kind: OracleKind::Exact,
            points: Arc::new(points),
            externals: Vec::new(),
            sigma: 0.0,
            subsample_len: 0,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            calls: 0,
        }
    }

    /// Euclidean distance plus `N(0, sigma^2)` noise.
    pub fn gaussian(points: PointSet, sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!(
                "sigma must be nonnegative, got {sigma}"
            )));
        }
        Ok(Self {
            kind: OracleKind::Gaussian,
            points: Arc::new(points),
            externals: Vec::new(),
            sigma,
            subsample_len: 0,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            calls: 0,
        })
    }

    /// Coordinate-subsampling estimate of the squared Euclidean distance.
    ///
    /// `len` coordinates are drawn uniformly with replacement per call. The
    /// noise is bounded rather than Gaussian, so the caller supplies
    /// `effective_sigma`, the sub-Gaussian scale the confidence widths should
    /// assume for this data.
    pub fn subsample(
        points: PointSet,
        len: usize,
        effective_sigma: f64,
        seed: u64,
    ) -> Result<Self> {
        if len == 0 {
            return Err(Error::invalid("subsample length must be at least 1"));
        }
        if !(effective_sigma > 0.0 && effective_sigma.is_finite()) {
            return Err(Error::invalid("effective sigma must be positive"));
        }
        Ok(Self {
            kind: OracleKind::Subsample,
            points: Arc::new(points),
            externals: Vec::new(),
            sigma: effective_sigma,
            subsample_len: len,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            calls: 0,
        })
    }

    pub fn kind(&self) -> OracleKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn subsample_len(&self) -> usize {
        self.subsample_len
    }

    /// Registers a query vector and returns the item handle for it.
    pub fn register_external(&mut self, v: &[f64]) -> Result<Item> {
        if v.len() != self.points.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.points.dim(),
                got: v.len(),
            });
        }
        self.externals.push(v.to_vec());
        Ok(Item::Ext((self.externals.len() - 1) as u32))
    }

    /// Derives an independent oracle over the same points with a noise
    /// stream seeded from `(seed, salt)`. The call counter starts at zero.
    pub fn fork(&self, salt: u64) -> Self {
        let seed = crate::harness::seeds::mix(self.seed, salt);
        Self {
            kind: self.kind,
            points: Arc::clone(&self.points),
            externals: self.externals.clone(),
            sigma: self.sigma,
            subsample_len: self.subsample_len,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            calls: 0,
        }
    }

    fn check_item(&self, item: Item) -> Result<()> {
        match item {
            Item::Point(i) if i >= self.points.len() => Err(Error::IndexOutOfBounds {
                index: i,
                n: self.points.len(),
            }),
            Item::Ext(k) if k as usize >= self.externals.len() => Err(Error::IndexOutOfBounds {
                index: k as usize,
                n: self.externals.len(),
            }),
            _ => Ok(()),
        }
    }

    fn vector(&self, item: Item) -> &[f64] {
        match item {
            Item::Point(i) => self.points.point(i),
            Item::Ext(k) => &self.externals[k as usize],
        }
    }
}

impl DistanceOracle for StochasticOracle {
    fn sample(&mut self, a: Item, b: Item) -> Result<f64> {
        if a == b {
            if let Item::Point(i) = a {
                return Err(Error::SelfDistance(i));
            }
            return Err(Error::invalid("self-distance query for an external item"));
        }
        self.check_item(a)?;
        self.check_item(b)?;
        let dim = self.points.dim();
        // Coordinate draws happen before the vectors are borrowed.
        let picks: Vec<usize> = if self.kind == OracleKind::Subsample && self.subsample_len < dim {
            (0..self.subsample_len)
                .map(|_| self.rng.gen_range(0..dim))
                .collect()
        } else {
            Vec::new()
        };
        let base = {
            let x = self.vector(a);
            let y = self.vector(b);
            match self.kind {
                OracleKind::Exact | OracleKind::Gaussian => crate::points::euclidean(x, y),
                OracleKind::Subsample => {
                    if self.subsample_len >= dim {
                        crate::points::squared_euclidean(x, y)
                    } else {
                        let scale = dim as f64 / self.subsample_len as f64;
                        scale
                            * picks
                                .iter()
                                .map(|&k| {
                                    let d = x[k] - y[k];
                                    d * d
                                })
                                .sum::<f64>()
                    }
                }
            }
        };
        let sample = if self.kind == OracleKind::Gaussian && self.sigma > 0.0 {
            let normal = Normal::new(0.0, self.sigma).expect("sigma validated");
            base + normal.sample(&mut self.rng)
        } else {
            base
        };
        self.calls += 1;
        Ok(sample)
    }

    fn calls(&self) -> u64 {
        self.calls
    }

    fn is_exact(&self) -> bool {
        match self.kind {
            OracleKind::Exact => true,
            OracleKind::Gaussian => self.sigma == 0.0,
            OracleKind::Subsample => self.subsample_len >= self.points.dim(),
        }
    }

    fn noise_scale(&self) -> f64 {
        if self.is_exact() {
            0.0
        } else {
            self.sigma
        }
    }
}

/// Oracle over an opaque index universe whose true distances come from a
/// caller-supplied matrix, with optional Gaussian noise. Useful when
/// distances originate outside any vector embedding, and for tests that pin
/// exact distances by hand.
#[derive(Debug, Clone)]
pub struct MatrixOracle {
    d: Vec<Vec<f64>>,
    sigma: f64,
    rng: ChaCha8Rng,
    calls: u64,
}

impl MatrixOracle {
    /// `d` must be a square symmetric matrix; `sigma == 0` makes the oracle
    /// exact.
    pub fn new(d: Vec<Vec<f64>>, sigma: f64, seed: u64) -> Result<Self> {
        let n = d.len();
        if n == 0 {
            return Err(Error::invalid("distance matrix must be nonempty"));
        }
        for row in &d {
            if row.len() != n {
                return Err(Error::invalid("distance matrix must be square"));
            }
        }
        for i in 0..n {
            for j in 0..n {
                if (d[i][j] - d[j][i]).abs() > 1e-12 {
                    return Err(Error::invalid("distance matrix must be symmetric"));
                }
            }
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::invalid("sigma must be nonnegative"));
        }
        Ok(Self {
            d,
            sigma,
            rng: ChaCha8Rng::seed_from_u64(seed),
            calls: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.d.len()
    }
}

impl DistanceOracle for MatrixOracle {
    fn sample(&mut self, a: Item, b: Item) -> Result<f64> {
        let (i, j) = match (a, b) {
            (Item::Point(i), Item::Point(j)) => (i, j),
            _ => return Err(Error::invalid("matrix oracle only measures point indices")),
        };
        if i == j {
            return Err(Error::SelfDistance(i));
        }
        let n = self.d.len();
        if i >= n {
            return Err(Error::IndexOutOfBounds { index: i, n });
        }
        if j >= n {
            return Err(Error::IndexOutOfBounds { index: j, n });
        }
        let mut sample = self.d[i][j];
        if self.sigma > 0.0 {
            let normal = Normal::new(0.0, self.sigma).expect("sigma validated");
            sample += normal.sample(&mut self.rng);
        }
        self.calls += 1;
        Ok(sample)
    }

    fn calls(&self) -> u64 {
        self.calls
    }

    fn is_exact(&self) -> bool {
        self.sigma == 0.0
    }

    fn noise_scale(&self) -> f64 {
        self.sigma
    }
}
