//! Synthetic dataset generators.
//!
//! The geometries are chosen to span a range of expansion constants: points
//! confined to a low-dimensional subspace keep the constant small regardless
//! of the ambient dimension, a uniform cube grows it with the dimension, and
//! well-separated clusters sit in between. All generators are deterministic
//! given the seed and resample on exact collisions so the points are
//! pairwise distinct.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::points::PointSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetKind {
    UniformCube,
    GaussianMixture,
    Line,
    TwoClusters,
    LowDimSubspace,
}

impl std::fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            DatasetKind::UniformCube => "uniform-cube",
            DatasetKind::GaussianMixture => "gaussian-mixture",
            DatasetKind::Line => "line",
            DatasetKind::TwoClusters => "two-clusters",
            DatasetKind::LowDimSubspace => "low-dim-subspace",
        };
        write!(f, "{name}")
    }
}

impl std::str::FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform-cube" => Ok(DatasetKind::UniformCube),
            "gaussian-mixture" => Ok(DatasetKind::GaussianMixture),
            "line" => Ok(DatasetKind::Line),
            "two-clusters" => Ok(DatasetKind::TwoClusters),
            "low-dim-subspace" => Ok(DatasetKind::LowDimSubspace),
            other => Err(Error::invalid(format!("unknown dataset kind {other:?}"))),
        }
    }
}

/// Generator parameters; each kind reads the fields it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenParams {
    /// Cube side (uniform-cube) and center spread (gaussian-mixture).
    pub scale: f64,
    /// Point spacing for the line.
    pub spacing: f64,
    /// Distance between the two cluster centers.
    pub separation: f64,
    /// Cluster ball radius (two-clusters).
    pub radius: f64,
    /// Mixture component count.
    pub components: usize,
    /// Within-component standard deviation (gaussian-mixture).
    pub cluster_sigma: f64,
    /// Intrinsic dimension of the embedded subspace.
    pub intrinsic_dim: usize,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            scale: 1.0,
            spacing: 1.0,
            separation: 100.0,
            radius: 0.1,
            components: 4,
            cluster_sigma: 0.5,
            intrinsic_dim: 2,
        }
    }
}

/// Generates `n` pairwise-distinct points of dimension `dim`.
pub fn generate_dataset(
    kind: DatasetKind,
    n: usize,
    dim: usize,
    params: &GenParams,
    seed: u64,
) -> Result<PointSet> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    if dim == 0 {
        return Err(Error::invalid("dim must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);

    match kind {
        DatasetKind::Line => {
            if !(params.spacing > 0.0) {
                return Err(Error::invalid("line spacing must be positive"));
            }
            for i in 0..n {
                let mut p = vec![0.0; dim];
                p[0] = i as f64 * params.spacing;
                rows.push(p);
            }
        }
        DatasetKind::UniformCube => {
            let side = params.scale;
            while rows.len() < n {
                let p: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..side)).collect();
                push_if_fresh(&mut rows, p);
            }
        }
        DatasetKind::GaussianMixture => {
            if params.components == 0 {
                return Err(Error::invalid("mixture needs at least one component"));
            }
            let normal = Normal::new(0.0, params.cluster_sigma)
                .map_err(|e| Error::invalid(format!("bad cluster sigma: {e}")))?;
            let centers: Vec<Vec<f64>> = (0..params.components)
                .map(|_| (0..dim).map(|_| rng.gen_range(0.0..params.scale)).collect())
                .collect();
            while rows.len() < n {
                let c = &centers[rng.gen_range(0..params.components)];
                let p: Vec<f64> = c.iter().map(|&x| x + normal.sample(&mut rng)).collect();
                push_if_fresh(&mut rows, p);
            }
        }
        DatasetKind::TwoClusters => {
            if !(params.radius > 0.0 && params.separation > 0.0) {
                return Err(Error::invalid(
                    "cluster radius and separation must be positive",
                ));
            }
            while rows.len() < n {
                // Alternate clusters so both get ceil/floor(n/2) points.
                let offset = if rows.len() % 2 == 0 {
                    0.0
                } else {
                    params.separation
                };
                let mut p = ball_point(&mut rng, dim, params.radius);
                p[0] += offset;
                push_if_fresh(&mut rows, p);
            }
        }
        DatasetKind::LowDimSubspace => {
            let k = params.intrinsic_dim;
            if k == 0 || k > dim {
                return Err(Error::invalid(format!(
                    "intrinsic dimension must be in 1..={dim}, got {k}"
                )));
            }
            let basis = orthonormal_basis(&mut rng, dim, k);
            while rows.len() < n {
                let z: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..params.scale)).collect();
                let mut p = vec![0.0; dim];
                for (zi, b) in z.iter().zip(basis.iter()) {
                    for (pj, bj) in p.iter_mut().zip(b.iter()) {
                        *pj += zi * bj;
                    }
                }
                push_if_fresh(&mut rows, p);
            }
        }
    }

    let points = PointSet::new(rows)?;
    debug_assert!(points.find_duplicate().is_none());
    Ok(points)
}

fn push_if_fresh(rows: &mut Vec<Vec<f64>>, p: Vec<f64>) {
    let dup = rows.iter().any(|q| {
        q.len() == p.len()
            && q.iter()
                .zip(p.iter())
                .all(|(a, b)| a.to_bits() == b.to_bits())
    });
    if !dup {
        rows.push(p);
    }
}

/// Uniform draw from a ball of the given radius.
fn ball_point(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    loop {
        let g: Vec<f64> = (0..dim).map(|_| normal.sample(rng)).collect();
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-12 {
            continue;
        }
        let r = radius * rng.gen_range(0.0f64..1.0).powf(1.0 / dim as f64);
        return g.into_iter().map(|x| x / norm * r).collect();
    }
}

/// Gram-Schmidt over seeded Gaussian vectors.
fn orthonormal_basis(rng: &mut ChaCha8Rng, dim: usize, k: usize) -> Vec<Vec<f64>> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    while basis.len() < k {
        let mut v: Vec<f64> = (0..dim).map(|_| normal.sample(rng)).collect();
        for b in &basis {
            let proj: f64 = v.iter().zip(b.iter()).map(|(x, y)| x * y).sum();
            for (vi, bi) in v.iter_mut().zip(b.iter()) {
                *vi -= proj * bi;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-9 {
            continue;
        }
        basis.push(v.into_iter().map(|x| x / norm).collect());
    }
    basis
}
