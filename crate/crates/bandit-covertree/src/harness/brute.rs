//! Exact ground truth: brute-force nearest neighbors and the expansion
//! constant.
//!
//! These run on true distances and exist to validate what the oracle-driven
//! algorithms produce. The search and maintenance code never touches them.

use crate::error::{Error, Result};
use crate::nngraph::NnGraph;
use crate::points::PointSet;

/// Exact nearest neighbor of `q` by full scan; ties break to the lowest
/// index.
pub fn brute_force_nn(points: &PointSet, q: &[f64]) -> Result<usize> {
    if points.is_empty() {
        return Err(Error::invalid("empty point set"));
    }
    if q.len() != points.dim() {
        return Err(Error::DimensionMismatch {
            expected: points.dim(),
            got: q.len(),
        });
    }
    let mut best = 0;
    let mut best_d = points.distance_to(q, 0);
    for i in 1..points.len() {
        let d = points.distance_to(q, i);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    Ok(best)
}

/// Exact nearest-neighbor graph by the quadratic scan.
pub fn brute_force_nn_graph(points: &PointSet) -> Result<NnGraph> {
    let n = points.len();
    if n < 2 {
        return Err(Error::invalid(
            "a nearest-neighbor graph needs at least two points",
        ));
    }
    let mut edges = Vec::with_capacity(n);
    for i in 0..n {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = points.distance(i, j);
            if d < best_d {
                best = j;
                best_d = d;
            }
        }
        edges.push(best);
    }
    NnGraph::from_edges(edges)
}

/// Expansion constant of the point set: the smallest `c >= 2` with
/// `|B(x, 2r)| <= c * |B(x, r)|` for every point `x` and radius `r > 0`.
///
/// The supremum over all radii is attained either at a pairwise distance or
/// just below one, so for each center it suffices to evaluate the closed
/// ratio at every distance from that center together with its left limit
/// (an open-ball ratio).
pub fn estimate_expansion_constant(points: &PointSet) -> f64 {
    let n = points.len();
    if n < 2 {
        return 2.0;
    }
    let mut worst: f64 = 2.0;
    let mut dists = Vec::with_capacity(n);
    for x in 0..n {
        dists.clear();
        for y in 0..n {
            dists.push(if x == y { 0.0 } else { points.distance(x, y) });
        }
        dists.sort_by(f64::total_cmp);
        let count_le = |r: f64| -> usize { dists.partition_point(|&d| d <= r) };
        let count_lt = |r: f64| -> usize { dists.partition_point(|&d| d < r) };
        for idx in 1..n {
            let r = dists[idx];
            if r <= 0.0 {
                continue;
            }
            let closed = count_le(2.0 * r) as f64 / count_le(r) as f64;
            // Left limit: open balls at the breakpoint.
            let open_inner = count_lt(r);
            if open_inner > 0 {
                let open = count_lt(2.0 * r) as f64 / open_inner as f64;
                worst = worst.max(open);
            }
            worst = worst.max(closed);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nn_on_a_line() {
        let points = PointSet::new(vec![vec![0.0], vec![1.0], vec![3.0]]).unwrap();
        assert_eq!(brute_force_nn(&points, &[2.4]).unwrap(), 2);
    }

    #[test]
    fn nn_tie_breaks_low() {
        let points = PointSet::new(vec![vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(brute_force_nn(&points, &[1.0]).unwrap(), 0);
    }

    #[test]
    fn graph_on_a_line() {
        let points = PointSet::new(vec![vec![0.0], vec![1.0], vec![3.0]]).unwrap();
        let graph = brute_force_nn_graph(&points).unwrap();
        assert_eq!(graph.neighbor(0), 1);
        assert_eq!(graph.neighbor(1), 0);
        assert_eq!(graph.neighbor(2), 1);
    }

    #[test]
    fn expansion_of_two_points() {
        let points = PointSet::new(vec![vec![0.0], vec![1.0]]).unwrap();
        assert_eq!(estimate_expansion_constant(&points), 2.0);
    }

    #[test]
    fn expansion_of_singleton_is_floor() {
        let points = PointSet::new(vec![vec![0.0]]).unwrap();
        assert_eq!(estimate_expansion_constant(&points), 2.0);
    }

    #[test]
    fn expansion_matches_full_enumeration() {
        // Independent oracle: sweep closed-ball ratios over a dense radius
        // grid containing every breakpoint and its left neighborhood.
        let check = |points: &PointSet| {
            let n = points.len();
            let mut radii = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        let d = points.distance(i, j);
                        for r in [d, d / 2.0] {
                            radii.push(r);
                            radii.push(r - 1e-9);
                        }
                    }
                }
            }
            let mut worst: f64 = 2.0;
            for x in 0..n {
                for &r in &radii {
                    if r <= 0.0 {
                        continue;
                    }
                    let ball = |rad: f64| {
                        (0..n)
                            .filter(|&y| {
                                (x == y && 0.0 <= rad) || (x != y && points.distance(x, y) <= rad)
                            })
                            .count() as f64
                    };
                    worst = worst.max(ball(2.0 * r) / ball(r));
                }
            }
            worst
        };

        let line4 = PointSet::new(vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let expected = check(&line4);
        assert_eq!(estimate_expansion_constant(&line4), expected);
        assert_eq!(expected, 3.0);

        let planted = PointSet::new(vec![
            vec![0.0, 0.0],
            vec![1.0, 0.2],
            vec![2.5, 1.0],
            vec![0.3, 2.0],
            vec![4.0, 4.0],
            vec![4.1, 3.8],
        ])
        .unwrap();
        assert_eq!(estimate_expansion_constant(&planted), check(&planted));
    }

    #[test]
    fn subspace_has_smaller_expansion_than_cube() {
        use crate::harness::{generate_dataset, DatasetKind, GenParams};
        let params = GenParams {
            intrinsic_dim: 2,
            scale: 1.0,
            ..GenParams::default()
        };
        let sub = generate_dataset(DatasetKind::LowDimSubspace, 256, 64, &params, 7).unwrap();
        let cube = generate_dataset(DatasetKind::UniformCube, 256, 8, &params, 7).unwrap();
        let c_sub = estimate_expansion_constant(&sub);
        let c_cube = estimate_expansion_constant(&cube);
        assert!(
            c_sub <= c_cube,
            "subspace constant {c_sub} should not exceed cube constant {c_cube}"
        );
    }
}
