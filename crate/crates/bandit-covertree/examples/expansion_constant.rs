//! The expansion constant measures how fast metric balls grow when their
//! radius doubles — a data-dependent intrinsic dimension that governs
//! cover-tree costs. Points on a low-dimensional subspace keep it small no
//! matter the ambient dimension.
//!
//! ```bash
//! cargo run --release --example expansion_constant
//! ```

use bandit_covertree::prelude::*;

fn main() -> Result<()> {
    let n = 256;
    let cases: Vec<(&str, PointSet)> = vec![
        (
            "line (n points, spacing 1)",
            generate_dataset(DatasetKind::Line, n, 1, &GenParams::default(), 0)?,
        ),
        (
            "uniform cube in R^2",
            generate_dataset(
                DatasetKind::UniformCube,
                n,
                2,
                &GenParams {
                    scale: 1.0,
                    ..GenParams::default()
                },
                1,
            )?,
        ),
        (
            "uniform cube in R^8",
            generate_dataset(
                DatasetKind::UniformCube,
                n,
                8,
                &GenParams {
                    scale: 1.0,
                    ..GenParams::default()
                },
                1,
            )?,
        ),
        (
            "2-dim subspace of R^64",
            generate_dataset(
                DatasetKind::LowDimSubspace,
                n,
                64,
                &GenParams {
                    intrinsic_dim: 2,
                    scale: 1.0,
                    ..GenParams::default()
                },
                2,
            )?,
        ),
        (
            "two tight clusters",
            generate_dataset(
                DatasetKind::TwoClusters,
                n,
                2,
                &GenParams {
                    radius: 0.5,
                    separation: 100.0,
                    ..GenParams::default()
                },
                3,
            )?,
        ),
    ];

    println!("expansion constants at n = {n}:");
    for (name, points) in &cases {
        let c = estimate_expansion_constant(points);
        println!("  {name:<28} c = {c:.2}");
    }
    println!();
    println!("a known bound c~ can be passed to searches (expansion_bound) to");
    println!("shrink the union bound from n + 1 to a height bound.");
    Ok(())
}
