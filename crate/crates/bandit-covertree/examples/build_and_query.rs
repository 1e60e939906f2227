//! Build a cover tree through a noisy distance oracle and query it.
//!
//! ```bash
//! cargo run --release --example build_and_query
//! ```

use bandit_covertree::prelude::*;

fn main() -> Result<()> {
    // A mixture of four Gaussian clusters in R^8. The oracle adds N(0, 1)
    // noise to every distance sample, so no algorithm here ever sees a true
    // distance.
    let params = GenParams {
        scale: 20.0,
        cluster_sigma: 1.0,
        ..GenParams::default()
    };
    let n = 128;
    let points = generate_dataset(DatasetKind::GaussianMixture, n, 8, &params, 42)?;
    let truth = points.clone();

    let mut oracle = StochasticOracle::gaussian(points, 1.0, 7)?;
    let config = SearchConfig::new(0.1);

    let (tree, build_report) = build(n, &config, &mut oracle)?;
    println!(
        "built a tree over {n} points: levels {}..{}, {} oracle calls, outcome {:?}",
        tree.i_bottom(),
        tree.i_top(),
        build_report.total_oracle_calls,
        build_report.outcome
    );

    // Ten fresh queries; compare against exact brute force.
    let mut correct = 0;
    for k in 0..10 {
        let q: Vec<f64> = truth.point(k * 9).iter().map(|x| x + 0.4).collect();
        let item = oracle.register_external(&q)?;
        let result = find_nearest(&tree, item, &config, &mut oracle)?;
        let expected = brute_force_nn(&truth, &q)?;
        if result.nn == expected {
            correct += 1;
        }
        println!(
            "query {k}: nn = {} ({} oracle calls across {} levels){}",
            result.nn,
            result.report.total_oracle_calls,
            result.report.per_level.len(),
            if result.nn == expected {
                ""
            } else {
                "  <- differs from brute force"
            },
        );
    }
    println!("{correct}/10 queries matched exact brute force (delta = 0.1)");
    Ok(())
}
