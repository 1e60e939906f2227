//! Approximate search exits the descent early once every surviving
//! candidate is provably far enough, trading a (1 + epsilon) factor for a
//! large cut in oracle calls on clustered data.
//!
//! ```bash
//! cargo run --release --example approximate_search
//! ```

use bandit_covertree::prelude::*;

fn main() -> Result<()> {
    // Two tight clusters 100 apart; queries land between the points of
    // cluster A, where exact search has to resolve many near-ties.
    let params = GenParams {
        radius: 0.2,
        separation: 100.0,
        ..GenParams::default()
    };
    let n = 24;
    let points = generate_dataset(DatasetKind::TwoClusters, n, 2, &params, 6006)?;
    let truth = points.clone();

    let mut exact_oracle = StochasticOracle::exact(points.clone(), 0);
    let exact_config = SearchConfig::new(0.1);
    let approx_config = SearchConfig::new(0.1).with_epsilon(1.0);
    let (tree, _) = build(n, &exact_config, &mut exact_oracle)?;

    let mut total_exact = 0u64;
    let mut total_approx = 0u64;
    for trial in 0..10u64 {
        let q = [0.3 + 0.05 * trial as f64, -0.2 + 0.04 * trial as f64];

        let mut noisy = StochasticOracle::gaussian(points.clone(), 1.0, 100 + trial)?;
        let item = noisy.register_external(&q)?;
        let approx = find_nearest_approx(&tree, item, &approx_config, &mut noisy)?;

        let mut noisy = StochasticOracle::gaussian(points.clone(), 1.0, 100 + trial)?;
        let item = noisy.register_external(&q)?;
        let exact = find_nearest(&tree, item, &exact_config, &mut noisy)?;

        let best = (0..n)
            .map(|i| truth.distance_to(&q, i))
            .fold(f64::INFINITY, f64::min);
        println!(
            "trial {trial}: approx {} calls (exit level {:?}), exact {} calls, \
             approx distance {:.3} vs best {:.3}",
            approx.report.total_oracle_calls,
            approx.report.early_exit_level,
            exact.report.total_oracle_calls,
            truth.distance_to(&q, approx.nn),
            best,
        );
        total_approx += approx.report.total_oracle_calls;
        total_exact += exact.report.total_oracle_calls;
    }
    println!(
        "totals: approximate {total_approx} calls vs exact {total_exact} \
         ({:.1}x saving at epsilon = 1)",
        total_exact as f64 / total_approx as f64
    );
    Ok(())
}
