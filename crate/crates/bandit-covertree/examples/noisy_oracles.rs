//! The oracle layer: noise models, the sample ledger, and anytime
//! confidence widths.
//!
//! ```bash
//! cargo run --release --example noisy_oracles
//! ```

use bandit_covertree::ledger::PairKey;
use bandit_covertree::prelude::*;

fn main() -> Result<()> {
    let points = PointSet::new(vec![vec![0.0, 0.0, 0.0, 0.0], vec![1.0, 2.0, 0.5, -1.0]])?;
    let (a, b) = (Item::Point(0), Item::Point(1));
    let true_euclidean = points.distance(0, 1);
    let true_squared = points.squared_distance(0, 1);

    // Exact oracle: zero noise, used for ground-truth harness runs.
    let mut exact = StochasticOracle::exact(points.clone(), 1);
    println!(
        "exact oracle: sample = {:.6}, true = {true_euclidean:.6}",
        exact.sample(a, b)?
    );

    // Gaussian oracle: unbiased samples, may come back negative. Nothing is
    // clamped; clamping would bias the adaptive stopping rules downstream.
    let mut gaussian = StochasticOracle::gaussian(points.clone(), 1.0, 2)?;
    let mut ledger = SampleLedger::new();
    let pair = PairKey::new(a, b);
    for _ in 0..2000 {
        ledger.record(pair, gaussian.sample(a, b)?)?;
    }
    println!(
        "gaussian oracle: mean of {} samples = {:.4} (true {:.4}), {} oracle calls",
        ledger.count(pair),
        ledger.mean(pair)?,
        true_euclidean,
        gaussian.calls()
    );

    // Subsampling oracle: unbiased for the *squared* distance, built from 2
    // of the 4 coordinates per call. Squaring preserves nearest-neighbor
    // identity, so trees index the squared surrogate directly.
    let mut sub = StochasticOracle::subsample(points.clone(), 2, 2.0, 3)?;
    let mean: f64 = (0..2000).map(|_| sub.sample(a, b).unwrap()).sum::<f64>() / 2000.0;
    println!("subsample oracle: mean = {mean:.4} (true squared {true_squared:.4})");

    // Anytime confidence widths: valid at every sample count
    // simultaneously, which is what lets the bandits stop adaptively.
    let schedule = ConfidenceSchedule::new(0.05)?;
    for t in [1u64, 10, 100, 1000, 100_000] {
        println!("  width(t = {t:>6}) = {:.4}", schedule.width(t));
    }
    let mut running = 0.0;
    let mut worst = 0.0f64;
    let mut noisy = StochasticOracle::gaussian(points, 1.0, 4)?;
    for t in 1..=1000u64 {
        running += noisy.sample(a, b)?;
        let deviation = (running / t as f64 - true_euclidean).abs();
        worst = worst.max(deviation - schedule.width(t));
    }
    println!(
        "anytime band over a 1000-sample trajectory: worst excess {}",
        if worst <= 0.0 {
            "none (fully covered)".to_string()
        } else {
            format!("{worst:.4}")
        }
    );
    Ok(())
}
