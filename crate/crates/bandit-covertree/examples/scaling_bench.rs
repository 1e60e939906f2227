//! Mini scaling study: mean query cost over a nested n-sweep, via the same
//! experiment runner the `bct bench` subcommand uses.
//!
//! ```bash
//! cargo run --release --example scaling_bench
//! ```

use bandit_covertree::harness::{
    run_experiment, DatasetKind, DatasetSpec, ExperimentSpec, GenParams, Operation, OracleSpec,
};
use bandit_covertree::oracle::OracleKind;

fn main() -> bandit_covertree::Result<()> {
    let spec = ExperimentSpec {
        operation: Operation::Query,
        dataset: DatasetSpec {
            kind: DatasetKind::UniformCube,
            n: 512,
            dim: 4,
            params: GenParams {
                scale: 1.0,
                ..GenParams::default()
            },
            file: None,
        },
        oracle: OracleSpec {
            kind: OracleKind::Exact,
            sigma: 1.0,
            subsample_len: 0,
        },
        delta: 0.1,
        epsilon: None,
        trials: 30,
        seed: 2024,
        t_max: 1_000_000,
        lt_variant: false,
        expansion_bound: None,
        n_sweep: Some(vec![64, 128, 256, 512]),
        out: None,
    };
    let output = run_experiment(&spec)?;

    println!("exact-oracle query cost on nested uniform-cube prefixes:");
    println!(
        "{:>6}  {:>12}  {:>12}  {:>8}",
        "n", "mean calls", "median", "success"
    );
    for row in output.summary.sweep.as_ref().expect("sweep requested") {
        println!(
            "{:>6}  {:>12.1}  {:>12}  {:>8.2}",
            row.n, row.mean_calls, row.median_calls, row.success_rate
        );
    }
    let sweep = output.summary.sweep.as_ref().unwrap();
    let ratio = sweep.last().unwrap().mean_calls / sweep[0].mean_calls;
    println!();
    println!(
        "cost ratio n=512 vs n=64: {ratio:.2} (an 8x data growth; \
         logarithmic scaling keeps this far below 8)"
    );
    Ok(())
}
