//! Build the all-nearest-neighbor graph from noisy distance samples and
//! compare it against exact brute force.
//!
//! ```bash
//! cargo run --release --example nn_graph
//! ```

use bandit_covertree::prelude::*;

fn main() -> Result<()> {
    let params = GenParams {
        scale: 30.0,
        ..GenParams::default()
    };
    let n = 64;
    let points = generate_dataset(DatasetKind::UniformCube, n, 2, &params, 21)?;
    let truth_graph = brute_force_nn_graph(&points)?;

    let oracle = StochasticOracle::gaussian(points, 1.0, 5)?;
    let run = build_nn_graph(n, &SearchConfig::new(0.1), &oracle)?;

    let phases = run.report.phase_calls.expect("graph reports phases");
    println!(
        "graph over {n} points: {} oracle calls (build {}, queries {}), outcome {:?}",
        run.report.total_oracle_calls, phases.build, phases.query, run.report.outcome
    );

    let mut agree = 0;
    for (src, dst) in run.graph.edges() {
        if truth_graph.neighbor(src) == dst {
            agree += 1;
        }
    }
    println!("edges matching exact brute force: {agree}/{n}");

    let mut calls = run.per_point_calls.clone();
    calls.sort_unstable();
    println!(
        "per-point query calls: min {}, median {}, max {}",
        calls[0],
        calls[n / 2],
        calls[n - 1]
    );

    // Edge lists serialize as NDJSON or CSV.
    let mut buf = Vec::new();
    run.graph.write_ndjson(&mut buf)?;
    println!(
        "first edge record: {}",
        String::from_utf8_lossy(buf.split(|&b| b == b'\n').next().unwrap())
    );
    Ok(())
}
