//! Incremental maintenance: insert and remove points through the oracle,
//! validating the three cover-tree invariants after every step.
//!
//! ```bash
//! cargo run --release --example insert_and_remove
//! ```

use bandit_covertree::covertree::{check_invariants, insert, remove};
use bandit_covertree::prelude::*;

fn main() -> Result<()> {
    let params = GenParams {
        scale: 20.0,
        ..GenParams::default()
    };
    let points = generate_dataset(DatasetKind::UniformCube, 40, 2, &params, 11)?;
    let truth = points.clone();
    let mut oracle = StochasticOracle::gaussian(points, 1.0, 99)?;
    let config = SearchConfig::new(0.05);

    // Start from the first 30 points, then grow and shrink.
    let (mut tree, _) = build(30, &config, &mut oracle)?;
    println!("initial tree: {} points", tree.len());

    for p in 30..40 {
        let mut ledger = SampleLedger::new();
        let report = insert(&mut tree, p, &config, &mut oracle, &mut ledger)?;
        let check = check_invariants(&tree, &|a, b| truth.distance(a, b));
        println!(
            "insert {p}: {} calls, invariants {}",
            report.total_oracle_calls,
            if check.ok { "ok" } else { "VIOLATED" }
        );
    }

    for victim in [3, 17, 30, 8] {
        let mut ledger = SampleLedger::new();
        let report = remove(&mut tree, victim, &config, &mut oracle, &mut ledger)?;
        let check = check_invariants(&tree, &|a, b| truth.distance(a, b));
        println!(
            "remove {victim}: {} calls, {} points left, invariants {}",
            report.total_oracle_calls,
            tree.len(),
            if check.ok { "ok" } else { "VIOLATED" }
        );
    }

    // Storage stays one record per point throughout.
    println!(
        "final: {} points, levels {}..{}",
        tree.len(),
        tree.i_bottom(),
        tree.i_top()
    );
    Ok(())
}
