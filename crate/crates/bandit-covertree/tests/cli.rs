//! End-to-end runs of the `bct` binary: every subcommand, both point file
//! formats, and replay determinism of report files.

use std::path::Path;
use std::process::{Command, Output};

fn bct(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bct"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn bct_ok(args: &[&str], dir: &Path) -> String {
    let out = bct(args, dir);
    assert!(
        out.status.success(),
        "bct {args:?} failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf8 stdout")
}

#[test]
fn full_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();

    // Generate, build (exact), check, query, insert, remove, graph,
    // expansion.
    bct_ok(
        &[
            "gen-data",
            "--kind",
            "uniform-cube",
            "--n",
            "40",
            "--dim",
            "2",
            "--seed",
            "5",
            "--scale",
            "10",
            "--out",
            "pts.csv",
        ],
        dir,
    );
    assert!(dir.join("pts.csv").exists());

    bct_ok(
        &[
            "build",
            "--input",
            "pts.csv",
            "--oracle",
            "exact",
            "--delta",
            "0.1",
            "--seed",
            "1",
            "--out",
            "tree.ndjson",
        ],
        dir,
    );

    let check = bct_ok(
        &["check", "--input", "pts.csv", "--tree", "tree.ndjson"],
        dir,
    );
    assert!(check.contains("\"ok\":true"));

    let query = bct_ok(
        &[
            "query",
            "--input",
            "pts.csv",
            "--tree",
            "tree.ndjson",
            "--vec",
            "5.0,5.0",
            "--oracle",
            "gaussian",
            "--sigma",
            "1.0",
            "--seed",
            "3",
            "--delta",
            "0.1",
            "--trace",
            "trace.ndjson",
        ],
        dir,
    );
    let parsed: serde_json::Value = serde_json::from_str(query.trim()).unwrap();
    assert!(parsed["nn"].as_u64().unwrap() < 40);
    let trace = std::fs::read_to_string(dir.join("trace.ndjson")).unwrap();
    assert!(trace.lines().count() > 0);
    for line in trace.lines() {
        let row: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(row["level"].is_i64() && row["calls"].is_u64());
    }

    bct_ok(
        &[
            "insert",
            "--input",
            "pts.csv",
            "--tree",
            "tree.ndjson",
            "--vec",
            "4.5,4.5",
            "--oracle",
            "exact",
            "--seed",
            "9",
            "--delta",
            "0.1",
            "--out",
            "tree2.ndjson",
            "--points-out",
            "pts2.csv",
        ],
        dir,
    );
    let check2 = bct_ok(
        &["check", "--input", "pts2.csv", "--tree", "tree2.ndjson"],
        dir,
    );
    assert!(check2.contains("\"ok\":true"));

    bct_ok(
        &[
            "remove",
            "--input",
            "pts2.csv",
            "--tree",
            "tree2.ndjson",
            "--index",
            "40",
            "--oracle",
            "exact",
            "--seed",
            "11",
            "--delta",
            "0.1",
            "--out",
            "tree3.ndjson",
        ],
        dir,
    );
    let check3 = bct_ok(
        &["check", "--input", "pts2.csv", "--tree", "tree3.ndjson"],
        dir,
    );
    assert!(check3.contains("\"ok\":true"));

    bct_ok(
        &[
            "nn-graph",
            "--input",
            "pts.csv",
            "--oracle",
            "exact",
            "--seed",
            "2",
            "--delta",
            "0.1",
            "--out",
            "graph.ndjson",
        ],
        dir,
    );
    let graph = std::fs::read_to_string(dir.join("graph.ndjson")).unwrap();
    assert_eq!(graph.lines().count(), 40);

    let expansion = bct_ok(&["expansion", "--input", "pts.csv"], dir);
    let parsed: serde_json::Value = serde_json::from_str(expansion.trim()).unwrap();
    assert!(parsed["expansion_constant"].as_f64().unwrap() >= 2.0);
}

#[test]
fn check_flags_corrupted_tree() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    bct_ok(
        &[
            "gen-data", "--kind", "line", "--n", "8", "--dim", "1", "--seed", "0", "--out",
            "pts.csv",
        ],
        dir,
    );
    bct_ok(
        &[
            "build",
            "--input",
            "pts.csv",
            "--oracle",
            "exact",
            "--delta",
            "0.1",
            "--seed",
            "1",
            "--out",
            "tree.ndjson",
        ],
        dir,
    );
    // Rescale the points: the stored tree no longer covers them.
    bct_ok(
        &[
            "gen-data",
            "--kind",
            "line",
            "--n",
            "8",
            "--dim",
            "1",
            "--seed",
            "0",
            "--spacing",
            "9.0",
            "--out",
            "pts.csv",
        ],
        dir,
    );
    let out = bct(
        &["check", "--input", "pts.csv", "--tree", "tree.ndjson"],
        dir,
    );
    assert!(!out.status.success(), "corrupted tree must fail the check");
}

#[test]
fn bench_reports_replay_identically() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    let args = |out: &'static str| {
        vec![
            "bench",
            "--op",
            "query",
            "--kind",
            "gaussian-mixture",
            "--n",
            "16",
            "--dim",
            "2",
            "--scale",
            "8",
            "--trials",
            "3",
            "--oracle",
            "gaussian",
            "--sigma",
            "1.0",
            "--seed",
            "77",
            "--delta",
            "0.2",
            "--out",
            out,
        ]
    };
    let summary_a = bct_ok(&args("a.ndjson"), dir);
    let summary_b = bct_ok(&args("b.ndjson"), dir);
    assert_eq!(summary_a, summary_b);
    let a = std::fs::read(dir.join("a.ndjson")).unwrap();
    let b = std::fs::read(dir.join("b.ndjson")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
    assert!(dir.join("a.ndjson.summary.json").exists());

    // The summary parses and reconciles with the report lines.
    let summary: serde_json::Value = serde_json::from_str(summary_a.trim()).unwrap();
    assert_eq!(summary["trials"].as_u64(), Some(3));
    let reports = String::from_utf8(a).unwrap();
    assert_eq!(reports.lines().count(), 3);
}

#[test]
fn bench_sweeps_over_n_list() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    let out = bct_ok(
        &[
            "bench",
            "--op",
            "query",
            "--kind",
            "uniform-cube",
            "--n-list",
            "8,16,32",
            "--dim",
            "2",
            "--scale",
            "10",
            "--trials",
            "2",
            "--oracle",
            "exact",
            "--seed",
            "1",
            "--delta",
            "0.1",
        ],
        dir,
    );
    let summary: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    let sweep = summary["sweep"].as_array().unwrap();
    assert_eq!(sweep.len(), 3);
    assert_eq!(sweep[0]["n"].as_u64(), Some(8));
    assert_eq!(summary["trials"].as_u64(), Some(6));
}

#[test]
fn bench_accepts_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    let spec = serde_json::json!({
        "operation": "build",
        "dataset": {"kind": "uniform-cube", "n": 10, "dim": 2, "params": {"scale": 10.0}},
        "oracle": {"kind": "exact"},
        "delta": 0.1,
        "trials": 2,
        "seed": 5,
    });
    std::fs::write(dir.join("spec.json"), serde_json::to_vec(&spec).unwrap()).unwrap();
    let out = bct_ok(&["bench", "--spec", "spec.json"], dir);
    let summary: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(summary["successes"].as_u64(), Some(2));
}

#[test]
fn ndjson_points_roundtrip_through_cli() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    bct_ok(
        &[
            "gen-data",
            "--kind",
            "two-clusters",
            "--n",
            "12",
            "--dim",
            "3",
            "--seed",
            "4",
            "--radius",
            "0.5",
            "--out",
            "pts.ndjson",
        ],
        dir,
    );
    let text = std::fs::read_to_string(dir.join("pts.ndjson")).unwrap();
    assert_eq!(text.lines().count(), 12);
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["id"].as_u64(), Some(0));
    assert_eq!(first["vec"].as_array().unwrap().len(), 3);

    bct_ok(
        &[
            "build",
            "--input",
            "pts.ndjson",
            "--oracle",
            "exact",
            "--delta",
            "0.1",
            "--seed",
            "1",
            "--out",
            "tree.ndjson",
        ],
        dir,
    );
    let check = bct_ok(
        &["check", "--input", "pts.ndjson", "--tree", "tree.ndjson"],
        dir,
    );
    assert!(check.contains("\"ok\":true"));
}
