//! Seeded experiment runner.
//!
//! An [`ExperimentSpec`] names a dataset (generator or file), an oracle, an
//! operation, and a trial count; [`run_experiment`] executes the trials with
//! seeds derived from the root seed, writes one NDJSON report per trial plus
//! a summary, and stays deterministic: rerunning the same spec produces
//! byte-identical report files. Statistical assertions live in the test
//! suite, not here — the runner exits cleanly whatever the success rate.
//!
//! Trials are embarrassingly parallel in principle (each owns a derived
//! seed); this runner executes them sequentially for simplicity.

use std::io::Write;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::covertree::{
    build, check_invariants, find_nearest, find_nearest_approx, insert, remove, SearchConfig,
};
use crate::error::{Error, Result};
use crate::ledger::SampleLedger;
use crate::nngraph::build_nn_graph;
use crate::oracle::{DistanceOracle, OracleKind, StochasticOracle};
use crate::points::PointSet;
use crate::report::{Outcome, RunReport};

use super::brute::{brute_force_nn, brute_force_nn_graph};
use super::datasets::{generate_dataset, DatasetKind, GenParams};
use super::seeds;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub kind: DatasetKind,
    pub n: usize,
    pub dim: usize,
    #[serde(default)]
    pub params: GenParams,
    /// When set, points are loaded from this file instead of generated.
    #[serde(default)]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSpec {
    pub kind: OracleKind,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub subsample_len: usize,
}

fn default_sigma() -> f64 {
    1.0
}

impl OracleSpec {
    pub fn instantiate(&self, points: PointSet, seed: u64) -> Result<StochasticOracle> {
        match self.kind {
            OracleKind::Exact => Ok(StochasticOracle::exact(points, seed)),
            OracleKind::Gaussian => StochasticOracle::gaussian(points, self.sigma, seed),
            OracleKind::Subsample => {
                StochasticOracle::subsample(points, self.subsample_len, self.sigma, seed)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Operation {
    Build,
    Query,
    Approx,
    Insert,
    Remove,
    Nngraph,
}

impl std::fmt::Display for Operation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Operation::Build => "build",
            Operation::Query => "query",
            Operation::Approx => "approx",
            Operation::Insert => "insert",
            Operation::Remove => "remove",
            Operation::Nngraph => "nngraph",
        };
        write!(f, "{name}")
    }
}

impl std::str::FromStr for Operation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "build" => Ok(Operation::Build),
            "query" => Ok(Operation::Query),
            "approx" => Ok(Operation::Approx),
            "insert" => Ok(Operation::Insert),
            "remove" => Ok(Operation::Remove),
            "nngraph" | "nn-graph" => Ok(Operation::Nngraph),
            other => Err(Error::invalid(format!("unknown operation {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub operation: Operation,
    pub dataset: DatasetSpec,
    pub oracle: OracleSpec,
    pub delta: f64,
    #[serde(default)]
    pub epsilon: Option<f64>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_t_max")]
    pub t_max: u64,
    #[serde(default)]
    pub lt_variant: bool,
    #[serde(default)]
    pub expansion_bound: Option<f64>,
    /// Per-n sweep for query scaling studies; each n takes a prefix of the
    /// generated dataset.
    #[serde(default)]
    pub n_sweep: Option<Vec<usize>>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_t_max() -> u64 {
    1_000_000
}

impl ExperimentSpec {
    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.operation == Operation::Approx && self.epsilon.is_none() {
            return Err(Error::invalid("approx experiments need epsilon"));
        }
        if let Some(sweep) = &self.n_sweep {
            if sweep.is_empty() {
                return Err(Error::invalid("n_sweep must not be empty"));
            }
            if !matches!(self.operation, Operation::Query | Operation::Approx) {
                return Err(Error::invalid(
                    "n_sweep applies to query or approx experiments",
                ));
            }
        }
        Ok(())
    }

    fn search_config(&self) -> SearchConfig {
        SearchConfig {
            delta: self.delta,
            expansion_bound: self.expansion_bound,
            epsilon_approx: self.epsilon,
            lt_variant: self.lt_variant,
            t_max: self.t_max,
            level_floor: -52,
        }
    }

    fn load_points(&self) -> Result<PointSet> {
        match &self.dataset.file {
            Some(path) => PointSet::load(path),
            None => {
                let mut n = self.dataset.n;
                if let Some(sweep) = &self.n_sweep {
                    n = n.max(*sweep.iter().max().expect("nonempty sweep"));
                }
                generate_dataset(
                    self.dataset.kind,
                    n,
                    self.dataset.dim,
                    &self.dataset.params,
                    seeds::dataset_seed(self.seed),
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallStats {
    pub min: u64,
    pub p25: u64,
    pub median: u64,
    pub p75: u64,
    pub p90: u64,
    pub max: u64,
    pub mean: f64,
}

impl CallStats {
    pub fn from_counts(counts: &[u64]) -> Self {
        let mut sorted = counts.to_vec();
        sorted.sort_unstable();
        let rank = |p: f64| -> u64 {
            let idx = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
            sorted[idx - 1]
        };
        Self {
            min: sorted[0],
            p25: rank(0.25),
            median: rank(0.5),
            p75: rank(0.75),
            p90: rank(0.9),
            max: sorted[sorted.len() - 1],
            mean: sorted.iter().sum::<u64>() as f64 / sorted.len() as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub trials: usize,
    pub mean_calls: f64,
    pub median_calls: u64,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema: u32,
    pub operation: String,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub capped_runs: usize,
    pub calls: CallStats,
    #[serde(default)]
    pub sweep: Option<Vec<SweepRow>>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub reports: Vec<RunReport>,
    pub summary: Summary,
}

/// Runs the spec's trials, writes reports and a summary when an output path
/// is set, and returns both. Completion is independent of the statistical
/// outcome.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    let points = spec.load_points()?;
    let config = spec.search_config();

    let mut reports = Vec::new();
    match &spec.n_sweep {
        Some(sweep) => {
            for &n in sweep {
                run_query_batch(spec, &points, n, &config, &mut reports)?;
            }
        }
        None => match spec.operation {
            Operation::Query | Operation::Approx => {
                run_query_batch(spec, &points, spec.dataset.n, &config, &mut reports)?;
            }
            Operation::Build => run_build_trials(spec, &points, &config, &mut reports)?,
            Operation::Insert => run_insert_trials(spec, &points, &config, &mut reports)?,
            Operation::Remove => run_remove_trials(spec, &points, &config, &mut reports)?,
            Operation::Nngraph => run_nngraph_trials(spec, &points, &config, &mut reports)?,
        },
    }

    let summary = summarize(spec, &reports);
    if let Some(out) = &spec.out {
        write_reports(out, &reports)?;
        let summary_path = summary_path(out);
        let mut file = std::fs::File::create(summary_path)?;
        serde_json::to_writer_pretty(&mut file, &summary)?;
        writeln!(file)?;
    }
    Ok(ExperimentOutput { reports, summary })
}

/// `reports.ndjson` gets `reports.ndjson.summary.json` next to it.
pub fn summary_path(out: &std::path::Path) -> PathBuf {
    let mut name = out.as_os_str().to_os_string();
    name.push(".summary.json");
    PathBuf::from(name)
}

pub fn write_reports(path: &std::path::Path, reports: &[RunReport]) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    for report in reports {
        serde_json::to_writer(&mut file, report)?;
        writeln!(file)?;
    }
    Ok(())
}

/// Recomputes the summary from reports alone, so written summaries can be
/// audited against the report stream.
pub fn summarize(spec: &ExperimentSpec, reports: &[RunReport]) -> Summary {
    let successes = reports.iter().filter(|r| r.success == Some(true)).count();
    let capped = reports
        .iter()
        .filter(|r| r.outcome == Outcome::Capped)
        .count();
    let counts: Vec<u64> = reports.iter().map(|r| r.total_oracle_calls).collect();
    let sweep = spec.n_sweep.as_ref().map(|ns| {
        ns.iter()
            .map(|&n| {
                let rows: Vec<&RunReport> = reports
                    .iter()
                    .filter(|r| r.config.get("n").and_then(|v| v.as_u64()) == Some(n as u64))
                    .collect();
                let counts: Vec<u64> = rows.iter().map(|r| r.total_oracle_calls).collect();
                let stats = CallStats::from_counts(&counts);
                SweepRow {
                    n,
                    trials: rows.len(),
                    mean_calls: stats.mean,
                    median_calls: stats.median,
                    success_rate: rows.iter().filter(|r| r.success == Some(true)).count() as f64
                        / rows.len().max(1) as f64,
                }
            })
            .collect()
    });
    Summary {
        schema: 1,
        operation: spec.operation.to_string(),
        trials: reports.len(),
        successes,
        success_rate: successes as f64 / reports.len().max(1) as f64,
        capped_runs: capped,
        calls: CallStats::from_counts(&counts),
        sweep,
    }
}

fn trial_config(spec: &ExperimentSpec, n: usize, trial: usize) -> serde_json::Value {
    // The output path has no bearing on what the trial computes; keeping it
    // out of the snapshot lets identical runs written to different places
    // produce identical bytes.
    let spec = ExperimentSpec {
        out: None,
        ..spec.clone()
    };
    serde_json::json!({
        "spec": spec,
        "n": n,
        "trial": trial,
    })
}

/// Query point near the data: a seeded dataset point plus Gaussian jitter at
/// a kind-appropriate scale.
fn sample_query(points: &PointSet, spec: &DatasetSpec, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.gen_range(0..points.len());
    let jitter = match spec.kind {
        DatasetKind::Line => spec.params.spacing * 0.4,
        DatasetKind::UniformCube => spec.params.scale * 0.1,
        DatasetKind::GaussianMixture => spec.params.cluster_sigma,
        DatasetKind::TwoClusters => spec.params.radius,
        DatasetKind::LowDimSubspace => spec.params.scale * 0.1,
    };
    let normal = Normal::new(0.0, jitter.max(1e-9)).expect("positive jitter");
    points
        .point(k)
        .iter()
        .map(|&x| x + normal.sample(&mut rng))
        .collect()
}

fn run_query_batch(
    spec: &ExperimentSpec,
    points: &PointSet,
    n: usize,
    config: &SearchConfig,
    reports: &mut Vec<RunReport>,
) -> Result<()> {
    if n == 0 || n > points.len() {
        return Err(Error::invalid(format!(
            "query batch needs 1..={} points, asked for {n}",
            points.len()
        )));
    }
    let prefix = points.prefix(n)?;
    // The reference tree is built once on exact distances; trials measure
    // search accuracy on it under noise.
    let mut exact = StochasticOracle::exact(prefix.clone(), seeds::dataset_seed(spec.seed));
    let (tree, _) = build(n, config, &mut exact)?;
    let per_n_root = seeds::mix(spec.seed, n as u64);

    for trial in 0..spec.trials {
        let seed = seeds::trial_seed(per_n_root, trial as u64);
        let q = sample_query(&prefix, &spec.dataset, seeds::mix(seed, 0x71));
        let mut oracle = spec.oracle.instantiate(prefix.clone(), seed)?;
        let item = oracle.register_external(&q)?;
        let result = match spec.operation {
            Operation::Approx => find_nearest_approx(&tree, item, config, &mut oracle)?,
            _ => find_nearest(&tree, item, config, &mut oracle)?,
        };
        debug_assert_eq!(result.report.total_oracle_calls, oracle.calls());
        let truth = brute_force_nn(&prefix, &q)?;
        let success = match spec.operation {
            Operation::Approx => {
                let eps = spec.epsilon.expect("validated");
                prefix.distance_to(&q, result.nn) <= (1.0 + eps) * prefix.distance_to(&q, truth)
            }
            _ => result.nn == truth,
        };
        let mut report = result.report;
        report.operation = spec.operation.to_string();
        report.seed = seed;
        report.success = Some(success);
        report.config = trial_config(spec, n, trial);
        reports.push(report);
    }
    Ok(())
}

fn run_build_trials(
    spec: &ExperimentSpec,
    points: &PointSet,
    config: &SearchConfig,
    reports: &mut Vec<RunReport>,
) -> Result<()> {
    let n = points.len();
    for trial in 0..spec.trials {
        let seed = seeds::trial_seed(spec.seed, trial as u64);
        // Generated datasets are redrawn per trial: a build trial is a
        // (geometry, noise) sample. A fixed pair sitting exactly on a 2^i
        // threshold is unresolvable by any bounded sampler and would decide
        // every trial at once. File-backed data stays fixed.
        let trial_points = match &spec.dataset.file {
            Some(_) => points.clone(),
            None => generate_dataset(
                spec.dataset.kind,
                n,
                spec.dataset.dim,
                &spec.dataset.params,
                seeds::mix(seed, 0x6474),
            )?,
        };
        let mut oracle = spec.oracle.instantiate(trial_points.clone(), seed)?;
        let (tree, run) = build(n, config, &mut oracle)?;
        debug_assert_eq!(run.total_oracle_calls, oracle.calls());
        let check = check_invariants(&tree, &|a, b| trial_points.distance(a, b));
        let mut report = run;
        report.seed = seed;
        report.success = Some(check.ok && tree.len() == n);
        report.config = trial_config(spec, n, trial);
        reports.push(report);
    }
    Ok(())
}

fn run_insert_trials(
    spec: &ExperimentSpec,
    points: &PointSet,
    config: &SearchConfig,
    reports: &mut Vec<RunReport>,
) -> Result<()> {
    let n = points.len();
    if n < 2 {
        return Err(Error::invalid(
            "insert experiments need at least two points",
        ));
    }
    let base_points = points.prefix(n - 1)?;
    let mut exact = StochasticOracle::exact(base_points, seeds::dataset_seed(spec.seed));
    let (base_tree, _) = build(n - 1, config, &mut exact)?;

    for trial in 0..spec.trials {
        let seed = seeds::trial_seed(spec.seed, trial as u64);
        let mut oracle = spec.oracle.instantiate(points.clone(), seed)?;
        let mut tree = base_tree.clone();
        let mut ledger = SampleLedger::new();
        let run = insert(&mut tree, n - 1, config, &mut oracle, &mut ledger)?;
        let check = check_invariants(&tree, &|a, b| points.distance(a, b));
        let mut report = run;
        report.seed = seed;
        report.success = Some(check.ok && tree.len() == n);
        report.config = trial_config(spec, n, trial);
        reports.push(report);
    }
    Ok(())
}

fn run_remove_trials(
    spec: &ExperimentSpec,
    points: &PointSet,
    config: &SearchConfig,
    reports: &mut Vec<RunReport>,
) -> Result<()> {
    let n = points.len();
    if n < 2 {
        return Err(Error::invalid(
            "remove experiments need at least two points",
        ));
    }
    let mut exact = StochasticOracle::exact(points.clone(), seeds::dataset_seed(spec.seed));
    let (base_tree, _) = build(n, config, &mut exact)?;

    for trial in 0..spec.trials {
        let seed = seeds::trial_seed(spec.seed, trial as u64);
        let victim = ChaCha8Rng::seed_from_u64(seeds::mix(seed, 0x76)).gen_range(0..n);
        let mut oracle = spec.oracle.instantiate(points.clone(), seed)?;
        let mut tree = base_tree.clone();
        let mut ledger = SampleLedger::new();
        let run = remove(&mut tree, victim, config, &mut oracle, &mut ledger)?;
        let check = check_invariants(&tree, &|a, b| points.distance(a, b));
        let mut report = run;
        report.seed = seed;
        report.success = Some(check.ok && tree.len() == n - 1);
        report.config = trial_config(spec, n, trial);
        reports.push(report);
    }
    Ok(())
}

fn run_nngraph_trials(
    spec: &ExperimentSpec,
    points: &PointSet,
    config: &SearchConfig,
    reports: &mut Vec<RunReport>,
) -> Result<()> {
    let n = points.len();
    let truth = brute_force_nn_graph(points)?;
    for trial in 0..spec.trials {
        let seed = seeds::trial_seed(spec.seed, trial as u64);
        let oracle = spec.oracle.instantiate(points.clone(), seed)?;
        let run = build_nn_graph(n, config, &oracle)?;
        let mut report = run.report;
        report.seed = seed;
        report.success = Some(run.graph == truth);
        report.config = trial_config(spec, n, trial);
        reports.push(report);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_spec(operation: Operation) -> ExperimentSpec {
        ExperimentSpec {
            operation,
            dataset: DatasetSpec {
                kind: DatasetKind::UniformCube,
                n: 12,
                dim: 2,
                params: GenParams {
                    scale: 10.0,
                    ..GenParams::default()
                },
                file: None,
            },
            oracle: OracleSpec {
                kind: OracleKind::Gaussian,
                sigma: 1.0,
                subsample_len: 0,
            },
            delta: 0.2,
            epsilon: None,
            trials: 3,
            seed: 99,
            t_max: 1_000_000,
            lt_variant: false,
            expansion_bound: None,
            n_sweep: None,
            out: None,
        }
    }

    #[test]
    fn query_experiment_runs_and_reconciles() {
        let output = run_experiment(&tiny_spec(Operation::Query)).unwrap();
        assert_eq!(output.reports.len(), 3);
        for report in &output.reports {
            assert!(report.total_oracle_calls > 0);
            assert!(report.success.is_some());
        }
        assert_eq!(output.summary.trials, 3);
    }

    #[test]
    fn rerun_is_identical() {
        let spec = tiny_spec(Operation::Query);
        let a = run_experiment(&spec).unwrap();
        let b = run_experiment(&spec).unwrap();
        let lines_a: Vec<String> = a
            .reports
            .iter()
            .map(|r| serde_json::to_string(r).unwrap())
            .collect();
        let lines_b: Vec<String> = b
            .reports
            .iter()
            .map(|r| serde_json::to_string(r).unwrap())
            .collect();
        assert_eq!(lines_a, lines_b);
        assert_eq!(a.summary, b.summary);
    }

    #[test]
    fn build_and_maintenance_ops_run() {
        for op in [Operation::Build, Operation::Insert, Operation::Remove] {
            let output = run_experiment(&tiny_spec(op)).unwrap();
            assert_eq!(output.reports.len(), 3, "{op}");
        }
    }

    #[test]
    fn summary_recomputes_from_reports() {
        let spec = tiny_spec(Operation::Query);
        let output = run_experiment(&spec).unwrap();
        let again = summarize(&spec, &output.reports);
        assert_eq!(output.summary, again);
    }

    #[test]
    fn exact_queries_always_succeed() {
        let mut spec = tiny_spec(Operation::Query);
        spec.oracle.kind = OracleKind::Exact;
        let output = run_experiment(&spec).unwrap();
        assert_eq!(output.summary.successes, 3);
    }

    #[test]
    fn approx_requires_epsilon() {
        let spec = tiny_spec(Operation::Approx);
        assert!(run_experiment(&spec).is_err());
    }

    #[test]
    fn sweep_produces_rows() {
        let mut spec = tiny_spec(Operation::Query);
        spec.oracle.kind = OracleKind::Exact;
        spec.n_sweep = Some(vec![4, 8, 12]);
        spec.trials = 2;
        let output = run_experiment(&spec).unwrap();
        assert_eq!(output.reports.len(), 6);
        let sweep = output.summary.sweep.unwrap();
        assert_eq!(sweep.len(), 3);
        assert!(sweep.iter().all(|row| row.trials == 2));
    }

    #[test]
    fn call_stats_quantiles() {
        let stats = CallStats::from_counts(&[5, 1, 9, 3, 7]);
        assert_eq!(stats.min, 1);
        assert_eq!(stats.median, 5);
        assert_eq!(stats.max, 9);
        assert_eq!(stats.mean, 5.0);
    }
}
