//! Command-line front end: every subcommand is a thin wrapper over the
//! library. See the crate examples for programmatic use.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use bandit_covertree::covertree::{
    build, check_invariants, find_nearest, find_nearest_approx, insert, remove, CoverTree,
    SearchConfig,
};
use bandit_covertree::harness::{
    estimate_expansion_constant, generate_dataset, run_experiment, summary_path, DatasetKind,
    DatasetSpec, ExperimentSpec, GenParams, Operation, OracleSpec,
};
use bandit_covertree::ledger::SampleLedger;
use bandit_covertree::oracle::{OracleKind, StochasticOracle};
use bandit_covertree::points::PointSet;

#[derive(Parser)]
#[command(
    name = "bct",
    about = "Nearest neighbor search from a noisy distance oracle",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct OracleArgs {
    /// Distance oracle kind.
    #[arg(long, default_value = "gaussian")]
    oracle: OracleKind,
    /// Noise scale (gaussian) or effective sub-Gaussian scale (subsample).
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Coordinates per subsample-oracle call.
    #[arg(long, default_value_t = 0)]
    subsample_len: usize,
    /// Root seed for the oracle noise stream.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl OracleArgs {
    fn spec(&self) -> OracleSpec {
        OracleSpec {
            kind: self.oracle,
            sigma: self.sigma,
            subsample_len: self.subsample_len,
        }
    }

    fn instantiate(&self, points: PointSet) -> anyhow::Result<StochasticOracle> {
        Ok(self.spec().instantiate(points, self.seed)?)
    }
}

#[derive(Args, Clone)]
struct SearchArgs {
    /// Failure probability.
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Per-pair pull cap.
    #[arg(long, default_value_t = 1_000_000)]
    t_max: u64,
    /// Tighter lower stopping threshold in cover identification.
    #[arg(long)]
    lt_variant: bool,
    /// Known bound on the expansion constant.
    #[arg(long)]
    expansion_bound: Option<f64>,
}

impl SearchArgs {
    fn config(&self) -> SearchConfig {
        SearchConfig {
            delta: self.delta,
            expansion_bound: self.expansion_bound,
            epsilon_approx: None,
            lt_variant: self.lt_variant,
            t_max: self.t_max,
            level_floor: -52,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    GenData {
        #[arg(long)]
        kind: DatasetKind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file (.csv or .ndjson).
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value_t = 1.0)]
        spacing: f64,
        #[arg(long, default_value_t = 100.0)]
        separation: f64,
        #[arg(long, default_value_t = 0.1)]
        radius: f64,
        #[arg(long, default_value_t = 4)]
        components: usize,
        #[arg(long, default_value_t = 0.5)]
        cluster_sigma: f64,
        #[arg(long, default_value_t = 2)]
        intrinsic_dim: usize,
    },
    /// Build a cover tree from a point file through the oracle.
    Build {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        oracle: OracleArgs,
        #[command(flatten)]
        search: SearchArgs,
        /// Tree output file (NDJSON).
        #[arg(long)]
        out: PathBuf,
    },
    /// Find the nearest neighbor of a query vector.
    Query {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        tree: PathBuf,
        /// Comma-separated query coordinates.
        #[arg(long)]
        vec: String,
        #[command(flatten)]
        oracle: OracleArgs,
        #[command(flatten)]
        search: SearchArgs,
        /// Approximation slack; runs the early-exit search when set.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Write the per-level descent trace as NDJSON.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Insert a new point into an existing tree.
    Insert {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        tree: PathBuf,
        /// Comma-separated coordinates of the point to insert.
        #[arg(long)]
        vec: String,
        #[command(flatten)]
        oracle: OracleArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        out: PathBuf,
        /// Also write the extended point set.
        #[arg(long)]
        points_out: Option<PathBuf>,
    },
    /// Remove a point from an existing tree.
    Remove {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        tree: PathBuf,
        /// Index of the point to remove.
        #[arg(long)]
        index: usize,
        #[command(flatten)]
        oracle: OracleArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the all-nearest-neighbor graph.
    NnGraph {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        oracle: OracleArgs,
        #[command(flatten)]
        search: SearchArgs,
        /// Edge list output (.ndjson or .csv).
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a seeded experiment batch and write reports plus a summary.
    Bench {
        /// Experiment spec as JSON; other flags are ignored when set.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value = "query")]
        op: String,
        #[arg(long, default_value = "uniform-cube")]
        kind: DatasetKind,
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Comma-separated list of n values for a scaling sweep.
        #[arg(long)]
        n_list: Option<String>,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Dataset file overriding the generator.
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        oracle: OracleArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Reports output path (NDJSON); the summary lands next to it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the cover-tree invariants with exact distances.
    Check {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        tree: PathBuf,
        /// Check against squared Euclidean distances (subsample-oracle
        /// trees).
        #[arg(long)]
        squared: bool,
    },
    /// Estimate the expansion constant of a point file.
    Expansion {
        #[arg(long)]
        input: PathBuf,
    },
}

fn parse_vector(text: &str) -> anyhow::Result<Vec<f64>> {
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .with_context(|| format!("bad coordinate {tok:?}"))
        })
        .collect()
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::GenData {
            kind,
            n,
            dim,
            seed,
            out,
            scale,
            spacing,
            separation,
            radius,
            components,
            cluster_sigma,
            intrinsic_dim,
        } => {
            let params = GenParams {
                scale,
                spacing,
                separation,
                radius,
                components,
                cluster_sigma,
                intrinsic_dim,
            };
            let points = generate_dataset(kind, n, dim, &params, seed)?;
            points.save(&out)?;
            println!(
                "{}",
                serde_json::json!({"written": out, "n": points.len(), "dim": points.dim()})
            );
        }
        Command::Build {
            input,
            oracle,
            search,
            out,
        } => {
            let points = PointSet::load(&input)?;
            let n = points.len();
            let mut oracle = oracle.instantiate(points)?;
            let (tree, report) = build(n, &search.config(), &mut oracle)?;
            tree.save(&out)?;
            println!("{}", serde_json::to_string(&report)?);
        }
        Command::Query {
            input,
            tree,
            vec,
            oracle,
            search,
            epsilon,
            trace,
        } => {
            let points = PointSet::load(&input)?;
            let tree = CoverTree::load(&tree)?;
            let q = parse_vector(&vec)?;
            let mut oracle = oracle.instantiate(points)?;
            let item = oracle.register_external(&q)?;
            let mut config = search.config();
            config.epsilon_approx = epsilon;
            let result = if epsilon.is_some() {
                find_nearest_approx(&tree, item, &config, &mut oracle)?
            } else {
                find_nearest(&tree, item, &config, &mut oracle)?
            };
            if let Some(path) = trace {
                let mut file = std::fs::File::create(path)?;
                for row in &result.report.per_level {
                    serde_json::to_writer(&mut file, row)?;
                    use std::io::Write;
                    writeln!(file)?;
                }
            }
            println!(
                "{}",
                serde_json::json!({"nn": result.nn, "report": result.report})
            );
        }
        Command::Insert {
            input,
            tree,
            vec,
            oracle,
            search,
            out,
            points_out,
        } => {
            let mut points = PointSet::load(&input)?;
            let mut tree = CoverTree::load(&tree)?;
            let p = points.push(&parse_vector(&vec)?)?;
            let mut oracle = oracle.instantiate(points.clone())?;
            let mut ledger = SampleLedger::new();
            let report = insert(&mut tree, p, &search.config(), &mut oracle, &mut ledger)?;
            tree.save(&out)?;
            if let Some(path) = points_out {
                points.save(&path)?;
            }
            println!("{}", serde_json::json!({"inserted": p, "report": report}));
        }
        Command::Remove {
            input,
            tree,
            index,
            oracle,
            search,
            out,
        } => {
            let points = PointSet::load(&input)?;
            let mut tree = CoverTree::load(&tree)?;
            let mut oracle = oracle.instantiate(points)?;
            let mut ledger = SampleLedger::new();
            let report = remove(&mut tree, index, &search.config(), &mut oracle, &mut ledger)?;
            tree.save(&out)?;
            println!(
                "{}",
                serde_json::json!({"removed": index, "report": report})
            );
        }
        Command::NnGraph {
            input,
            oracle,
            search,
            out,
        } => {
            let points = PointSet::load(&input)?;
            let n = points.len();
            let oracle = oracle.instantiate(points)?;
            let run = bandit_covertree::nngraph::build_nn_graph(n, &search.config(), &oracle)?;
            let file = std::fs::File::create(&out)?;
            match out.extension().and_then(|e| e.to_str()) {
                Some("csv") => run.graph.write_csv(file)?,
                _ => run.graph.write_ndjson(file)?,
            }
            println!("{}", serde_json::to_string(&run.report)?);
        }
        Command::Bench {
            spec,
            op,
            kind,
            n,
            dim,
            n_list,
            trials,
            epsilon,
            input,
            oracle,
            search,
            scale,
            out,
        } => {
            let spec = match spec {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .with_context(|| format!("reading spec {path:?}"))?;
                    serde_json::from_str::<ExperimentSpec>(&text)?
                }
                None => {
                    let n_sweep = n_list
                        .map(|list| {
                            list.split(',')
                                .map(|tok| tok.trim().parse::<usize>().context("bad n in --n-list"))
                                .collect::<anyhow::Result<Vec<usize>>>()
                        })
                        .transpose()?;
                    ExperimentSpec {
                        operation: op.parse::<Operation>()?,
                        dataset: DatasetSpec {
                            kind,
                            n,
                            dim,
                            params: GenParams {
                                scale,
                                ..GenParams::default()
                            },
                            file: input,
                        },
                        oracle: oracle.spec(),
                        delta: search.delta,
                        epsilon,
                        trials,
                        seed: oracle.seed,
                        t_max: search.t_max,
                        lt_variant: search.lt_variant,
                        expansion_bound: search.expansion_bound,
                        n_sweep,
                        out,
                    }
                }
            };
            let output = run_experiment(&spec)?;
            println!("{}", serde_json::to_string_pretty(&output.summary)?);
            if let Some(path) = &spec.out {
                eprintln!(
                    "reports: {} ({} trials), summary: {}",
                    path.display(),
                    output.reports.len(),
                    summary_path(path).display()
                );
            }
        }
        Command::Check {
            input,
            tree,
            squared,
        } => {
            let points = PointSet::load(&input)?;
            let tree = CoverTree::load(&tree)?;
            let dist = |a: usize, b: usize| {
                if squared {
                    points.squared_distance(a, b)
                } else {
                    points.distance(a, b)
                }
            };
            let report = check_invariants(&tree, &dist);
            println!(
                "{}",
                serde_json::json!({
                    "ok": report.ok,
                    "violations": report.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
                })
            );
            if !report.ok {
                bail!("{} invariant violations", report.violations.len());
            }
        }
        Command::Expansion { input } => {
            let points = PointSet::load(&input)?;
            let c = estimate_expansion_constant(&points);
            println!(
                "{}",
                serde_json::json!({"n": points.len(), "expansion_constant": c})
            );
        }
    }
    Ok(())
}
