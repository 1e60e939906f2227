//! All-nearest-neighbor graph from the stochastic oracle.
//!
//! Two phases: build a cover tree at failure probability `delta / 2`, then
//! for every point run the exclusion search at `delta / (2n)` — the point
//! itself is filtered out of every bandit candidate set so the search lands
//! on its nearest neighbor among the others. A union bound gives the whole
//! graph probability `1 - delta`.
//!
//! Phase-two searches are independent per point: each runs on an oracle
//! stream forked from the root seed by the point index, so the graph is
//! reproducible regardless of execution order.

use std::io::{BufRead, BufReader, Read, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::covertree::{build, find_nearest_excluding, SearchConfig};
use crate::error::{Error, Result};
use crate::oracle::{DistanceOracle, StochasticOracle};
use crate::report::{PhaseCalls, RunReport};

/// Directed nearest-neighbor graph: one outgoing edge per point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NnGraph {
    edges: Vec<usize>,
}

impl NnGraph {
    pub fn from_edges(edges: Vec<usize>) -> Result<Self> {
        for (src, &dst) in edges.iter().enumerate() {
            if dst == src {
                return Err(Error::invalid(format!("self-loop at point {src}")));
            }
            if dst >= edges.len() {
                return Err(Error::IndexOutOfBounds {
                    index: dst,
                    n: edges.len(),
                });
            }
        }
        Ok(Self { edges })
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Nearest neighbor of `src`.
    pub fn neighbor(&self, src: usize) -> usize {
        self.edges[src]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied().enumerate()
    }

    pub fn write_ndjson<W: Write>(&self, mut writer: W) -> Result<()> {
        for (src, dst) in self.edges() {
            let rec = EdgeRecord { src, dst };
            serde_json::to_writer(&mut writer, &rec)?;
            writeln!(writer)?;
        }
        Ok(())
    }

    pub fn read_ndjson<R: Read>(reader: R) -> Result<Self> {
        let mut pairs = Vec::new();
        for line in BufReader::new(reader).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: EdgeRecord = serde_json::from_str(&line)?;
            pairs.push((rec.src, rec.dst));
        }
        Self::from_pairs(pairs)
    }

    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "src,dst")?;
        for (src, dst) in self.edges() {
            writeln!(writer, "{src},{dst}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || (lineno == 0 && trimmed == "src,dst") {
                continue;
            }
            let mut cols = trimmed.split(',');
            let src = cols
                .next()
                .and_then(|t| t.trim().parse().ok())
                .ok_or_else(|| Error::Parse(format!("line {}: bad src", lineno + 1)))?;
            let dst = cols
                .next()
                .and_then(|t| t.trim().parse().ok())
                .ok_or_else(|| Error::Parse(format!("line {}: bad dst", lineno + 1)))?;
            pairs.push((src, dst));
        }
        Self::from_pairs(pairs)
    }

    fn from_pairs(mut pairs: Vec<(usize, usize)>) -> Result<Self> {
        pairs.sort_unstable();
        for (expected, &(src, _)) in pairs.iter().enumerate() {
            if src != expected {
                return Err(Error::Parse(format!(
                    "edge sources must be dense 0..n-1, found {src} where {expected} was expected"
                )));
            }
        }
        Self::from_edges(pairs.into_iter().map(|(_, dst)| dst).collect())
    }
}

#[derive(Serialize, Deserialize)]
struct EdgeRecord {
    src: usize,
    dst: usize,
}

/// Result of graph construction with per-point call accounting.
#[derive(Debug, Clone)]
pub struct NnGraphRun {
    pub graph: NnGraph,
    pub report: RunReport,
    pub per_point_calls: Vec<u64>,
}

/// Builds the nearest-neighbor graph of points `0..n` with probability at
/// least `1 - config.delta`.
pub fn build_nn_graph(
    n: usize,
    config: &SearchConfig,
    oracle: &StochasticOracle,
) -> Result<NnGraphRun> {
    if n < 2 {
        return Err(Error::invalid(
            "a nearest-neighbor graph needs at least two points",
        ));
    }
    config.validate_common()?;
    let started = Instant::now();

    let build_config = SearchConfig {
        delta: config.delta / 2.0,
        ..config.clone()
    };
    let mut build_oracle = oracle.fork(u64::MAX);
    let (tree, build_report) = build(n, &build_config, &mut build_oracle)?;
    let build_calls = build_oracle.calls();
    let mut outcome = build_report.outcome;

    let query_config = SearchConfig {
        delta: config.delta / (2.0 * n as f64),
        ..config.clone()
    };
    let mut edges = Vec::with_capacity(n);
    let mut per_point_calls = Vec::with_capacity(n);
    let mut query_calls = 0u64;
    for x in 0..n {
        let mut point_oracle = oracle.fork(x as u64);
        let result = find_nearest_excluding(&tree, x, &query_config, &mut point_oracle)?;
        outcome = outcome.merge(result.report.outcome);
        edges.push(result.nn);
        per_point_calls.push(result.report.total_oracle_calls);
        query_calls += result.report.total_oracle_calls;
    }

    let mut report = RunReport::new("nngraph");
    report.outcome = outcome;
    report.total_oracle_calls = build_calls + query_calls;
    report.phase_calls = Some(PhaseCalls {
        build: build_calls,
        query: query_calls,
    });
    report.config = serde_json::to_value(config)?;
    report.wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(NnGraphRun {
        graph: NnGraph::from_edges(edges)?,
        report,
        per_point_calls,
    })
}
