//! Indexed point sets and their on-disk formats.
//!
//! A [`PointSet`] is a dense collection of equal-dimension vectors indexed
//! `0..n-1`. Two file formats are supported: CSV with one comma-separated
//! row of floats per point, and NDJSON with one `{"id": k, "vec": [...]}`
//! object per line.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    data: Vec<f64>,
    dim: usize,
    n: usize,
}

impl PointSet {
    /// Builds a point set from row vectors. All rows must share a dimension
    /// and there must be at least one point.
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("point set must contain at least one point"));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::invalid("points must have at least one coordinate"));
        }
        let mut data = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!(
                    "point {i} has a non-finite coordinate"
                )));
            }
            data.extend_from_slice(p);
        }
        let n = points.len();
        Ok(Self { data, dim, n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, i: usize) -> Result<&[f64]> {
        if i >= self.n {
            return Err(Error::IndexOutOfBounds {
                index: i,
                n: self.n,
            });
        }
        Ok(self.point(i))
    }

    /// Appends a point, returning its new index.
    pub fn push(&mut self, p: &[f64]) -> Result<usize> {
        if p.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: p.len(),
            });
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("non-finite coordinate"));
        }
        self.data.extend_from_slice(p);
        self.n += 1;
        Ok(self.n - 1)
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// The first `n` points as their own set.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n {
            return Err(Error::invalid(format!(
                "prefix length must be in 1..={}, got {n}",
                self.n
            )));
        }
        Ok(Self {
            data: self.data[..n * self.dim].to_vec(),
            dim: self.dim,
            n,
        })
    }

    /// Euclidean distance between two stored points.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        euclidean(self.point(i), self.point(j))
    }

    /// Euclidean distance from an arbitrary vector to a stored point.
    pub fn distance_to(&self, q: &[f64], i: usize) -> f64 {
        euclidean(q, self.point(i))
    }

    /// Squared Euclidean distance between two stored points. This is the
    /// surrogate dissimilarity the subsampling oracle estimates.
    pub fn squared_distance(&self, i: usize, j: usize) -> f64 {
        squared_euclidean(self.point(i), self.point(j))
    }

    pub fn squared_distance_to(&self, q: &[f64], i: usize) -> f64 {
        squared_euclidean(q, self.point(i))
    }

    /// Index of an exact (bitwise) duplicate pair, if any.
    pub fn find_duplicate(&self) -> Option<(usize, usize)> {
        use std::collections::HashMap;
        let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
        for i in 0..self.n {
            let key: Vec<u64> = self.point(i).iter().map(|x| x.to_bits()).collect();
            if let Some(&j) = seen.get(&key) {
                return Some((j, i));
            }
            seen.insert(key, i);
        }
        None
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let reader = BufReader::new(reader);
        let mut rows = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let row: Vec<f64> = trimmed
                .split(',')
                .map(|tok| {
                    tok.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
                })
                .collect::<Result<_>>()?;
            rows.push(row);
        }
        Self::new(rows)
    }

    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        for p in self.iter() {
            let row: Vec<String> = p.iter().map(|x| format!("{x}")).collect();
            writeln!(writer, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_ndjson<R: Read>(reader: R) -> Result<Self> {
        let reader = BufReader::new(reader);
        let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: PointRecord = serde_json::from_str(&line)?;
            rows.push((rec.id, rec.vec));
        }
        rows.sort_by_key(|(id, _)| *id);
        for (expected, (id, _)) in rows.iter().enumerate() {
            if *id != expected {
                return Err(Error::Parse(format!(
                    "point ids must be dense 0..n-1, found {id} where {expected} was expected"
                )));
            }
        }
        Self::new(rows.into_iter().map(|(_, v)| v).collect())
    }

    pub fn write_ndjson<W: Write>(&self, mut writer: W) -> Result<()> {
        for (id, p) in self.iter().enumerate() {
            let rec = PointRecord {
                id,
                vec: p.to_vec(),
            };
            serde_json::to_writer(&mut writer, &rec)?;
            writeln!(writer)?;
        }
        Ok(())
    }

    /// Loads a point set, dispatching on the file extension: `.csv` for CSV,
    /// `.ndjson`/`.jsonl`/`.json` for NDJSON.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Self::read_csv(file),
            Some("ndjson") | Some("jsonl") | Some("json") => Self::read_ndjson(file),
            other => Err(Error::invalid(format!(
                "unsupported point file extension {other:?} (expected csv, ndjson, jsonl or json)"
            ))),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => self.write_csv(file),
            Some("ndjson") | Some("jsonl") | Some("json") => self.write_ndjson(file),
            other => Err(Error::invalid(format!(
                "unsupported point file extension {other:?} (expected csv, ndjson, jsonl or json)"
            ))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct PointRecord {
    id: usize,
    vec: Vec<f64>,
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_euclidean(a, b).sqrt()
}

pub(crate) fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}
