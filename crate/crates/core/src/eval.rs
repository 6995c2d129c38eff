//! Correspondence error curves and chromosome distances.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fmap::VertexMap;
use crate::genetic::Chromosome;
use crate::mesh::{GeodesicGraph, TriMesh};

pub const CURVE_SAMPLES: usize = 100;
pub const CURVE_MAX_THRESHOLD: f64 = 0.5;

/// Ground-truth pairs `(source vertex, target vertex)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    pub pairs: Vec<(usize, usize)>,
}

impl GroundTruth {
    /// One `source target` pair per line; blank lines and `#` comments skipped.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse = |s: Option<&str>| -> Result<usize> {
                s.and_then(|s| s.parse().ok()).ok_or_else(|| Error::Parse {
                    line: i + 1,
                    message: format!("expected `source target`, got `{line}`"),
                })
            };
            let mut it = line.split_whitespace();
            let pair = (parse(it.next())?, parse(it.next())?);
            if it.next().is_some() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected two indices, got `{line}`"),
                });
            }
            pairs.push(pair);
        }
        Ok(Self { pairs })
    }

    pub fn to_text(&self) -> String {
        self.pairs.iter().map(|(a, b)| format!("{a} {b}\n")).collect()
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_text(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

/// Cumulative fraction of correspondences whose error is at most each threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCurve {
    pub thresholds: Vec<f64>,
    pub fractions: Vec<f64>,
}

impl ErrorCurve {
    /// `samples` evenly spaced thresholds from 0 to `max_threshold`.
    pub fn from_errors(errors: &[f64], max_threshold: f64, samples: usize) -> Self {
        let mut sorted = errors.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len().max(1) as f64;
        let thresholds: Vec<f64> = (0..samples)
            .map(|i| max_threshold * i as f64 / (samples.max(2) - 1) as f64)
            .collect();
        let fractions = thresholds
            .iter()
            .map(|&t| sorted.partition_point(|&e| e <= t) as f64 / n)
            .collect();
        Self {
            thresholds,
            fractions,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,fraction\n");
        for (t, f) in self.thresholds.iter().zip(&self.fractions) {
            writeln!(out, "{t},{f}").expect("write to string");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut thresholds = Vec::new();
        let mut fractions = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            let bad = || Error::Parse {
                line: i + 1,
                message: format!("expected `threshold,fraction`, got `{line}`"),
            };
            let (t, f) = line.split_once(',').ok_or_else(bad)?;
            thresholds.push(t.trim().parse().map_err(|_| bad())?);
            fractions.push(f.trim().parse().map_err(|_| bad())?);
        }
        Ok(Self {
            thresholds,
            fractions,
        })
    }

    /// Area under the curve divided by the threshold range.
    pub fn mean_fraction(&self) -> f64 {
        self.fractions.iter().sum::<f64>() / self.fractions.len().max(1) as f64
    }
}

/// Geodesic error on `mesh_b` of each ground-truth pair, divided by
/// `√area(mesh_b)`. With a symmetric ground truth (same sources in the same
/// order) each error is the smaller of the two.
pub fn correspondence_errors(
    map: &VertexMap,
    truth: &GroundTruth,
    symmetric: Option<&GroundTruth>,
    mesh_b: &TriMesh,
) -> Result<Vec<f64>> {
    let n_b = mesh_b.num_vertices();
    let check = |v: usize, count: usize| {
        if v >= count {
            Err(Error::InvalidVertex { index: v, count })
        } else {
            Ok(())
        }
    };
    if let Some(sym) = symmetric {
        if sym.pairs.len() != truth.pairs.len() {
            return Err(Error::DimensionMismatch {
                expected: truth.pairs.len(),
                actual: sym.pairs.len(),
            });
        }
    }
    let mut needed = BTreeMap::new();
    for (k, &(s, t)) in truth.pairs.iter().enumerate() {
        check(s, map.len())?;
        check(t, n_b)?;
        check(map.assignment[s], n_b)?;
        needed.insert(t, ());
        if let Some(sym) = symmetric {
            let (s2, t2) = sym.pairs[k];
            if s2 != s {
                return Err(Error::Malformed {
                    what: "symmetric ground truth",
                    message: format!("line {} has source {s2}, expected {s}", k + 1),
                });
            }
            check(t2, n_b)?;
            needed.insert(t2, ());
        }
    }
    let graph = GeodesicGraph::new(mesh_b);
    let mut fields = BTreeMap::new();
    for &t in needed.keys() {
        fields.insert(t, graph.distances_from(t)?.distances);
    }
    let scale = mesh_b.total_area().sqrt();
    Ok(truth
        .pairs
        .iter()
        .enumerate()
        .map(|(k, &(s, t))| {
            let image = map.assignment[s];
            let mut e = fields[&t][image];
            if let Some(sym) = symmetric {
                e = e.min(fields[&sym.pairs[k].1][image]);
            }
            e / scale
        })
        .collect())
}

/// Per gene: 0 when equal, 1 when exactly one is empty, otherwise the
/// target landmarks' geodesic distance divided by `diameter`. Summed.
pub fn chromosome_distance(a: &Chromosome, b: &Chromosome, landmark_distances: &[Vec<f64>], diameter: f64) -> f64 {
    a.genes
        .iter()
        .zip(&b.genes)
        .map(|(x, y)| match (x, y) {
            _ if x == y => 0.0,
            (Some(s), Some(t)) => landmark_distances[*s][*t] / diameter,
            _ => 1.0,
        })
        .sum()
}

pub fn distance_matrix(chromosomes: &[Chromosome], landmark_distances: &[Vec<f64>], diameter: f64) -> Vec<Vec<f64>> {
    let n = chromosomes.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = chromosome_distance(&chromosomes[i], &chromosomes[j], landmark_distances, diameter);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    d
}

/// Mean over distinct pairs; 0 for fewer than two chromosomes.
pub fn mean_pairwise_distance(matrix: &[Vec<f64>]) -> f64 {
    let n = matrix.len();
    if n < 2 {
        return 0.0;
    }
    let total: f64 = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| matrix[i][j]).sum();
    total / (n * (n - 1) / 2) as f64
}

pub fn matrix_to_csv(matrix: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for row in matrix {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
