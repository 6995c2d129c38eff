//! Wave kernel signatures and the per-landmark normalized distance used to
//! seed the gene bank.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::spectral::SpectralBasis;

pub const DEFAULT_ENERGY_SCALES: usize = 100;
/// Gaussian width in units of the log-energy step.
pub const DEFAULT_SIGMA_STEPS: f64 = 7.0;

#[derive(Debug, Clone)]
pub struct WksTable {
    /// n × T, one row per vertex.
    pub signatures: DMatrix<f64>,
}

/// Signatures over `scales` log-spaced energies spanning
/// `[log λ_2, log λ_k]`, each normalized by its total filter weight.
pub fn wks(basis: &SpectralBasis, scales: usize, sigma_steps: f64) -> Result<WksTable> {
    if basis.k() < 3 || scales < 2 {
        return Err(Error::InvalidBasisSize {
            k: basis.k(),
            n: basis.n(),
        });
    }
    let lambda2 = basis.eigenvalues[1];
    if !(lambda2 > 0.0) {
        return Err(Error::NonPositiveEigenvalue {
            index: 1,
            value: lambda2,
        });
    }
    let log_l: Vec<f64> = basis
        .eigenvalues
        .iter()
        .skip(1)
        .map(|&l| l.max(lambda2).ln())
        .collect();
    let e_min = log_l[0];
    let e_max = *log_l.last().expect("k >= 3");
    let step = (e_max - e_min) / (scales - 1) as f64;
    let sigma = (sigma_steps * step).max(f64::EPSILON);

    let n = basis.n();
    let mut signatures = DMatrix::zeros(n, scales);
    let phi = &basis.eigenfunctions;
    for t in 0..scales {
        let e = e_min + step * t as f64;
        let weights: Vec<f64> = log_l
            .iter()
            .map(|&ll| (-(e - ll).powi(2) / (2.0 * sigma * sigma)).exp())
            .collect();
        let norm: f64 = weights.iter().sum();
        for v in 0..n {
            let mut s = 0.0;
            for (j, w) in weights.iter().enumerate() {
                let p = phi[(v, j + 1)];
                s += w * p * p;
            }
            signatures[(v, t)] = s / norm;
        }
    }
    Ok(WksTable { signatures })
}

impl WksTable {
    pub fn scales(&self) -> usize {
        self.signatures.ncols()
    }

    /// Relative L1 distance `Σ_t |a_t − b_t| / (a_t + b_t)` between a vertex
    /// of this table and a vertex of `other`.
    pub fn raw_distance(&self, v: usize, other: &WksTable, u: usize) -> f64 {
        let a = self.signatures.row(v);
        let b = other.signatures.row(u);
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| {
                let s = x + y;
                if s > 0.0 {
                    (x - y).abs() / s
                } else {
                    0.0
                }
            })
            .sum()
    }
}

/// Normalized distance from vertex `v1` (on `table_1`) to vertex `v2` (on
/// `table_2`): the raw distance divided by the largest raw distance from
/// `v1` to any of `candidates`. Lies in `[0, 1]` when `v2` is a candidate.
pub fn wks_distance(
    table_1: &WksTable,
    table_2: &WksTable,
    v1: usize,
    v2: usize,
    candidates: &[usize],
) -> f64 {
    let max = candidates
        .iter()
        .map(|&c| table_1.raw_distance(v1, table_2, c))
        .fold(0.0, f64::max);
    if max > 0.0 {
        table_1.raw_distance(v1, table_2, v2) / max
    } else {
        0.0
    }
}

/// All normalized distances from each `sources` vertex to each `targets`
/// vertex, normalized per source over the target set.
pub fn normalized_distance_matrix(
    table_1: &WksTable,
    sources: &[usize],
    table_2: &WksTable,
    targets: &[usize],
) -> Vec<Vec<f64>> {
    sources
        .iter()
        .map(|&s| {
            let raw: Vec<f64> = targets
                .iter()
                .map(|&t| table_1.raw_distance(s, table_2, t))
                .collect();
            let max = raw.iter().copied().fold(0.0, f64::max);
            raw.into_iter()
                .map(|r| if max > 0.0 { r / max } else { 0.0 })
                .collect()
        })
        .collect()
}
