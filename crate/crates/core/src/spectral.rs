//! Cotangent Laplace–Beltrami operator and its low-frequency eigenbasis.
//!
//! The generalized problem `S φ = λ M φ` (cotangent stiffness, lumped mass)
//! is reduced to a dense symmetric one through `M^{-1/2}`, which is exact
//! and deterministic at the mesh sizes this crate targets (a few thousand
//! vertices).

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::mesh::TriMesh;

/// Symmetric sparse stiffness matrix stored as sorted rows, plus lumped mass.
#[derive(Debug, Clone)]
pub struct CotanOperator {
    rows: Vec<Vec<(usize, f64)>>,
    pub mass: Vec<f64>,
}

impl CotanOperator {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .binary_search_by_key(&j, |&(c, _)| c)
            .map(|p| self.rows[i][p].1)
            .unwrap_or(0.0)
    }

    /// `S x`
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(j, w)| w * x[j]).sum())
            .collect()
    }

    /// Dirichlet energy `xᵀ S x`.
    pub fn dirichlet(&self, x: &[f64]) -> f64 {
        self.apply(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut d = DMatrix::zeros(n, n);
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, w) in r {
                d[(i, j)] = w;
            }
        }
        d
    }
}

fn cot(a: &crate::Vec3, b: &crate::Vec3) -> f64 {
    a.dot(b) / a.cross(b).norm()
}

/// Cotangent stiffness (positive semi-definite, zero row sums) and lumped
/// vertex-area mass.
pub fn cotan_operator(mesh: &TriMesh) -> Result<CotanOperator> {
    mesh.check_nondegenerate()?;
    let n = mesh.num_vertices();
    let v = mesh.vertices();
    let mut off: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for f in mesh.faces() {
        for c in 0..3 {
            let (i, j, k) = (f[c], f[(c + 1) % 3], f[(c + 2) % 3]);
            // angle at k is opposite edge (i, j)
            let w = 0.5 * cot(&(v[i] - v[k]), &(v[j] - v[k]));
            off[i].push((j, w));
            off[j].push((i, w));
        }
    }
    let rows = off
        .into_iter()
        .enumerate()
        .map(|(i, mut r)| {
            r.sort_unstable_by_key(|&(j, _)| j);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(r.len() + 1);
            for (j, w) in r {
                match merged.last_mut() {
                    Some(last) if last.0 == j => last.1 += w,
                    _ => merged.push((j, w)),
                }
            }
            let diag: f64 = merged.iter().map(|&(_, w)| w).sum();
            let mut row: Vec<(usize, f64)> = merged.into_iter().map(|(j, w)| (j, -w)).collect();
            let pos = row.partition_point(|&(j, _)| j < i);
            row.insert(pos, (i, diag));
            row
        })
        .collect();
    Ok(CotanOperator {
        rows,
        mass: mesh.vertex_areas().to_vec(),
    })
}

/// First `k` Laplace–Beltrami eigenpairs of a mesh, M-orthonormal.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    pub eigenvalues: DVector<f64>,
    /// n × k, columns are eigenfunctions.
    pub eigenfunctions: DMatrix<f64>,
    pub mass: DVector<f64>,
    /// k × n, `Φᵀ diag(mass)`.
    pub pseudo_inverse: DMatrix<f64>,
}

impl SpectralBasis {
    fn from_parts(eigenvalues: DVector<f64>, eigenfunctions: DMatrix<f64>, mass: DVector<f64>) -> Self {
        let mut pseudo_inverse = eigenfunctions.transpose();
        for (j, mut col) in pseudo_inverse.column_iter_mut().enumerate() {
            col *= mass[j];
        }
        Self {
            eigenvalues,
            eigenfunctions,
            mass,
            pseudo_inverse,
        }
    }

    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn n(&self) -> usize {
        self.eigenfunctions.nrows()
    }

    /// The first `k` eigenpairs.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.k() {
            return Err(Error::InvalidBasisSize { k, n: self.k() });
        }
        Ok(Self {
            eigenvalues: self.eigenvalues.rows(0, k).into_owned(),
            eigenfunctions: self.eigenfunctions.columns(0, k).into_owned(),
            mass: self.mass.clone(),
            pseudo_inverse: self.pseudo_inverse.rows(0, k).into_owned(),
        })
    }

    /// Spectral coefficients `Φ† f`.
    pub fn project(&self, f: &[f64]) -> Result<DVector<f64>> {
        if f.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                actual: f.len(),
            });
        }
        Ok(&self.pseudo_inverse * DVector::from_column_slice(f))
    }

    /// Per-vertex function `Φ c`.
    pub fn reconstruct(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() != self.k() {
            return Err(Error::DimensionMismatch {
                expected: self.k(),
                actual: coeffs.len(),
            });
        }
        Ok((&self.eigenfunctions * DVector::from_column_slice(coeffs))
            .iter()
            .copied()
            .collect())
    }

    /// `max |ΦᵀMΦ − I|`
    pub fn orthonormality_error(&self) -> f64 {
        let gram = &self.pseudo_inverse * &self.eigenfunctions;
        let k = self.k();
        (&gram - DMatrix::<f64>::identity(k, k)).amax()
    }
}

/// Smallest `k` eigenpairs of `S φ = λ M φ`, ascending, sign-fixed so the
/// entry of largest magnitude in each eigenfunction is positive (lowest
/// vertex index wins ties).
pub fn eigenbasis(mesh: &TriMesh, k: usize) -> Result<SpectralBasis> {
    let n = mesh.num_vertices();
    if k == 0 || k > n {
        return Err(Error::InvalidBasisSize { k, n });
    }
    let op = cotan_operator(mesh)?;
    let inv_sqrt_m: Vec<f64> = op.mass.iter().map(|m| m.sqrt().recip()).collect();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for &(j, w) in op.row(i) {
            a[(i, j)] = w * inv_sqrt_m[i] * inv_sqrt_m[j];
        }
    }
    let eig = SymmetricEigen::try_new(a, f64::EPSILON, 0)
        .ok_or_else(|| Error::EigenSolver("symmetric eigen-decomposition did not converge".into()))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));

    let mut values = DVector::zeros(k);
    let mut phi = DMatrix::zeros(n, k);
    for (c, &src) in order.iter().take(k).enumerate() {
        values[c] = eig.eigenvalues[src];
        let col = eig.eigenvectors.column(src);
        let mut best = 0;
        for i in 1..n {
            if col[i].abs() > col[best].abs() {
                best = i;
            }
        }
        let sign = if col[best] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            phi[(i, c)] = sign * col[i] * inv_sqrt_m[i];
        }
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenSolver("non-finite eigenvalue".into()));
    }
    Ok(SpectralBasis::from_parts(
        values,
        phi,
        DVector::from_column_slice(&op.mass),
    ))
}

fn cache_path(dir: &Path, mesh: &TriMesh, k: usize) -> PathBuf {
    let hex: String = mesh
        .content_hash()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    dir.join(format!("{hex}_k{k}.eig"))
}

/// Writes eigenpairs: a text line `n k`, then little-endian doubles
/// (k eigenvalues, then Φ row-major).
pub fn write_basis_cache(path: &Path, basis: &SpectralBasis) -> Result<()> {
    let (n, k) = (basis.n(), basis.k());
    let mut buf = format!("{n} {k}\n").into_bytes();
    buf.reserve(8 * (k + n * k));
    for v in basis.eigenvalues.iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for i in 0..n {
        for j in 0..k {
            buf.extend_from_slice(&basis.eigenfunctions[(i, j)].to_le_bytes());
        }
    }
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(&buf).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Reads a cache file written by [`write_basis_cache`]; the mass comes
/// from the mesh.
pub fn read_basis_cache(path: &Path, mesh: &TriMesh) -> Result<SpectralBasis> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let malformed = |m: &str| Error::Malformed {
        what: "eigen cache",
        message: m.to_string(),
    };
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| malformed("missing header"))?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| malformed("header not utf-8"))?;
    let mut it = header.split_whitespace().map(str::parse::<usize>);
    let (n, k) = match (it.next(), it.next()) {
        (Some(Ok(n)), Some(Ok(k))) => (n, k),
        _ => return Err(malformed("bad header")),
    };
    if n != mesh.num_vertices() {
        return Err(malformed("vertex count differs from mesh"));
    }
    let body = &bytes[nl + 1..];
    if body.len() != 8 * (k + n * k) {
        return Err(malformed("truncated body"));
    }
    let mut vals = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
    let eigenvalues = DVector::from_iterator(k, vals.by_ref().take(k));
    let eigenfunctions = DMatrix::from_row_iterator(n, k, vals);
    Ok(SpectralBasis::from_parts(
        eigenvalues,
        eigenfunctions,
        DVector::from_column_slice(mesh.vertex_areas()),
    ))
}

/// [`eigenbasis`] backed by an on-disk cache keyed by mesh content and `k`.
pub fn eigenbasis_cached(mesh: &TriMesh, k: usize, cache_dir: Option<&Path>) -> Result<SpectralBasis> {
    let Some(dir) = cache_dir else {
        return eigenbasis(mesh, k);
    };
    let path = cache_path(dir, mesh, k);
    if path.exists() {
        if let Ok(b) = read_basis_cache(&path, mesh) {
            if b.k() == k {
                return Ok(b);
            }
        }
    }
    let basis = eigenbasis(mesh, k)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_basis_cache(&path, &basis)?;
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;

    #[test]
    fn row_sums_vanish() {
        let m = shapes::asymmetric_blob(2);
        let op = cotan_operator(&m).unwrap();
        let ones = vec![1.0; m.num_vertices()];
        assert!(op.apply(&ones).iter().all(|x| x.abs() < 1e-9));
        for i in 0..op.n() {
            for &(j, w) in op.row(i) {
                assert!((w - op.entry(j, i)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tetrahedron_offdiagonals_equal() {
        let op = cotan_operator(&shapes::regular_tetrahedron()).unwrap();
        let w = op.entry(0, 1);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!((op.entry(i, j) - w).abs() < 1e-12);
                }
            }
        }
        // cot 60° on both sides: weight 1/√3
        assert!((w + 1.0 / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn square_diagonal_weight_is_zero() {
        // diagonal (1,2) is opposite the right angles at 0 and 3
        let op = cotan_operator(&shapes::unit_square()).unwrap();
        assert!(op.entry(1, 2).abs() < 1e-12);
        assert!((op.entry(0, 1) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_triangle_rejected() {
        let v = vec![
            crate::Vec3::new(0.0, 0.0, 0.0),
            crate::Vec3::new(1.0, 0.0, 0.0),
            crate::Vec3::new(2.0, 0.0, 0.0),
        ];
        let m = TriMesh::new(v, vec![[0, 1, 2]]).unwrap();
        assert!(matches!(cotan_operator(&m), Err(Error::ZeroAreaFace(0))));
    }

    #[test]
    fn constant_first_eigenfunction() {
        let m = shapes::asymmetric_blob(2).normalize_area().unwrap();
        let b = eigenbasis(&m, 5).unwrap();
        assert!(b.eigenvalues[0].abs() < 1e-6);
        for i in 0..m.num_vertices() {
            assert!((b.eigenfunctions[(i, 0)] - 1.0).abs() < 1e-5);
        }
        assert!(b.orthonormality_error() < 1e-6);
        assert!(b.eigenvalues.as_slice().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn complete_basis_reconstructs() {
        let m = shapes::icosphere(1, 1.0);
        let m = shapes::stretch(&m, [1.0, 1.3, 0.8]);
        let n = m.num_vertices();
        let b = eigenbasis(&m, n).unwrap();
        let f: Vec<f64> = (0..n).map(|i| ((i * 37 % 11) as f64).sin()).collect();
        let back = b.reconstruct(b.project(&f).unwrap().as_slice()).unwrap();
        for (x, y) in f.iter().zip(&back) {
            assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_projection() {
        let m = shapes::ellipsoid(2, [1.0, 0.7, 1.2]).normalize_area().unwrap();
        let b = eigenbasis(&m, 8).unwrap();
        let c = b.project(&vec![2.5; m.num_vertices()]).unwrap();
        assert!((c[0] - 2.5).abs() < 1e-6);
        assert!(c.iter().skip(1).all(|x| x.abs() < 1e-6));
    }

    #[test]
    fn left_inverse_on_unit_vectors() {
        let m = shapes::asymmetric_blob(1);
        let b = eigenbasis(&m, 10).unwrap();
        for j in 0..10 {
            let mut e = vec![0.0; 10];
            e[j] = 1.0;
            let back = b.project(&b.reconstruct(&e).unwrap()).unwrap();
            for (i, v) in back.iter().enumerate() {
                assert!((v - e[i]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn dimension_mismatch_errors() {
        let m = shapes::icosphere(1, 1.0);
        let b = eigenbasis(&m, 4).unwrap();
        assert!(b.project(&[1.0; 3]).is_err());
        assert!(b.reconstruct(&[1.0; 3]).is_err());
        assert!(eigenbasis(&m, 0).is_err());
        assert!(eigenbasis(&m, m.num_vertices() + 1).is_err());
    }

    #[test]
    fn cache_round_trip() {
        let m = shapes::asymmetric_blob(1);
        let dir = tempfile::tempdir().unwrap();
        let a = eigenbasis_cached(&m, 6, Some(dir.path())).unwrap();
        let b = eigenbasis_cached(&m, 6, Some(dir.path())).unwrap();
        assert_eq!(a.eigenvalues, b.eigenvalues);
        assert_eq!(a.eigenfunctions, b.eigenfunctions);
        assert_eq!(a.pseudo_inverse, b.pseudo_inverse);
    }
}
