//! Per-shape data reused by every map and fitness evaluation.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fmap::{coords_matrix, PointTarget};
use crate::mesh::TriMesh;
use crate::spectral::{eigenbasis_cached, SpectralBasis};

#[derive(Debug, Clone)]
pub struct ShapeData {
    pub mesh: TriMesh,
    /// Basis used when the shape is the target side of a map (`k_t` functions).
    pub basis_t: SpectralBasis,
    /// Truncation used when the shape is the source side (`k_s` functions).
    pub basis_s: SpectralBasis,
    /// `Φ_s† X` and a nearest-neighbour index over the vertices.
    pub target: PointTarget,
    /// `Φ_t† X`, `k_t × 3`.
    pub spectral_coords_t: DMatrix<f64>,
}

impl ShapeData {
    pub fn from_basis(mesh: TriMesh, basis: SpectralBasis, ks: usize) -> Result<Self> {
        if ks == 0 || ks > basis.k() {
            return Err(Error::InvalidBasisSize { k: ks, n: basis.k() });
        }
        let basis_s = basis.truncated(ks)?;
        let target = PointTarget::new(&basis_s, mesh.vertices());
        let spectral_coords_t = &basis.pseudo_inverse * coords_matrix(mesh.vertices());
        Ok(Self {
            mesh,
            basis_t: basis,
            basis_s,
            target,
            spectral_coords_t,
        })
    }

    /// Computes (or loads from `cache_dir`) a `kt`-function basis.
    pub fn new(mesh: TriMesh, kt: usize, ks: usize, cache_dir: Option<&Path>) -> Result<Self> {
        let basis = eigenbasis_cached(&mesh, kt, cache_dir)?;
        Self::from_basis(mesh, basis, ks)
    }

    pub fn kt(&self) -> usize {
        self.basis_t.k()
    }

    pub fn ks(&self) -> usize {
        self.basis_s.k()
    }
}
