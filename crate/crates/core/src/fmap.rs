//! Functional maps: landmark-constrained least squares, conversion to and
//! from vertex-to-vertex maps, and one-cycle refinement.
//!
//! Convention: `C_ij` maps spectral coefficients of functions on `M_j`
//! to `M_i`. It is always `k_t × k_s`, with the `k_t`-sized basis on `M_i`
//! (the image side) and the `k_s`-sized basis on `M_j`. The induced
//! pointwise map sends vertices of `M_i` to vertices of `M_j`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{Cholesky, DMatrix};

use crate::error::{Error, Result};
use crate::knn::KdTree;
use crate::mesh::Vec3;
use crate::spectral::SpectralBasis;

/// Condition estimate above which a normal system is reported as singular.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalMap {
    /// `k_t × k_s`
    pub matrix: DMatrix<f64>,
}

impl FunctionalMap {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        Self { matrix }
    }

    /// `[I_{k_s}; 0]`
    pub fn identity(kt: usize, ks: usize) -> Self {
        Self::new(DMatrix::identity(kt, ks))
    }

    pub fn kt(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ks(&self) -> usize {
        self.matrix.ncols()
    }

    /// Header `kt ks`, then one row per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.kt(), self.ks());
        for i in 0..self.kt() {
            let row: Vec<String> = (0..self.ks())
                .map(|j| format!("{:e}", self.matrix[(i, j)]))
                .collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let malformed = |m: String| Error::Malformed {
            what: "functional map",
            message: m,
        };
        let mut toks = text.split_whitespace();
        let mut next_usize = || -> Result<usize> {
            toks.next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| malformed("bad header".into()))
        };
        let kt = next_usize()?;
        let ks = next_usize()?;
        let values: Vec<f64> = text
            .split_whitespace()
            .skip(2)
            .map(|t| t.parse().map_err(|_| malformed(format!("bad number '{t}'"))))
            .collect::<Result<_>>()?;
        if values.len() != kt * ks {
            return Err(malformed(format!(
                "expected {} entries, found {}",
                kt * ks,
                values.len()
            )));
        }
        Ok(Self::new(DMatrix::from_row_slice(kt, ks, &values)))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_text(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

/// Vertex-to-vertex map: `assignment[v]` is the image of vertex `v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexMap {
    pub assignment: Vec<usize>,
}

impl VertexMap {
    pub fn identity(n: usize) -> Self {
        Self {
            assignment: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.len() * 5);
        for a in &self.assignment {
            let _ = writeln!(s, "{a}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let assignment = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.parse().map_err(|_| Error::Malformed {
                    what: "vertex map",
                    message: format!("bad index '{l}'"),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { assignment })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_text(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapWeights {
    /// Laplacian commutativity weight.
    pub alpha: f64,
    /// Landmark term weight.
    pub beta: f64,
}

impl Default for MapWeights {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 100.0,
        }
    }
}

/// `α ‖Δ_t C − C Δ_s‖² + β Σ ‖Φ_t[i] C − Φ_s[j]‖²`, pairs `(i on M_i, j on M_j)`.
pub fn map_energy(
    c: &FunctionalMap,
    pairs: &[(usize, usize)],
    basis_t: &SpectralBasis,
    basis_s: &SpectralBasis,
    weights: MapWeights,
) -> f64 {
    let (kt, ks) = (c.kt(), c.ks());
    let mut lap = 0.0;
    for b in 0..ks {
        for a in 0..kt {
            let d = (basis_t.eigenvalues[a] - basis_s.eigenvalues[b]) * c.matrix[(a, b)];
            lap += d * d;
        }
    }
    let mut lm = 0.0;
    for &(i, j) in pairs {
        for b in 0..ks {
            let mut v = -basis_s.eigenfunctions[(j, b)];
            for a in 0..kt {
                v += basis_t.eigenfunctions[(i, a)] * c.matrix[(a, b)];
            }
            lm += v * v;
        }
    }
    weights.alpha * lap + weights.beta * lm
}

/// Exact minimizer of [`map_energy`]. The Laplacian term is diagonal in the
/// entries of `C`, so the problem splits into one ridge-regularized
/// `k_t`-dimensional least-squares solve per column.
pub fn solve_fmap(
    pairs: &[(usize, usize)],
    basis_t: &SpectralBasis,
    basis_s: &SpectralBasis,
    weights: MapWeights,
) -> Result<FunctionalMap> {
    if pairs.is_empty() {
        return Err(Error::EmptyMatch);
    }
    let (kt, ks) = (basis_t.k(), basis_s.k());
    for &(i, j) in pairs {
        if i >= basis_t.n() {
            return Err(Error::InvalidVertex {
                index: i,
                count: basis_t.n(),
            });
        }
        if j >= basis_s.n() {
            return Err(Error::InvalidVertex {
                index: j,
                count: basis_s.n(),
            });
        }
    }
    let p = pairs.len();
    let a = DMatrix::from_fn(p, kt, |r, c| basis_t.eigenfunctions[(pairs[r].0, c)]);
    let y = DMatrix::from_fn(p, ks, |r, c| basis_s.eigenfunctions[(pairs[r].1, c)]);
    let gram = a.transpose() * &a * weights.beta;
    let rhs = a.transpose() * &y * weights.beta;

    let mut c = DMatrix::zeros(kt, ks);
    for b in 0..ks {
        let mut system = gram.clone();
        for i in 0..kt {
            let d = basis_t.eigenvalues[i] - basis_s.eigenvalues[b];
            system[(i, i)] += weights.alpha * d * d;
        }
        let chol = Cholesky::new(system).ok_or(Error::IllConditioned(f64::INFINITY))?;
        let l = chol.l_dirty();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..kt {
            lo = lo.min(l[(i, i)]);
            hi = hi.max(l[(i, i)]);
        }
        // (max/min diag of L)² bounds the condition number from below
        let cond = (hi / lo).powi(2);
        if !(cond <= MAX_CONDITION) {
            return Err(Error::IllConditioned(cond));
        }
        let col = chol.solve(&rhs.column(b).into_owned());
        c.set_column(b, &col);
    }
    Ok(FunctionalMap::new(c))
}

/// Nearest-neighbor target for pointwise-map extraction on `M_j`: the
/// spectral coordinates `Φ_{j,s}† X_j` and a search tree over `X_j`.
#[derive(Debug, Clone)]
pub struct PointTarget {
    /// `k_s × 3`
    pub spectral_coords: DMatrix<f64>,
    pub tree: KdTree,
}

impl PointTarget {
    pub fn new(basis_s: &SpectralBasis, vertices: &[Vec3]) -> Self {
        Self {
            spectral_coords: &basis_s.pseudo_inverse * coords_matrix(vertices),
            tree: KdTree::new(vertices),
        }
    }
}

/// `n × 3` coordinate matrix.
pub fn coords_matrix(vertices: &[Vec3]) -> DMatrix<f64> {
    DMatrix::from_fn(vertices.len(), 3, |i, c| vertices[i][c])
}

/// `Φ_{i,t} C Φ_{j,s}† X_j`, the images of the vertices of `M_i` in the
/// ambient space of `M_j`.
pub fn image_points(c: &FunctionalMap, basis_t: &SpectralBasis, target: &PointTarget) -> DMatrix<f64> {
    &basis_t.eigenfunctions * (&c.matrix * &target.spectral_coords)
}

pub fn fmap_to_vertexmap_with(
    c: &FunctionalMap,
    basis_t: &SpectralBasis,
    target: &PointTarget,
) -> VertexMap {
    let y = image_points(c, basis_t, target);
    let assignment = (0..y.nrows())
        .map(|i| {
            let q = Vec3::new(y[(i, 0)], y[(i, 1)], y[(i, 2)]);
            target.tree.nearest(&q).expect("target mesh has vertices")
        })
        .collect();
    VertexMap { assignment }
}

/// Pointwise map `M_i → M_j` induced by `C_ij` via nearest neighbors in R³.
pub fn fmap_to_vertexmap(
    c: &FunctionalMap,
    basis_t: &SpectralBasis,
    basis_s: &SpectralBasis,
    vertices_j: &[Vec3],
) -> VertexMap {
    fmap_to_vertexmap_with(c, basis_t, &PointTarget::new(basis_s, vertices_j))
}

/// `C = Φ_{i,t}† G Φ_{j,s}` for the 0/1 assignment matrix `G` of `P`.
pub fn vertexmap_to_fmap(p: &VertexMap, basis_t: &SpectralBasis, basis_s: &SpectralBasis) -> FunctionalMap {
    let ks = basis_s.k();
    let gathered = DMatrix::from_fn(p.len(), ks, |v, b| basis_s.eigenfunctions[(p.assignment[v], b)]);
    FunctionalMap::new(&basis_t.pseudo_inverse * gathered)
}

/// One conversion cycle: functional map to pointwise map and back.
pub fn refine(
    c_hat: &FunctionalMap,
    basis_t: &SpectralBasis,
    basis_s: &SpectralBasis,
    target: &PointTarget,
) -> (FunctionalMap, VertexMap) {
    let p = fmap_to_vertexmap_with(c_hat, basis_t, target);
    let c = vertexmap_to_fmap(&p, basis_t, basis_s);
    (c, p)
}
