//! Discrete shell energies (membrane and bending), the reversibility energy
//! of a functional-map pair, and the chromosome fitness built from them.
//!
//! The membrane distortion tensor of a face is the pullback of the
//! deformed first fundamental form, `G = E⁻ᵀ (ẼᵀẼ) E⁻¹`, where `E` holds
//! the reference edge vectors in an orthonormal frame of the reference
//! triangle and `ẼᵀẼ` is the Gram matrix of the deformed edges. This is
//! `JᵀJ` for the Jacobian `J = Ẽ E⁻¹` between local frames, without
//! needing a frame on the (possibly collapsed) deformed triangle.

use std::collections::HashMap;
use std::sync::Mutex;

use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmap::{refine, solve_fmap, FunctionalMap, MapWeights, VertexMap};
use crate::mesh::{TriMesh, Vec3};
use crate::shape::ShapeData;

pub const LOG_DELTA: f64 = 1e-6;
const MIN_EDGE_AREA: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    pub mu: f64,
    pub eta: f64,
    pub gamma: f64,
    pub log_delta: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            mu: 1.0,
            eta: 1e-3,
            gamma: 5e-4,
            log_delta: LOG_DELTA,
        }
    }
}

/// Logarithm continued linearly (value and slope) below `delta`.
pub fn extended_log(x: f64, delta: f64) -> f64 {
    if x >= delta {
        x.ln()
    } else {
        delta.ln() + (x - delta) / delta
    }
}

/// `½ tr G + ¼ det G − ¾ log det G − 5/4`
pub fn membrane_density(g: &Matrix2<f64>, delta: f64) -> f64 {
    let tr = g.trace();
    let det = g.determinant();
    0.5 * tr + 0.25 * det - 0.75 * extended_log(det, delta) - 1.25
}

/// A reference mesh together with new positions for its vertices.
#[derive(Debug, Clone, Copy)]
pub struct DeformedConfiguration<'a> {
    pub reference: &'a TriMesh,
    pub deformed: &'a [Vec3],
}

impl<'a> DeformedConfiguration<'a> {
    pub fn new(reference: &'a TriMesh, deformed: &'a [Vec3]) -> Result<Self> {
        if deformed.len() != reference.num_vertices() {
            return Err(Error::DimensionMismatch {
                expected: reference.num_vertices(),
                actual: deformed.len(),
            });
        }
        Ok(Self {
            reference,
            deformed,
        })
    }

    /// Distortion tensor of face `f`.
    pub fn distortion(&self, f: usize) -> Result<Matrix2<f64>> {
        let [i, j, k] = self.reference.faces()[f];
        let v = self.reference.vertices();
        let (e1, e2) = (v[j] - v[i], v[k] - v[i]);
        let l1 = e1.norm();
        let x = e1 / l1;
        let e2x = e2.dot(&x);
        let e2y = (e2 - x * e2x).norm();
        if !(l1 > 0.0) || !(e2y > 0.0) {
            return Err(Error::ZeroAreaFace(f));
        }
        // columns are the reference edges in the local frame
        let e_inv = Matrix2::new(l1, e2x, 0.0, e2y)
            .try_inverse()
            .ok_or(Error::ZeroAreaFace(f))?;
        let d = self.deformed;
        let (d1, d2) = (d[j] - d[i], d[k] - d[i]);
        let gram = Matrix2::new(d1.dot(&d1), d1.dot(&d2), d1.dot(&d2), d2.dot(&d2));
        Ok(e_inv.transpose() * gram * e_inv)
    }
}

/// `Σ_t a_t W(G_t)` with the reference face areas.
pub fn membrane_energy(config: &DeformedConfiguration, delta: f64) -> Result<f64> {
    let areas = config.reference.face_areas();
    let mut total = 0.0;
    for (f, &a) in areas.iter().enumerate() {
        total += a * membrane_density(&config.distortion(f)?, delta);
    }
    Ok(total)
}

fn face_normal(p: &[Vec3], f: &[usize; 3]) -> Vec3 {
    (p[f[1]] - p[f[0]]).cross(&(p[f[2]] - p[f[0]]))
}

/// Cosine of the angle between the normals of the two faces at an interior
/// edge (1 when flat), or `None` if either face has zero area.
fn edge_cosine(p: &[Vec3], f0: &[usize; 3], f1: &[usize; 3]) -> Option<(f64, f64, f64)> {
    let (n0, n1) = (face_normal(p, f0), face_normal(p, f1));
    let (a0, a1) = (n0.norm(), n1.norm());
    if !(a0 > 0.0 && a1 > 0.0) {
        return None;
    }
    Some((n0.dot(&n1) / (a0 * a1), 0.5 * a0, 0.5 * a1))
}

/// `Σ_e (cos θ̃_e − cos θ_e)² l̃_e² / d̃_e` over interior edges, with
/// `d̃_e = (ã_t + ã_t')/3`. Boundary edges and edges next to a collapsed
/// deformed face contribute nothing.
pub fn bending_energy(config: &DeformedConfiguration) -> f64 {
    let faces = config.reference.faces();
    let rv = config.reference.vertices();
    let dv = config.deformed;
    let mut total = 0.0;
    for e in config.reference.edges().iter().filter(|e| e.is_interior()) {
        let (f0, f1) = (&faces[e.faces[0]], &faces[e.faces[1]]);
        let Some((cos_ref, _, _)) = edge_cosine(rv, f0, f1) else {
            continue;
        };
        let Some((cos_def, a0, a1)) = edge_cosine(dv, f0, f1) else {
            continue;
        };
        let d = ((a0 + a1) / 3.0).max(MIN_EDGE_AREA);
        let len2 = (dv[e.v[0]] - dv[e.v[1]]).norm_squared();
        total += (cos_def - cos_ref).powi(2) * len2 / d;
    }
    total
}

/// `μ E_mem + η E_bnd`
pub fn elastic_energy(config: &DeformedConfiguration, params: &EnergyParams) -> Result<f64> {
    let (mem, bnd) = elastic_terms(config, params)?;
    Ok(params.mu * mem + params.eta * bnd)
}

fn elastic_terms(config: &DeformedConfiguration, params: &EnergyParams) -> Result<(f64, f64)> {
    Ok((
        membrane_energy(config, params.log_delta)?,
        bending_energy(config),
    ))
}

fn rows_to_points(m: &DMatrix<f64>) -> Vec<Vec3> {
    (0..m.nrows())
        .map(|i| Vec3::new(m[(i, 0)], m[(i, 1)], m[(i, 2)]))
        .collect()
}

/// Geometry `Φ_{i,t} C_ij Φ_{j,s}† X_j` of the deformed copy of `M_i`.
pub fn deformed_coords(c: &FunctionalMap, shape_i: &ShapeData, shape_j: &ShapeData) -> Vec<Vec3> {
    rows_to_points(&crate::fmap::image_points(c, &shape_i.basis_t, &shape_j.target))
}

/// Membrane and bending energy of `M_i` deformed by the map `C_ij`.
pub fn elastic_terms_of_fmap(
    c: &FunctionalMap,
    shape_i: &ShapeData,
    shape_j: &ShapeData,
    params: &EnergyParams,
) -> Result<(f64, f64)> {
    let coords = deformed_coords(c, shape_i, shape_j);
    let config = DeformedConfiguration::new(&shape_i.mesh, &coords)?;
    elastic_terms(&config, params)
}

pub fn elastic_energy_of_fmap(
    c: &FunctionalMap,
    shape_i: &ShapeData,
    shape_j: &ShapeData,
    params: &EnergyParams,
) -> Result<f64> {
    let (mem, bnd) = elastic_terms_of_fmap(c, shape_i, shape_j, params)?;
    Ok(params.mu * mem + params.eta * bnd)
}

/// `‖C_12 Φ_{2,s}† P(C_21) X_1 − Φ_{1,t}† X_1‖² + ‖C_21 Φ_{1,s}† P(C_12) X_2 − Φ_{2,t}† X_2‖²`
/// with `P(C_ij) = Φ_{i,t} C_ij Φ_{j,s}†`.
pub fn reversibility_energy(
    c12: &FunctionalMap,
    c21: &FunctionalMap,
    shape_1: &ShapeData,
    shape_2: &ShapeData,
) -> Result<f64> {
    let one_way = |c_ij: &FunctionalMap,
                   c_ji: &FunctionalMap,
                   s_i: &ShapeData,
                   s_j: &ShapeData|
     -> Result<f64> {
        if c_ij.kt() != s_i.basis_t.k()
            || c_ij.ks() != s_j.basis_s.k()
            || c_ji.kt() != s_j.basis_t.k()
            || c_ji.ks() != s_i.basis_s.k()
        {
            return Err(Error::DimensionMismatch {
                expected: s_i.basis_t.k(),
                actual: c_ij.kt(),
            });
        }
        // P(C_ji) X_i : points on M_j's side, n_j × 3
        let pulled = &s_j.basis_t.eigenfunctions * (&c_ji.matrix * &s_i.target.spectral_coords);
        let round_trip = &c_ij.matrix * (&s_j.basis_s.pseudo_inverse * pulled);
        Ok((round_trip - &s_i.spectral_coords_t).norm_squared())
    };
    Ok(one_way(c12, c21, shape_1, shape_2)? + one_way(c21, c12, shape_2, shape_1)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessReport {
    pub e_mem_12: f64,
    pub e_bnd_12: f64,
    pub e_mem_21: f64,
    pub e_bnd_21: f64,
    pub e_rev: f64,
    pub e_fit: f64,
    pub mu: f64,
    pub eta: f64,
    pub gamma: f64,
}

impl FitnessReport {
    pub fn e_elastic_12(&self) -> f64 {
        self.mu * self.e_mem_12 + self.eta * self.e_bnd_12
    }

    pub fn e_elastic_21(&self) -> f64 {
        self.mu * self.e_mem_21 + self.eta * self.e_bnd_21
    }
}

/// Everything computed for one landmark match.
#[derive(Debug, Clone)]
pub struct MapPair {
    /// Least-squares maps before refinement.
    pub c12_hat: FunctionalMap,
    pub c21_hat: FunctionalMap,
    /// Refined maps.
    pub c12: FunctionalMap,
    pub c21: FunctionalMap,
    /// Pointwise maps `M_1 → M_2` and `M_2 → M_1` from the refinement.
    pub p12: VertexMap,
    pub p21: VertexMap,
    pub report: FitnessReport,
}

/// Evaluates matches between two prepared shapes and caches their fitness.
///
/// The cache key is the match itself (vertex pairs in source order), so
/// concurrent insertions of the same key write identical values.
pub struct FitnessEvaluator<'a> {
    pub shape_1: &'a ShapeData,
    pub shape_2: &'a ShapeData,
    pub weights: MapWeights,
    pub params: EnergyParams,
    cache: Mutex<HashMap<Vec<(usize, usize)>, FitnessReport>>,
}

impl<'a> FitnessEvaluator<'a> {
    pub fn new(
        shape_1: &'a ShapeData,
        shape_2: &'a ShapeData,
        weights: MapWeights,
        params: EnergyParams,
    ) -> Self {
        Self {
            shape_1,
            shape_2,
            weights,
            params,
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// Least-squares map `Ĉ_12` for vertex pairs `(v on M_1, v on M_2)`.
    pub fn solve_12(&self, pairs: &[(usize, usize)]) -> Result<FunctionalMap> {
        solve_fmap(pairs, &self.shape_1.basis_t, &self.shape_2.basis_s, self.weights)
    }

    /// Pointwise map `M_1 → M_2` of the unrefined least-squares map.
    pub fn guidance_map(&self, pairs: &[(usize, usize)]) -> Result<VertexMap> {
        let c = self.solve_12(pairs)?;
        Ok(crate::fmap::fmap_to_vertexmap_with(
            &c,
            &self.shape_1.basis_t,
            &self.shape_2.target,
        ))
    }

    /// Solve both directions, refine both, and score the refined pair.
    pub fn evaluate(&self, pairs: &[(usize, usize)]) -> Result<MapPair> {
        let (s1, s2) = (self.shape_1, self.shape_2);
        let swapped: Vec<(usize, usize)> = pairs.iter().map(|&(a, b)| (b, a)).collect();
        let c12_hat = solve_fmap(pairs, &s1.basis_t, &s2.basis_s, self.weights)?;
        let c21_hat = solve_fmap(&swapped, &s2.basis_t, &s1.basis_s, self.weights)?;
        let (c12, p12) = refine(&c12_hat, &s1.basis_t, &s2.basis_s, &s2.target);
        let (c21, p21) = refine(&c21_hat, &s2.basis_t, &s1.basis_s, &s1.target);
        let (e_mem_12, e_bnd_12) = elastic_terms_of_fmap(&c12, s1, s2, &self.params)?;
        let (e_mem_21, e_bnd_21) = elastic_terms_of_fmap(&c21, s2, s1, &self.params)?;
        let e_rev = reversibility_energy(&c12, &c21, s1, s2)?;
        let p = &self.params;
        let elastic = p.mu * (e_mem_12 + e_mem_21) + p.eta * (e_bnd_12 + e_bnd_21);
        let e_fit = p.gamma * elastic + (1.0 - p.gamma) * e_rev;
        Ok(MapPair {
            c12_hat,
            c21_hat,
            c12,
            c21,
            p12,
            p21,
            report: FitnessReport {
                e_mem_12,
                e_bnd_12,
                e_mem_21,
                e_bnd_21,
                e_rev,
                e_fit,
                mu: p.mu,
                eta: p.eta,
                gamma: p.gamma,
            },
        })
    }

    /// Cached fitness of a match.
    pub fn fitness(&self, pairs: &[(usize, usize)]) -> Result<FitnessReport> {
        if let Some(r) = self.cache.lock().expect("cache lock").get(pairs) {
            return Ok(*r);
        }
        let report = self.evaluate(pairs)?.report;
        self.cache
            .lock()
            .expect("cache lock")
            .insert(pairs.to_vec(), report);
        Ok(report)
    }

    pub fn cache_len(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }
}
