use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{GeodesicGraph, TriMesh};
use crate::spectral::SpectralBasis;

/// How a landmark was found. The declaration order is the filtering
/// priority: maxima first, then minima, then centers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Max,
    Min,
    Center,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Landmark {
    pub vertex: usize,
    pub category: Category,
    /// Position in the filtering order, 0 being the most salient.
    pub salience_rank: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandmarkParams {
    pub d_eps: f64,
    pub m_max: usize,
    pub d_eps_growth: f64,
    pub d_adj: f64,
    pub centers_n: usize,
}

impl Default for LandmarkParams {
    fn default() -> Self {
        Self {
            d_eps: 0.08,
            m_max: 35,
            d_eps_growth: 1.1,
            d_adj: 0.3,
            centers_n: 30,
        }
    }
}

/// Filtered landmarks of one mesh with their geodesic neighborhood data.
#[derive(Debug, Clone)]
pub struct LandmarkSet {
    pub landmarks: Vec<Landmark>,
    /// Sorted adjacent landmark indices, never containing the landmark itself.
    pub adjacency: Vec<Vec<usize>>,
    /// Geodesic distance between landmarks, `m × m`.
    pub pairwise: Vec<Vec<f64>>,
    /// Geodesic distance from each landmark to every vertex, `m × n`.
    pub fields: Vec<Vec<f64>>,
    /// Separation threshold in effect after filtering.
    pub d_eps: f64,
}

impl LandmarkSet {
    pub fn len(&self) -> usize {
        self.landmarks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.landmarks.is_empty()
    }

    pub fn vertex(&self, l: usize) -> usize {
        self.landmarks[l].vertex
    }

    pub fn category(&self, l: usize) -> Category {
        self.landmarks[l].category
    }

    pub fn is_adjacent(&self, l: usize, r: usize) -> bool {
        self.adjacency[l].binary_search(&r).is_ok()
    }

    /// Landmark geodesically closest to a vertex; lowest index on ties.
    pub fn nearest_to_vertex(&self, v: usize) -> usize {
        let mut best = 0;
        for l in 1..self.len() {
            if self.fields[l][v] < self.fields[best][v] {
                best = l;
            }
        }
        best
    }

    /// Largest pairwise landmark distance.
    pub fn diameter(&self) -> f64 {
        self.pairwise
            .iter()
            .flat_map(|r| r.iter().copied())
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> LandmarkJson {
        let mut adjacency = Vec::new();
        for (l, adj) in self.adjacency.iter().enumerate() {
            for &r in adj.iter().filter(|&&r| r > l) {
                adjacency.push([l, r]);
            }
        }
        LandmarkJson {
            landmarks: self
                .landmarks
                .iter()
                .map(|l| LandmarkEntry {
                    vertex: l.vertex,
                    category: l.category,
                })
                .collect(),
            adjacency,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkEntry {
    pub vertex: usize,
    pub category: Category,
}

/// Serialized form: landmarks in order, adjacency as index pairs `l < r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkJson {
    pub landmarks: Vec<LandmarkEntry>,
    pub adjacency: Vec<[usize; 2]>,
}

/// Average geodesic distance `AGD(v) = Σ_u a_u d(v, u)`.
pub fn agd(mesh: &TriMesh) -> Result<Vec<f64>> {
    let graph = GeodesicGraph::new(mesh);
    agd_with_graph(mesh, &graph)
}

pub(crate) fn agd_with_graph(mesh: &TriMesh, graph: &GeodesicGraph) -> Result<Vec<f64>> {
    let areas = mesh.vertex_areas();
    (0..mesh.num_vertices())
        .into_par_iter()
        .map(|v| {
            let field = graph.distances_from(v)?;
            Ok(field
                .distances
                .iter()
                .zip(areas)
                .map(|(d, a)| d * a)
                .sum())
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremumKind {
    Max,
    Min,
}

/// Vertices whose value is strictly above (or below) all one-ring
/// neighbors. Plateaus yield nothing.
pub fn local_extrema(mesh: &TriMesh, f: &[f64], kind: ExtremumKind) -> Vec<usize> {
    (0..mesh.num_vertices())
        .filter(|&v| {
            let nb = mesh.neighbors(v);
            !nb.is_empty()
                && nb.iter().all(|&u| match kind {
                    ExtremumKind::Max => f[v] > f[u],
                    ExtremumKind::Min => f[v] < f[u],
                })
        })
        .collect()
}

/// Spectral saliency `f_N(v) = Σ_{k=2}^{N+1} |φ_k(v)| / (√λ_k ‖φ_k‖_∞)`.
/// The constant eigenfunction is skipped.
pub fn centers_function(basis: &SpectralBasis, n_terms: usize) -> Result<Vec<f64>> {
    if basis.k() < n_terms + 1 {
        return Err(Error::InvalidBasisSize {
            k: n_terms + 1,
            n: basis.k(),
        });
    }
    let n = basis.n();
    let mut f = vec![0.0; n];
    for k in 1..=n_terms {
        let lambda = basis.eigenvalues[k];
        if !(lambda > 0.0) {
            return Err(Error::NonPositiveEigenvalue {
                index: k,
                value: lambda,
            });
        }
        let col = basis.eigenfunctions.column(k);
        let sup = col.amax();
        if sup == 0.0 {
            continue;
        }
        let scale = 1.0 / (lambda.sqrt() * sup);
        for (fv, phi) in f.iter_mut().zip(col.iter()) {
            *fv += phi.abs() * scale;
        }
    }
    Ok(f)
}

/// Greedy separation filter over candidates given in priority order.
///
/// A candidate survives if it is at least `d_eps` from every survivor
/// before it. While more than `m_max` survive, `d_eps` is multiplied by
/// `growth` and the pass repeated. Returns survivor positions (into the
/// candidate list) and the final threshold.
pub fn filter_by_separation(
    count: usize,
    distance: impl Fn(usize, usize) -> f64,
    mut d_eps: f64,
    m_max: usize,
    growth: f64,
) -> (Vec<usize>, f64) {
    loop {
        let mut kept: Vec<usize> = Vec::new();
        for c in 0..count {
            if kept.iter().all(|&k| distance(k, c) >= d_eps) {
                kept.push(c);
            }
        }
        if kept.len() <= m_max {
            return (kept, d_eps);
        }
        d_eps *= growth;
    }
}

/// Detects AGD maxima, AGD minima and spectral centers, then filters them
/// by geodesic separation in priority order and builds adjacency.
///
/// Within a category, extrema are ordered by decreasing `|AGD − mean|`,
/// centers by increasing saliency value; remaining ties by vertex index.
pub fn detect_landmarks(
    mesh: &TriMesh,
    basis: &SpectralBasis,
    params: &LandmarkParams,
) -> Result<LandmarkSet> {
    let graph = GeodesicGraph::new(mesh);
    let agd_values = agd_with_graph(mesh, &graph)?;
    let mean = agd_values.iter().sum::<f64>() / agd_values.len() as f64;
    let saliency = centers_function(basis, params.centers_n)?;

    let by_deviation = |mut vs: Vec<usize>| {
        vs.sort_by(|&a, &b| {
            (agd_values[b] - mean)
                .abs()
                .total_cmp(&(agd_values[a] - mean).abs())
                .then(a.cmp(&b))
        });
        vs
    };
    let maxima = by_deviation(local_extrema(mesh, &agd_values, ExtremumKind::Max));
    let minima = by_deviation(local_extrema(mesh, &agd_values, ExtremumKind::Min));
    let mut centers = local_extrema(mesh, &saliency, ExtremumKind::Min);
    centers.sort_by(|&a, &b| saliency[a].total_cmp(&saliency[b]).then(a.cmp(&b)));

    let mut candidates: Vec<(usize, Category)> = Vec::new();
    for (list, cat) in [
        (maxima, Category::Max),
        (minima, Category::Min),
        (centers, Category::Center),
    ] {
        for v in list {
            if !candidates.iter().any(|&(u, _)| u == v) {
                candidates.push((v, cat));
            }
        }
    }

    let fields: Vec<Vec<f64>> = candidates
        .par_iter()
        .map(|&(v, _)| graph.distances_from(v).map(|f| f.distances))
        .collect::<Result<_>>()?;
    let (kept, d_eps) = filter_by_separation(
        candidates.len(),
        |a, b| fields[a][candidates[b].0],
        params.d_eps,
        params.m_max,
        params.d_eps_growth,
    );
    if kept.len() < 3 {
        return Err(Error::InsufficientFeatures(kept.len()));
    }

    let landmarks: Vec<Landmark> = kept
        .iter()
        .enumerate()
        .map(|(rank, &c)| Landmark {
            vertex: candidates[c].0,
            category: candidates[c].1,
            salience_rank: rank,
        })
        .collect();
    let mut fields_kept: Vec<Vec<f64>> = Vec::with_capacity(kept.len());
    let mut fields = fields.into_iter().map(Some).collect::<Vec<_>>();
    for &c in &kept {
        fields_kept.push(fields[c].take().expect("each candidate kept once"));
    }
    // measured from the higher-priority landmark, as during filtering, so the
    // matrix is exactly symmetric
    let m = landmarks.len();
    let pairwise = (0..m)
        .map(|l| {
            (0..m)
                .map(|r| fields_kept[l.min(r)][landmarks[l.max(r)].vertex])
                .collect()
        })
        .collect();
    let mut set = LandmarkSet {
        landmarks,
        adjacency: Vec::new(),
        pairwise,
        fields: fields_kept,
        d_eps,
    };
    set.adjacency = landmark_adjacency(mesh, &set, params.d_adj)?;
    Ok(set)
}

/// `l` and `r` are adjacent if their geodesic distance is below `d_adj` or
/// their geodesic Voronoi cells share a mesh edge.
pub fn landmark_adjacency(mesh: &TriMesh, set: &LandmarkSet, d_adj: f64) -> Result<Vec<Vec<usize>>> {
    let m = set.len();
    let sources: Vec<usize> = set.landmarks.iter().map(|l| l.vertex).collect();
    let (_, label) = GeodesicGraph::new(mesh).multi_source(&sources)?;
    let mut adjacent = vec![vec![false; m]; m];
    for e in mesh.edges() {
        let (a, b) = (label[e.v[0]], label[e.v[1]]);
        if a != b {
            adjacent[a][b] = true;
            adjacent[b][a] = true;
        }
    }
    for l in 0..m {
        for r in 0..m {
            if l != r && set.pairwise[l][r] < d_adj {
                adjacent[l][r] = true;
            }
        }
    }
    Ok(adjacent
        .into_iter()
        .enumerate()
        .map(|(l, row)| {
            row.into_iter()
                .enumerate()
                .filter(|&(r, a)| a && r != l)
                .map(|(r, _)| r)
                .collect()
        })
        .collect())
}
