//! Indexed triangle meshes with edge topology and area weights.
//!
//! A [`TriMesh`] is immutable once built: topology, face areas and lumped
//! vertex areas are derived at construction, so every consumer (spectral
//! basis, geodesics, elastic energies) sees the same cached quantities.

mod geodesic;
mod io;
pub mod shapes;

use std::collections::HashMap;

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub use geodesic::{geodesic_from, geodesic_from_many, GeodesicField, GeodesicGraph};
pub use io::{load_mesh, parse_obj, parse_off, parse_ply, write_colored_ply, MeshFormat};

pub type Vec3 = Vector3<f64>;

/// An undirected edge with one or two adjacent faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    /// Endpoints, `v[0] < v[1]`.
    pub v: [usize; 2],
    pub faces: [usize; 2],
    pub face_count: u8,
}

impl Edge {
    pub fn is_interior(&self) -> bool {
        self.face_count == 2
    }
}

#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    face_areas: Vec<f64>,
    vertex_areas: Vec<f64>,
    neighbors: Vec<Vec<usize>>,
    vertex_faces: Vec<Vec<usize>>,
}

impl TriMesh {
    /// Builds a mesh and its topology. Rejects out-of-range indices, faces
    /// with a repeated vertex and edges shared by more than two faces.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                if v >= n {
                    return Err(Error::VertexOutOfRange {
                        face: fi,
                        vertex: v,
                        count: n,
                    });
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::DegenerateFace(fi));
            }
        }

        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::with_capacity(faces.len() * 2);
        let mut edges: Vec<Edge> = Vec::with_capacity(faces.len() * 3 / 2 + 1);
        for (fi, f) in faces.iter().enumerate() {
            for c in 0..3 {
                let (a, b) = (f[c], f[(c + 1) % 3]);
                let key = (a.min(b), a.max(b));
                match edge_index.get(&key) {
                    Some(&ei) => {
                        let e = &mut edges[ei];
                        if e.face_count >= 2 {
                            return Err(Error::NonManifoldEdge(key.0, key.1));
                        }
                        e.faces[1] = fi;
                        e.face_count = 2;
                    }
                    None => {
                        edge_index.insert(key, edges.len());
                        edges.push(Edge {
                            v: [key.0, key.1],
                            faces: [fi, usize::MAX],
                            face_count: 1,
                        });
                    }
                }
            }
        }

        let mut neighbors = vec![Vec::new(); n];
        for e in &edges {
            neighbors[e.v[0]].push(e.v[1]);
            neighbors[e.v[1]].push(e.v[0]);
        }
        for nb in &mut neighbors {
            nb.sort_unstable();
        }
        let mut vertex_faces = vec![Vec::new(); n];
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                vertex_faces[v].push(fi);
            }
        }

        let face_areas: Vec<f64> = faces
            .iter()
            .map(|f| triangle_area(&vertices[f[0]], &vertices[f[1]], &vertices[f[2]]))
            .collect();
        let mut vertex_areas = vec![0.0; n];
        for (f, &a) in faces.iter().zip(&face_areas) {
            for &v in f {
                vertex_areas[v] += a / 3.0;
            }
        }

        Ok(Self {
            vertices,
            faces,
            edges,
            face_areas,
            vertex_areas,
            neighbors,
            vertex_faces,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Vec3 {
        self.vertices[v]
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn face_areas(&self) -> &[f64] {
        &self.face_areas
    }

    /// Lumped vertex areas: a third of the area of the incident faces.
    pub fn vertex_areas(&self) -> &[f64] {
        &self.vertex_areas
    }

    /// Sorted one-ring vertex neighbors.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn vertex_faces(&self, v: usize) -> &[usize] {
        &self.vertex_faces[v]
    }

    pub fn total_area(&self) -> f64 {
        self.face_areas.iter().sum()
    }

    /// Area-weighted surface centroid.
    pub fn centroid(&self) -> Vec3 {
        let total = self.total_area();
        let mut c = Vec3::zeros();
        for (f, &a) in self.faces.iter().zip(&self.face_areas) {
            let fc = (self.vertices[f[0]] + self.vertices[f[1]] + self.vertices[f[2]]) / 3.0;
            c += fc * a;
        }
        c / total
    }

    pub fn is_closed(&self) -> bool {
        self.edges.iter().all(Edge::is_interior)
    }

    /// Error if any face has (numerically) zero area.
    pub fn check_nondegenerate(&self) -> Result<()> {
        let scale = self.total_area().max(f64::MIN_POSITIVE);
        match self
            .face_areas
            .iter()
            .position(|&a| !(a > 1e-14 * scale))
        {
            Some(fi) => Err(Error::ZeroAreaFace(fi)),
            None => Ok(()),
        }
    }

    /// Same connectivity, new coordinates.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::DimensionMismatch {
                expected: self.vertices.len(),
                actual: vertices.len(),
            });
        }
        let face_areas: Vec<f64> = self
            .faces
            .iter()
            .map(|f| triangle_area(&vertices[f[0]], &vertices[f[1]], &vertices[f[2]]))
            .collect();
        let mut vertex_areas = vec![0.0; vertices.len()];
        for (f, &a) in self.faces.iter().zip(&face_areas) {
            for &v in f {
                vertex_areas[v] += a / 3.0;
            }
        }
        Ok(Self {
            vertices,
            faces: self.faces.clone(),
            edges: self.edges.clone(),
            face_areas,
            vertex_areas,
            neighbors: self.neighbors.clone(),
            vertex_faces: self.vertex_faces.clone(),
        })
    }

    /// Scales the mesh to unit surface area and moves its centroid to the
    /// origin.
    pub fn normalize_area(&self) -> Result<Self> {
        let area = self.total_area();
        if !(area > 0.0) || !area.is_finite() {
            return Err(Error::ZeroArea);
        }
        let scale = area.sqrt().recip();
        let center = self.centroid();
        let vertices = self
            .vertices
            .iter()
            .map(|p| (p - center) * scale)
            .collect();
        self.with_vertices(vertices)
    }

    /// Stable content digest of coordinates and connectivity.
    pub fn content_hash(&self) -> [u8; 32] {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update((self.vertices.len() as u64).to_le_bytes());
        for p in &self.vertices {
            for c in p.iter() {
                h.update(c.to_le_bytes());
            }
        }
        h.update((self.faces.len() as u64).to_le_bytes());
        for f in &self.faces {
            for &v in f {
                h.update((v as u64).to_le_bytes());
            }
        }
        h.finalize().into()
    }
}

pub fn normalize_area(mesh: &TriMesh) -> Result<TriMesh> {
    mesh.normalize_area()
}

pub(crate) fn triangle_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}
