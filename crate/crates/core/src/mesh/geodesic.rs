//! Approximate geodesic distances by Dijkstra on the edge graph augmented
//! with unfolded one-ring shortcuts.
//!
//! For every interior edge `(a, b)` with opposite vertices `c` and `d`, the
//! two triangles are unfolded into the plane and `c`-`d` is connected with
//! the straight-line length, provided the segment crosses the shared edge.
//! Shortcuts never underestimate the polyhedral distance across that quad.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{TriMesh, Vec3};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicField {
    pub source_vertex: usize,
    pub distances: Vec<f64>,
}

/// Weighted adjacency used by every geodesic query on a mesh.
#[derive(Debug, Clone)]
pub struct GeodesicGraph {
    adjacency: Vec<Vec<(usize, f64)>>,
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem {
    dist: f64,
    vertex: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, then vertex index
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn opposite(face: &[usize; 3], a: usize, b: usize) -> usize {
    *face
        .iter()
        .find(|&&v| v != a && v != b)
        .expect("triangle has three distinct vertices")
}

/// Planar coordinates of `p` in the frame with `a` at the origin and `b` on
/// the positive x-axis.
fn unfold(a: &Vec3, b: &Vec3, p: &Vec3) -> (f64, f64) {
    let ex = (b - a).normalize();
    let ap = p - a;
    let x = ap.dot(&ex);
    let y = (ap - ex * x).norm();
    (x, y)
}

impl GeodesicGraph {
    pub fn new(mesh: &TriMesh) -> Self {
        let n = mesh.num_vertices();
        let verts = mesh.vertices();
        let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for e in mesh.edges() {
            let [a, b] = e.v;
            let len = (verts[a] - verts[b]).norm();
            adjacency[a].push((b, len));
            adjacency[b].push((a, len));
        }
        let faces = mesh.faces();
        for e in mesh.edges().iter().filter(|e| e.is_interior()) {
            let [a, b] = e.v;
            let c = opposite(&faces[e.faces[0]], a, b);
            let d = opposite(&faces[e.faces[1]], a, b);
            if c == d {
                continue;
            }
            let len_ab = (verts[b] - verts[a]).norm();
            let (cx, cy) = unfold(&verts[a], &verts[b], &verts[c]);
            let (dx, dy) = unfold(&verts[a], &verts[b], &verts[d]);
            let dy = -dy;
            if cy - dy <= 0.0 {
                continue;
            }
            // x-coordinate where segment c-d meets the line through a, b
            let t = cy / (cy - dy);
            let x_cross = cx + t * (dx - cx);
            if x_cross < 0.0 || x_cross > len_ab {
                continue;
            }
            let len = ((cx - dx).powi(2) + (cy - dy).powi(2)).sqrt();
            adjacency[c].push((d, len));
            adjacency[d].push((c, len));
        }
        Self { adjacency }
    }

    pub fn num_vertices(&self) -> usize {
        self.adjacency.len()
    }

    /// Single-source distances; errors if some vertex is unreachable.
    pub fn distances_from(&self, source: usize) -> Result<GeodesicField> {
        let (distances, _) = self.multi_source(&[source])?;
        Ok(GeodesicField {
            source_vertex: source,
            distances,
        })
    }

    /// Distances to the nearest of several sources, together with the index
    /// (into `sources`) of that nearest source. Ties go to the lower index.
    pub fn multi_source(&self, sources: &[usize]) -> Result<(Vec<f64>, Vec<usize>)> {
        let n = self.adjacency.len();
        for &s in sources {
            if s >= n {
                return Err(Error::InvalidVertex { index: s, count: n });
            }
        }
        let mut dist = vec![f64::INFINITY; n];
        let mut label = vec![usize::MAX; n];
        let mut heap = BinaryHeap::new();
        for (i, &s) in sources.iter().enumerate() {
            if dist[s] > 0.0 {
                dist[s] = 0.0;
                label[s] = i;
                heap.push(HeapItem {
                    dist: 0.0,
                    vertex: s,
                });
            }
        }
        while let Some(HeapItem { dist: d, vertex: u }) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(w, len) in &self.adjacency[u] {
                let nd = d + len;
                if nd < dist[w] || (nd == dist[w] && label[u] < label[w]) {
                    let improved = nd < dist[w];
                    dist[w] = nd;
                    label[w] = label[u];
                    if improved {
                        heap.push(HeapItem {
                            dist: nd,
                            vertex: w,
                        });
                    }
                }
            }
        }
        if let Some(v) = dist.iter().position(|d| !d.is_finite()) {
            return Err(Error::Disconnected(v));
        }
        Ok((dist, label))
    }
}

/// Geodesic distances from one vertex. Builds the graph on every call; use
/// [`GeodesicGraph`] directly for repeated queries.
pub fn geodesic_from(mesh: &TriMesh, source: usize) -> Result<GeodesicField> {
    if source >= mesh.num_vertices() {
        return Err(Error::InvalidVertex {
            index: source,
            count: mesh.num_vertices(),
        });
    }
    GeodesicGraph::new(mesh).distances_from(source)
}

/// Nearest-source distances and labels for several sources.
pub fn geodesic_from_many(mesh: &TriMesh, sources: &[usize]) -> Result<(Vec<f64>, Vec<usize>)> {
    GeodesicGraph::new(mesh).multi_source(sources)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;
    use std::f64::consts::PI;

    #[test]
    fn source_is_zero() {
        let m = shapes::icosphere(2, 1.0);
        let g = geodesic_from(&m, 17).unwrap();
        assert_eq!(g.distances[17], 0.0);
        assert!(g.distances.iter().all(|d| d.is_finite() && *d >= 0.0));
    }

    #[test]
    fn collinear_strip_path() {
        // 3 unit cells in a row: bottom row vertices 0..=3 are collinear
        let m = shapes::grid(3, 1, 1.0);
        let g = geodesic_from(&m, 0).unwrap();
        assert!((g.distances[3] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn flat_grid_shortcuts_are_exact_for_diagonals() {
        // across one cell the diagonal is an edge; across a 2x1 block the
        // shortcut recovers the straight line sqrt(5)
        let m = shapes::grid(2, 1, 1.0);
        let g = geodesic_from(&m, 0).unwrap();
        assert!((g.distances[5] - 5f64.sqrt()).abs() < 1e-12, "{}", g.distances[5]);
    }

    #[test]
    fn antipodal_icosphere() {
        let r = 0.7;
        let m = shapes::icosphere(3, r);
        let src = 0;
        let anti = m
            .vertices()
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1 + m.vertex(src))
                    .norm()
                    .total_cmp(&(b.1 + m.vertex(src)).norm())
            })
            .unwrap()
            .0;
        let g = geodesic_from(&m, src).unwrap();
        let d = g.distances[anti];
        assert!(d >= 0.9 * PI * r && d <= 1.05 * PI * r, "{d} vs {}", PI * r);
    }

    #[test]
    fn symmetric_distances() {
        let m = shapes::asymmetric_blob(2);
        let graph = GeodesicGraph::new(&m);
        let a = graph.distances_from(3).unwrap();
        let b = graph.distances_from(101).unwrap();
        assert!((a.distances[101] - b.distances[3]).abs() < 1e-9);
    }

    #[test]
    fn disconnected_rejected() {
        let v = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(5.0, 0.0, 0.0),
            Vec3::new(6.0, 0.0, 0.0),
            Vec3::new(5.0, 1.0, 0.0),
        ];
        let m = TriMesh::new(v, vec![[0, 1, 2], [3, 4, 5]]).unwrap();
        assert!(matches!(geodesic_from(&m, 0), Err(Error::Disconnected(3))));
    }

    #[test]
    fn voronoi_labels_partition() {
        let m = shapes::icosphere(2, 1.0);
        let (d, l) = geodesic_from_many(&m, &[0, 3]).unwrap();
        assert_eq!(l[0], 0);
        assert_eq!(l[3], 1);
        assert_eq!(d[0], 0.0);
        assert!(l.iter().all(|&x| x < 2));
    }
}
