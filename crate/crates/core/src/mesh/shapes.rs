//! Procedural meshes used as fixtures by tests, benchmarks and the CLI demo.

use std::collections::HashMap;

use super::{TriMesh, Vec3};

/// Regular tetrahedron with unit edge length.
pub fn regular_tetrahedron() -> TriMesh {
    let s = 1.0 / (2.0 * 2f64.sqrt());
    let vertices = vec![
        Vec3::new(s, s, s),
        Vec3::new(s, -s, -s),
        Vec3::new(-s, s, -s),
        Vec3::new(-s, -s, s),
    ];
    let faces = vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]];
    TriMesh::new(vertices, faces).expect("tetrahedron is manifold")
}

/// Unit square in the xy-plane split along the (1,0)-(0,1) diagonal.
pub fn unit_square() -> TriMesh {
    let vertices = vec![
        Vec3::new(0.0, 0.0, 0.0),
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(0.0, 1.0, 0.0),
        Vec3::new(1.0, 1.0, 0.0),
    ];
    TriMesh::new(vertices, vec![[0, 1, 2], [1, 3, 2]]).expect("square is manifold")
}

/// Flat `nx` by `ny` grid of unit cells in the xy-plane, two triangles per cell.
pub fn grid(nx: usize, ny: usize, cell: f64) -> TriMesh {
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(Vec3::new(i as f64 * cell, j as f64 * cell, 0.0));
        }
    }
    let mut faces = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            faces.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    TriMesh::new(vertices, faces).expect("grid is manifold")
}

/// Icosahedron subdivided `level` times and projected to a sphere of the
/// given radius. Level 3 gives 642 vertices and 1280 faces.
pub fn icosphere(level: usize, radius: f64) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|p| Vec3::new(p[0], p[1], p[2]).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, vs: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoint.entry(key).or_insert_with(|| {
                vs.push(((vs[a] + vs[b]) * 0.5).normalize());
                vs.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let ab = mid(f[0], f[1], &mut vertices);
            let bc = mid(f[1], f[2], &mut vertices);
            let ca = mid(f[2], f[0], &mut vertices);
            next.push([f[0], ab, ca]);
            next.push([f[1], bc, ab]);
            next.push([f[2], ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    for v in &mut vertices {
        *v *= radius;
    }
    TriMesh::new(vertices, faces).expect("icosphere is manifold")
}

/// Icosphere scaled per axis.
pub fn ellipsoid(level: usize, radii: [f64; 3]) -> TriMesh {
    stretch(&icosphere(level, 1.0), radii)
}

/// Scales coordinates per axis, keeping connectivity (and hence vertex
/// identity, which makes the ground-truth correspondence the identity).
pub fn stretch(mesh: &TriMesh, factors: [f64; 3]) -> TriMesh {
    let vs = mesh
        .vertices()
        .iter()
        .map(|p| Vec3::new(p.x * factors[0], p.y * factors[1], p.z * factors[2]))
        .collect();
    mesh.with_vertices(vs).expect("same vertex count")
}

/// A radial bump: direction, amplitude and angular width.
#[derive(Debug, Clone, Copy)]
pub struct Bump {
    pub direction: [f64; 3],
    pub amplitude: f64,
    pub width: f64,
}

/// Five bumps of different height and width at irregular positions; the
/// resulting shape has no non-trivial symmetry.
pub const ASYMMETRIC_BUMPS: [Bump; 5] = [
    Bump { direction: [0.0, 0.0, 1.0], amplitude: 0.55, width: 0.35 },
    Bump { direction: [0.9, 0.1, -0.3], amplitude: 0.40, width: 0.30 },
    Bump { direction: [-0.5, 0.8, -0.2], amplitude: 0.30, width: 0.40 },
    Bump { direction: [-0.4, -0.7, 0.3], amplitude: 0.45, width: 0.28 },
    Bump { direction: [0.1, -0.3, -1.0], amplitude: 0.25, width: 0.45 },
];

/// Unit icosphere with smooth radial Gaussian bumps.
pub fn bumpy_sphere(level: usize, bumps: &[Bump]) -> TriMesh {
    let base = icosphere(level, 1.0);
    let dirs: Vec<(Vec3, f64, f64)> = bumps
        .iter()
        .map(|b| {
            let d = Vec3::new(b.direction[0], b.direction[1], b.direction[2]).normalize();
            (d, b.amplitude, b.width)
        })
        .collect();
    let vs = base
        .vertices()
        .iter()
        .map(|p| {
            let r: f64 = 1.0
                + dirs
                    .iter()
                    .map(|(d, a, w)| {
                        let dist2 = (p - d).norm_squared();
                        a * (-dist2 / (2.0 * w * w)).exp()
                    })
                    .sum::<f64>();
            p * r
        })
        .collect();
    base.with_vertices(vs).expect("same vertex count")
}

/// The default asymmetric fixture: `bumpy_sphere(level, &ASYMMETRIC_BUMPS)`.
pub fn asymmetric_blob(level: usize) -> TriMesh {
    bumpy_sphere(level, &ASYMMETRIC_BUMPS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_counts() {
        for (level, v, f) in [(0, 12, 20), (1, 42, 80), (2, 162, 320), (3, 642, 1280)] {
            let m = icosphere(level, 1.0);
            assert_eq!(m.num_vertices(), v);
            assert_eq!(m.num_faces(), f);
            assert_eq!(m.edges().len(), v + f - 2);
            assert!(m.is_closed());
        }
    }

    #[test]
    fn icosphere_on_sphere() {
        let m = icosphere(2, 2.5);
        assert!(m.vertices().iter().all(|p| (p.norm() - 2.5).abs() < 1e-12));
    }

    #[test]
    fn grid_counts() {
        let g = grid(3, 2, 1.0);
        assert_eq!(g.num_vertices(), 12);
        assert_eq!(g.num_faces(), 12);
        assert!((g.total_area() - 6.0).abs() < 1e-12);
    }
}
