use genmap::fmap::*;
use genmap::mesh::shapes;
use genmap::spectral::{eigenbasis, SpectralBasis};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense least squares over vec(C): one residual row per landmark pair and
/// column, one per Laplacian entry. Solved through the normal equations.
fn brute_force(
    pairs: &[(usize, usize)],
    bt: &SpectralBasis,
    bs: &SpectralBasis,
    alpha: f64,
    beta: f64,
) -> DMatrix<f64> {
    let (kt, ks) = (bt.k(), bs.k());
    let unknowns = kt * ks;
    let rows = pairs.len() * ks + kt * ks;
    let mut a = DMatrix::<f64>::zeros(rows, unknowns);
    let mut y = DVector::<f64>::zeros(rows);
    let mut r = 0;
    for &(i, j) in pairs {
        for b in 0..ks {
            for t in 0..kt {
                a[(r, b * kt + t)] = beta.sqrt() * bt.eigenfunctions[(i, t)];
            }
            y[r] = beta.sqrt() * bs.eigenfunctions[(j, b)];
            r += 1;
        }
    }
    for b in 0..ks {
        for t in 0..kt {
            a[(r, b * kt + t)] = alpha.sqrt() * (bt.eigenvalues[t] - bs.eigenvalues[b]);
            r += 1;
        }
    }
    let normal = a.transpose() * &a;
    let rhs = a.transpose() * y;
    let x = normal.lu().solve(&rhs).expect("nonsingular");
    DMatrix::from_column_slice(kt, ks, x.as_slice())
}

fn small_bases() -> (SpectralBasis, SpectralBasis) {
    let m1 = shapes::asymmetric_blob(1).normalize_area().unwrap();
    let m2 = shapes::ellipsoid(1, [1.0, 0.8, 1.3]).normalize_area().unwrap();
    (
        eigenbasis(&m1, 12).unwrap(),
        eigenbasis(&m2, 6).unwrap(),
    )
}

#[test]
fn per_column_solve_matches_vectorized_oracle() {
    let (bt, bs) = small_bases();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let pairs: Vec<(usize, usize)> = (0..5)
            .map(|_| (rng.gen_range(0..bt.n()), rng.gen_range(0..bs.n())))
            .collect();
        let w = MapWeights::default();
        let c = solve_fmap(&pairs, &bt, &bs, w).unwrap();
        let oracle = brute_force(&pairs, &bt, &bs, w.alpha, w.beta);
        let err = (&c.matrix - &oracle).norm();
        assert!(err < 1e-8, "frobenius error {err}");
    }
}

#[test]
fn minimizer_beats_random_perturbations() {
    let (bt, bs) = small_bases();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pairs: Vec<(usize, usize)> = (0..8).map(|k| (k * 5, k * 4 + 1)).collect();
    let w = MapWeights::default();
    let c = solve_fmap(&pairs, &bt, &bs, w).unwrap();
    let e0 = map_energy(&c, &pairs, &bt, &bs, w);
    for _ in 0..100 {
        let noise = DMatrix::from_fn(bt.k(), bs.k(), |_, _| rng.gen_range(-1.0..1.0));
        let perturbed = FunctionalMap::new(&c.matrix + noise * 1e-3);
        assert!(e0 <= map_energy(&perturbed, &pairs, &bt, &bs, w));
    }
}

#[test]
fn dense_landmarks_recover_identity_as_alpha_vanishes() {
    let m = shapes::icosphere(3, 1.0).normalize_area().unwrap();
    let bt = eigenbasis(&m, 60).unwrap();
    let bs = bt.truncated(30).unwrap();
    let pairs: Vec<(usize, usize)> = (0..m.num_vertices()).step_by(3).map(|v| (v, v)).collect();
    let c = solve_fmap(&pairs, &bt, &bs, MapWeights { alpha: 1e-9, beta: 100.0 }).unwrap();
    let err = (&c.matrix - DMatrix::<f64>::identity(60, 30)).amax();
    assert!(err < 1e-3, "{err}");
}

#[test]
fn vertexmap_to_fmap_matches_dense_product() {
    let m1 = shapes::asymmetric_blob(1).normalize_area().unwrap();
    let m2 = shapes::ellipsoid(1, [1.0, 0.8, 1.3]).normalize_area().unwrap();
    let bt = eigenbasis(&m1, 12).unwrap();
    let bs = eigenbasis(&m2, 6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = VertexMap {
        assignment: (0..m1.num_vertices()).map(|_| rng.gen_range(0..m2.num_vertices())).collect(),
    };
    let mut g = DMatrix::<f64>::zeros(m1.num_vertices(), m2.num_vertices());
    for (i, &j) in p.assignment.iter().enumerate() {
        g[(i, j)] = 1.0;
    }
    let oracle = &bt.pseudo_inverse * g * &bs.eigenfunctions;
    let c = vertexmap_to_fmap(&p, &bt, &bs);
    assert!((c.matrix - oracle).amax() < 1e-10);
}

#[test]
fn nearest_neighbor_matches_linear_scan() {
    let m1 = shapes::asymmetric_blob(2).normalize_area().unwrap();
    let m2 = shapes::ellipsoid(2, [1.0, 0.8, 1.3]).normalize_area().unwrap();
    let bt = eigenbasis(&m1, 20).unwrap();
    let bs = eigenbasis(&m2, 10).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let c = FunctionalMap::new(DMatrix::from_fn(20, 10, |_, _| rng.gen_range(-1.0..1.0)));
    let target = PointTarget::new(&bs, m2.vertices());
    let y = image_points(&c, &bt, &target);
    let p = fmap_to_vertexmap(&c, &bt, &bs, m2.vertices());
    for i in 0..m1.num_vertices() {
        let mut best = 0;
        let mut bd = f64::INFINITY;
        for (j, x) in m2.vertices().iter().enumerate() {
            let d = (y[(i, 0)] - x.x).powi(2) + (y[(i, 1)] - x.y).powi(2) + (y[(i, 2)] - x.z).powi(2);
            if d < bd {
                bd = d;
                best = j;
            }
        }
        assert_eq!(p.assignment[i], best);
    }
}

#[test]
fn identity_self_map_survives_refinement() {
    let m = shapes::icosphere(3, 1.0).normalize_area().unwrap();
    let bt = eigenbasis(&m, 60).unwrap();
    let bs = bt.truncated(30).unwrap();
    let id = FunctionalMap::identity(60, 30);
    let p = fmap_to_vertexmap(&id, &bt, &bs, m.vertices());
    let hits = p.assignment.iter().enumerate().filter(|(i, &a)| *i == a).count();
    assert!(hits as f64 >= 0.95 * m.num_vertices() as f64, "{hits}");
    let (c, _) = refine(&id, &bt, &bs, &PointTarget::new(&bs, m.vertices()));
    let err = (&c.matrix - &id.matrix).norm();
    assert!(err < 0.05, "{err}");
}
