use criterion::{criterion_group, criterion_main, Criterion};
use genmap::descriptors::{detect_landmarks, LandmarkParams};
use genmap::elastic::{EnergyParams, FitnessEvaluator};
use genmap::fmap::{solve_fmap, MapWeights};
use genmap::mesh::shapes;
use genmap::spectral::eigenbasis;
use genmap::ShapeData;
use std::hint::black_box;

fn bench_eigenbasis(c: &mut Criterion) {
    let mesh = shapes::icosphere(3, 1.0);
    let mut g = c.benchmark_group("eigenbasis");
    g.sample_size(10);
    g.bench_function("icosphere3_k60", |b| b.iter(|| eigenbasis(black_box(&mesh), 60).unwrap()));
    g.finish();
}

fn blob() -> (ShapeData, Vec<(usize, usize)>) {
    let mesh = shapes::asymmetric_blob(3).normalize_area().unwrap();
    let shape = ShapeData::new(mesh, 60, 30, None).unwrap();
    let lm = detect_landmarks(&shape.mesh, &shape.basis_t, &LandmarkParams::default()).unwrap();
    let pairs = lm.landmarks.iter().map(|l| (l.vertex, l.vertex)).collect();
    (shape, pairs)
}

fn bench_matching(c: &mut Criterion) {
    let (shape, pairs) = blob();
    c.bench_function("solve_fmap", |b| {
        b.iter(|| solve_fmap(black_box(&pairs), &shape.basis_t, &shape.basis_s, MapWeights::default()).unwrap())
    });
    c.bench_function("fitness_uncached", |b| {
        b.iter(|| {
            let ev = FitnessEvaluator::new(&shape, &shape, MapWeights::default(), EnergyParams::default());
            ev.evaluate(black_box(&pairs)).unwrap()
        })
    });
}

criterion_group!(benches, bench_eigenbasis, bench_matching);
criterion_main!(benches);
