use criterion::{black_box, criterion_group, criterion_main, Criterion};

use herglotz_core::matrix::{hermitian_eigen, psd_factor, ComplexMatrix};
use herglotz_core::rng::SplitMix64;
use herglotz_core::synthesis::{
    find_decomposition, herglotz_targets, synthesize_herglotz, SampleSet, SolverOptions,
};
use herglotz_core::testfn::{quotient_map, Point, TestFamily};
use herglotz_core::Complex64;

fn hermitian_eigen_64(c: &mut Criterion) {
    let mut rng = SplitMix64::new(1);
    let m = rng.psd(64, 64);
    c.bench_function("hermitian_eigen 64x64", |b| {
        b.iter(|| hermitian_eigen(black_box(&m)))
    });
}

fn psd_factor_rank8(c: &mut Criterion) {
    let mut rng = SplitMix64::new(2);
    let m = rng.psd(48, 8);
    c.bench_function("psd_factor 48x48 rank 8", |b| {
        b.iter(|| psd_factor(black_box(&m), 1e-10).unwrap())
    });
}

fn mobius_samples(n: usize) -> SampleSet {
    let mut rng = SplitMix64::new(3);
    let mut points = vec![Point::disc(Complex64::new(0.0, 0.0))];
    while points.len() < n {
        let z = rng.next_in_disc(0.6);
        if points.iter().all(|p| (p.coords()[0] - z).norm() > 1e-3) {
            points.push(Point::disc(z));
        }
    }
    let values = points
        .iter()
        .map(|p| {
            let z = p.coords()[0];
            ComplexMatrix::scalar((Complex64::new(1.0, 0.0) + z) / (Complex64::new(1.0, 0.0) - z))
        })
        .collect();
    SampleSet::new(TestFamily::Disc, points, values).unwrap()
}

fn decompose_disc(c: &mut Criterion) {
    let samples = mobius_samples(8);
    let targets = herglotz_targets(&samples.values);
    c.bench_function("decompose disc 8 points", |b| {
        b.iter(|| {
            find_decomposition(
                black_box(&targets),
                &samples.family,
                &samples.points,
                &SolverOptions::default(),
            )
            .unwrap()
        })
    });
}

fn synthesize_disc(c: &mut Criterion) {
    let samples = mobius_samples(6);
    c.bench_function("synthesize disc 6 points", |b| {
        b.iter(|| synthesize_herglotz(black_box(&samples), &SolverOptions::default()).unwrap())
    });
}

fn bidisc_test_values(c: &mut Criterion) {
    let family = TestFamily::SymmetrizedBidisc { n_alpha: 64 };
    let x = quotient_map(1, 1, Complex64::new(0.4, 0.2), Complex64::new(-0.3, 0.5)).unwrap();
    c.bench_function("evaluate_tests symmetrized bidisc 64 alphas", |b| {
        b.iter(|| family.evaluate_tests(black_box(&x)).unwrap())
    });
}

criterion_group!(
    benches,
    hermitian_eigen_64,
    psd_factor_rank8,
    decompose_disc,
    synthesize_disc,
    bidisc_test_values
);
criterion_main!(benches);
