use std::hint::black_box;

use affinedim_core::{
    generate_cloud, level_sum, product_spectrum, AffineIFS, KdTree, MapFamily, Matrix, MeasureSpec, TranslationDraw,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_word(d: usize, len: usize) -> Vec<Matrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    (0..len)
        .map(|_| {
            let data = (0..d * d).map(|k| 0.5 * ((k % (d + 1) == 0) as u8 as f64 + 0.3 * rng.random_range(-1.0..1.0))).collect();
            Matrix::new(d, data).unwrap()
        })
        .collect()
}

fn product_spectra(c: &mut Criterion) {
    let mut group = c.benchmark_group("product_spectrum");
    for d in [2, 4] {
        let word = random_word(d, 1000);
        group.bench_with_input(BenchmarkId::new("len1000", d), &word, |b, w| b.iter(|| product_spectrum(black_box(w)).unwrap()));
    }
    group.finish();
}

fn level_sums(c: &mut Criterion) {
    let ifs = AffineIFS::new(random_word(2, 3)).unwrap();
    c.bench_function("level_sum/3maps_level8", |b| b.iter(|| level_sum(&ifs, black_box(1.2), 8).unwrap()));
    let lattice = AffineIFS::from_family(MapFamily::LogSquaredLattice { n0: 100 }, 1_000_000).unwrap();
    c.bench_function("level_sum/lattice_1e6", |b| b.iter(|| level_sum(&lattice, black_box(1.6), 1).unwrap()));
}

fn ball_counts(c: &mut Criterion) {
    let ifs = AffineIFS::new(vec![Matrix::diagonal(&[0.45, 0.2]).unwrap(), Matrix::diagonal(&[0.2, 0.45]).unwrap()]).unwrap();
    let mu = MeasureSpec::uniform(2).unwrap();
    let draw = TranslationDraw::Random { dim: 2, seed: 3 };
    let cloud = generate_cloud(&ifs, &mu, &draw, 100_000, 60, 5).unwrap();
    let tree = KdTree::build(2, &cloud.points);
    let radii: Vec<f64> = (0..12).map(|k| 1e-3 * 1.5f64.powi(k)).collect();
    c.bench_function("kdtree/build_1e5", |b| b.iter(|| KdTree::build(2, black_box(&cloud.points))));
    c.bench_function("kdtree/count_256_centers", |b| {
        b.iter(|| (0..256).map(|i| tree.count_within(cloud.point(i * 300), &radii)[11]).sum::<usize>())
    });
    c.bench_function("cloud/1e5_depth60", |b| b.iter(|| generate_cloud(&ifs, &mu, &draw, 100_000, 60, 5).unwrap()));
}

criterion_group! {
    name = kernels;
    config = Criterion::default().sample_size(20);
    targets = product_spectra, level_sums, ball_counts
}
criterion_main!(kernels);
