use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use detpro_core::lab::{entropy_concavity_scan, monotone_coupling};
use detpro_core::random::{random_contraction, random_ordered_pair};
use detpro_core::rng::rng_from_seed;
use detpro_core::full_distribution;

fn enumeration(c: &mut Criterion) {
    let mut group = c.benchmark_group("full_distribution");
    for n in [4, 8, 12] {
        let q = random_contraction(n, &mut rng_from_seed(n as u64));
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| b.iter(|| full_distribution(&q).unwrap()));
    }
    group.finish();
}

fn coupling(c: &mut Criterion) {
    let mut group = c.benchmark_group("monotone_coupling");
    for n in [4, 6, 8] {
        let (q1, q2) = random_ordered_pair(n, &mut rng_from_seed(7));
        let (d1, d2) = (full_distribution(&q1).unwrap(), full_distribution(&q2).unwrap());
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| b.iter(|| monotone_coupling(&d1, &d2).unwrap()));
    }
    group.finish();
}

fn scan(c: &mut Criterion) {
    c.bench_function("entropy_scan_dim4_100", |b| b.iter(|| entropy_concavity_scan(4, 0, 100, 1).unwrap()));
}

criterion_group!(benches, enumeration, coupling, scan);
criterion_main!(benches);
