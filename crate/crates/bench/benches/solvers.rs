use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use wnc_bench::points;
use wnc_core::dentability::{build_dyadic_tree, dz_index, DerivationConfig};
use wnc_core::normed::{hull_distance, min_norm_point};
use wnc_core::profiles::{chain_value, uwn_profile, SearchConfig, SearchMode};
use wnc_core::sets::lp_basis;

fn solvers(c: &mut Criterion) {
    let mut g = c.benchmark_group("min_norm_point");
    for p in [1.0, 1.5, 2.0, f64::INFINITY] {
        let a = points(p, 4, 6, 1);
        g.bench_with_input(BenchmarkId::from_parameter(p), &a, |b, a| {
            b.iter(|| min_norm_point(&a.space, black_box(&a.points)).unwrap())
        });
    }
    g.finish();
    let a = points(3.0, 4, 6, 2);
    c.bench_function("hull_distance/lp3", |b| {
        b.iter(|| hull_distance(&a.space, black_box(&a.points[..3]), black_box(&a.points[3..])).unwrap())
    });
}

fn searches(c: &mut Criterion) {
    let cfg = SearchConfig::default();
    let basis = lp_basis(2.0, 6).unwrap();
    c.bench_function("uwn_profile/lp2_basis_6", |b| {
        b.iter(|| uwn_profile(black_box(&basis), 3, SearchMode::Exact, &cfg).unwrap())
    });
    let a = points(1.0, 3, 6, 3);
    c.bench_function("chain_value/lp1_n3", |b| {
        b.iter(|| chain_value(black_box(&a), 3, SearchMode::Exact, &cfg).unwrap())
    });
    let (space, tree) = build_dyadic_tree(3, 1.0).unwrap();
    let d = tree.to_point_set(space).unwrap();
    let dc = DerivationConfig::default();
    c.bench_function("dz_index/tree_h3", |b| b.iter(|| dz_index(black_box(&d), 0.49, &dc).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = solvers, searches
}
criterion_main!(benches);
