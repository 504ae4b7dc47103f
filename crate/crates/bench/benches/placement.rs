use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use splatsched::placement::{hierarchical_place, local_search, lsa_assign, HierarchicalConfig, SearchBudget};
use splatsched::CostCoefficients;
use splatsched_bench::{access_matrix, aerial, GPUS_PER_MACHINE, MACHINES};

fn placement(c: &mut Criterion) {
    let dataset = aerial(100_000, 128);
    let matrix = access_matrix(&dataset);
    let coeffs = CostCoefficients::balanced();
    let init = lsa_assign(&matrix).unwrap();

    c.bench_function("lsa_64x8", |b| b.iter(|| lsa_assign(black_box(&matrix)).unwrap()));
    c.bench_function("local_search_64x8", |b| {
        b.iter(|| local_search(black_box(&matrix), &init, &coeffs, &SearchBudget::default()).unwrap())
    });
    let cfg = HierarchicalConfig::new(MACHINES, GPUS_PER_MACHINE, coeffs);
    c.bench_function("hierarchical_64x8", |b| {
        b.iter(|| hierarchical_place(black_box(&matrix), &cfg).unwrap())
    });
}

criterion_group!(benches, placement);
criterion_main!(benches);
