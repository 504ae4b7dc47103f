use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use splatsched::visibility::{build_access_matrix, zorder_group, AccessOptions, Granularity};
use splatsched::{CullingMode, Ownership};
use splatsched_bench::{aerial, BATCH, GPUS_PER_MACHINE, MACHINES};

fn visibility(c: &mut Criterion) {
    let dataset = aerial(100_000, 128);
    c.bench_function("zorder_group_100k", |b| {
        b.iter(|| zorder_group(black_box(&dataset.cloud), 1024).unwrap())
    });

    let grouped = zorder_group(&dataset.cloud, 1024).unwrap();
    let n_gpus = MACHINES * GPUS_PER_MACHINE;
    let n = dataset.cloud.len();
    // contiguous Z-order blocks per GPU
    let owner = (0..n).map(|i| (i * n_gpus / n) as u32).collect();
    let ownership = Ownership::new(owner, n_gpus).unwrap();
    let batch = &dataset.views[..BATCH];
    let mut group = c.benchmark_group("access_matrix_batch16_p2");
    for (name, granularity) in [("exact", Granularity::Exact), ("group_approx", Granularity::GroupApprox)] {
        let opts = AccessOptions {
            granularity,
            ..AccessOptions::new(2, CullingMode::Spatial)
        };
        group.bench_function(name, |b| {
            b.iter(|| build_access_matrix(black_box(&grouped), &ownership, batch, &opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, visibility);
criterion_main!(benches);
