use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

use pipecg_bench::{model, ramp, shifted_laplacian};
use pipecg_core::linalg::{axpy, dot};

fn spmv(c: &mut Criterion) {
    let mut g = c.benchmark_group("spmv");
    for n in [1_000usize, 100_000] {
        let a = shifted_laplacian(n, 1e-2);
        let x = ramp(n);
        let y = ramp(n).into_iter().rev().collect::<Vec<_>>();
        g.throughput(Throughput::Elements(a.nnz() as u64));
        g.bench_with_input(BenchmarkId::new("single", n), &n, |bch, _| bch.iter(|| a.spmv(black_box(&x)).unwrap()));
        g.bench_with_input(BenchmarkId::new("block_pair", n), &n, |bch, _| {
            bch.iter(|| a.block_spmv(black_box(&x), black_box(&y)).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("two_singles", n), &n, |bch, _| {
            bch.iter(|| (a.spmv(black_box(&x)).unwrap(), a.spmv(black_box(&y)).unwrap()))
        });
    }
    let (m, _) = model(480);
    let x = ramp(480);
    g.throughput(Throughput::Elements(m.nnz() as u64));
    g.bench_function("dense_model_480", |bch| bch.iter(|| m.spmv(black_box(&x)).unwrap()));
    g.finish();
}

fn vector_ops(c: &mut Criterion) {
    let n = 100_000;
    let x = ramp(n);
    let mut y = ramp(n);
    c.bench_function("dot_100k", |bch| bch.iter(|| dot(black_box(&x), black_box(&y))));
    c.bench_function("axpy_100k", |bch| bch.iter(|| axpy(black_box(1e-9), black_box(&x), &mut y)));
}

criterion_group!(benches, spmv, vector_ops);
criterion_main!(benches);
