use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use pipecg_bench::{model, shifted_laplacian};
use pipecg_core::{initialize, run, step, Preconditioner, Probe, StopRule, VariantConfig, VariantId};

/// Cost of one iteration of each variant on a large sparse system.
fn one_step(c: &mut Criterion) {
    let n = 50_000;
    let a = shifted_laplacian(n, 1e-3);
    let b = vec![1.0; n];
    let x0 = vec![0.0; n];
    let m = Preconditioner::jacobi(&a).unwrap();
    let mut g = c.benchmark_group("step_50k_jacobi");
    for id in VariantId::ALL {
        let mut st = initialize(VariantConfig::new(id), &a, &m, &b, &x0).unwrap();
        for _ in 0..5 {
            step(&mut st, &a, &m);
        }
        g.bench_function(id.short_name(), |bch| {
            bch.iter_batched_ref(|| st.clone(), |s| step(black_box(s), &a, &m), BatchSize::LargeInput)
        });
    }
    g.finish();
}

/// Whole solve with full diagnostics on the model problem.
fn probed_run(c: &mut Criterion) {
    let (a, b) = model(48);
    let xs = vec![1.0 / 48f64.sqrt(); 48];
    let m = Preconditioner::Identity;
    let mut g = c.benchmark_group("model_48_probed_run");
    for id in [VariantId::Hs, VariantId::Gv, VariantId::PipePr] {
        g.bench_function(id.short_name(), |bch| {
            bch.iter(|| {
                let mut probe = Probe::new(&a, &m, &b, Some(&xs));
                run(VariantConfig::new(id), &a, &m, &b, &[0.0; 48], 150, StopRule::FixedIterations(150), &mut probe)
                    .unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, one_step, probed_run);
criterion_main!(benches);
