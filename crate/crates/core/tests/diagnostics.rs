mod common;

use common::*;

use pipecg_core::diagnostics::{summarize, DiagnosticsError};
use pipecg_core::{
    initialize, probe, step, ConvergenceHistory, IterationRecord, Preconditioner, SolveStatus, SparseMatrix,
    VariantConfig, VariantId,
};

fn record(k: usize, err: f64) -> IterationRecord {
    IterationRecord {
        k,
        rel_err_a_norm: Some(err),
        true_res_norm: 1.0,
        upd_res_norm: 1.0,
        residual_gap_norm: 0.0,
        nu_gap: None,
        w_gap_norm: None,
        s_gap_norm: None,
        lanczos_res_norm: None,
        succ_orth: None,
        alpha: 1.0,
        beta: None,
        nu: 1.0,
        nu_prime: None,
    }
}

fn history(errs: impl IntoIterator<Item = f64>) -> ConvergenceHistory {
    let mut h = ConvergenceHistory::new("HS", "none");
    h.records = errs.into_iter().enumerate().map(|(k, e)| record(k, e)).collect();
    h.status = SolveStatus::MaxIterations;
    h
}

#[test]
fn geometric_error_sequence_crosses_at_21() {
    // 10^(-k/4) < 1e-5 first holds for k/4 > 5
    let h = history((0..40).map(|k| 10f64.powf(-(k as f64) / 4.0)));
    let s = summarize(&h).unwrap();
    assert_eq!(s.iters_to_1e5, Some(21));
    assert!((s.min_log10_err + 39.0 / 4.0).abs() < 1e-12);
}

#[test]
fn error_that_never_drops() {
    let h = history([1.0, 0.5, 0.2, 0.3]);
    let s = summarize(&h).unwrap();
    assert_eq!(s.iters_to_1e5, None);
    assert_eq!(s.min_log10_err, 0.2f64.log10());
    assert_eq!(summarize(&history([])), Err(DiagnosticsError::EmptyHistory));
}

#[test]
fn summary_is_a_function_of_records() {
    let (a, b, xs) = model(0);
    let m = Preconditioner::Identity;
    let h = solve(VariantConfig::new(VariantId::Pr), &a, &m, &b, &xs, 100);
    let mut copy = h.clone();
    copy.status = SolveStatus::Running;
    assert_eq!(h.summary().unwrap().iters_to_1e5, copy.summary().unwrap().iters_to_1e5);
    assert_eq!(h.summary().unwrap().min_log10_err, copy.summary().unwrap().min_log10_err);
}

#[test]
fn initial_residual_gap_is_tiny() {
    let (a, b, _) = model(5);
    let x0: Vec<f64> = (0..48).map(|i| (i as f64 * 0.37).cos()).collect();
    let eps = f64::EPSILON;
    let bound = 48.0 * eps * (norm(&b) + a.frobenius_norm() * norm(&x0));
    for m in [Preconditioner::Identity, Preconditioner::jacobi(&a).unwrap()] {
        for id in VariantId::ALL {
            let st = initialize(VariantConfig::new(id), &a, &m, &b, &x0).unwrap();
            let rec = probe(&st, &a, &m, &b, None).unwrap();
            assert!(rec.residual_gap_norm <= bound, "{id}: {:e} > {bound:e}", rec.residual_gap_norm);
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Residual gap through a dense row-major product with the same left to
/// right accumulation order as the sparse kernel.
fn dense_gap(a: &SparseMatrix, b: &[f64], x: &[f64], r: &[f64]) -> Vec<f64> {
    let n = a.n();
    let d = a.to_dense();
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..n {
                acc += d[i * n + j] * x[j];
            }
            (b[i] - acc) - r[i]
        })
        .collect()
}

#[test]
fn residual_gap_agrees_with_dense_path() {
    let (a, b, xs) = model(6);
    let m = Preconditioner::Identity;
    for id in [VariantId::Hs, VariantId::Gv, VariantId::PipePr] {
        let mut st = initialize(VariantConfig::new(id), &a, &m, &b, &[0.0; 48]).unwrap();
        for _ in 0..60 {
            step(&mut st, &a, &m);
            let rec = probe(&st, &a, &m, &b, Some(&xs)).unwrap();
            let gap = dense_gap(&a, &b, &st.x, &st.r);
            assert_eq!(rec.residual_gap_norm.to_bits(), norm(&gap).to_bits(), "{id} k={}", st.k);
        }
    }
}

#[test]
fn absent_columns_are_none_not_zero() {
    let (a, b, xs) = model(0);
    let m = Preconditioner::Identity;
    let h = solve(VariantConfig::new(VariantId::Hs), &a, &m, &b, &xs, 5);
    for r in &h.records {
        assert!(r.nu_gap.is_none() && r.w_gap_norm.is_none() && r.s_gap_norm.is_none() && r.nu_prime.is_none());
    }
    let h = solve(VariantConfig::new(VariantId::PipePr), &a, &m, &b, &xs, 5);
    assert!(h.records[1..].iter().all(|r| r.nu_gap.is_some() && r.w_gap_norm.is_some() && r.s_gap_norm.is_some()));
}

#[test]
fn hs_keeps_successive_residuals_nearly_orthogonal() {
    let (a, b, xs) = model(1);
    for m in [Preconditioner::Identity, Preconditioner::jacobi(&a).unwrap()] {
        let h = solve(VariantConfig::new(VariantId::Hs), &a, &m, &b, &xs, 120);
        let worst = h.records.iter().filter_map(|r| r.succ_orth).fold(0.0, f64::max);
        assert!(worst <= 1e-2, "{}: {worst:e}", m.name());
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn gv_violates_the_lanczos_recurrence_more_than_hs() {
    let (a, b, xs) = model(2);
    let m = Preconditioner::Identity;
    let take = |id| {
        let h = solve(VariantConfig::new(id), &a, &m, &b, &xs, 100);
        median(h.records.iter().filter_map(|r| r.lanczos_res_norm).collect())
    };
    let hs = take(VariantId::Hs);
    let gv = take(VariantId::Gv);
    let ppr = take(VariantId::PipePr);
    assert!(gv >= 10.0 * hs, "GV {gv:e} HS {hs:e}");
    assert!(gv >= 10.0 * ppr, "GV {gv:e} PPR {ppr:e}");
}

#[test]
fn recomputed_nu_gap_is_local_rounding() {
    let (a, b, xs) = model(0);
    let m = Preconditioner::Identity;
    let h = solve(VariantConfig::new(VariantId::Pr), &a, &m, &b, &xs, 150);
    let eps = f64::EPSILON;
    for w in h.records.windows(2) {
        let gap = w[1].nu_gap.unwrap().abs();
        // ν' is the difference of terms of size ν_{k-1}
        assert!(gap <= 1e3 * eps * w[0].nu, "k={}: {gap:e} vs ν_(k-1) {:e}", w[1].k, w[0].nu);
    }
}

#[test]
fn recomputed_w_gap_decays_with_the_residual() {
    // without recomputation the w' gap keeps the rounding made while the
    // residual was large; with it the gap follows the current residual
    let (a, b, xs) = model(1);
    let m = Preconditioner::Identity;
    let on = solve(VariantConfig::new(VariantId::PipePr), &a, &m, &b, &xs, 100);
    let off = solve(VariantConfig::new(VariantId::PipePr).without_w_recompute(), &a, &m, &b, &xs, 100);
    let tail = |h: &ConvergenceHistory| h.records[60..].iter().map(|r| r.w_gap_norm.unwrap()).fold(0.0, f64::max);
    assert!(tail(&on) <= 1e-6 * tail(&off), "on {:e} off {:e}", tail(&on), tail(&off));
    assert_eq!(on.records[1].w_gap_norm, off.records[1].w_gap_norm);
}

#[test]
fn w_gap_max_without_recompute_is_tenfold_larger() {
    let (a, b, xs) = model(0);
    let m = Preconditioner::Identity;
    let max_gap = |cfg: VariantConfig| {
        let h = solve(cfg, &a, &m, &b, &xs, 100);
        h.records.iter().filter_map(|r| r.w_gap_norm).fold(0.0, f64::max)
    };
    let on = max_gap(VariantConfig::new(VariantId::PipePr));
    let off = max_gap(VariantConfig::new(VariantId::PipePr).without_w_recompute());
    assert!(off >= 10.0 * on, "max gap with recompute {on:e}, without {off:e}");
}
