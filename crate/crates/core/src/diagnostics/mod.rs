//! Convergence and stability measurements taken from solver states.
//!
//! Everything here is computed from first principles (fresh matrix products
//! and inner products), never from the scalars the solver tracks, so a
//! record shows how far a variant's recurrences have drifted from the
//! quantities they stand for.

mod lanczos;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{a_norm, dot, norm2, LinearOperator, Preconditioner, SparseMatrix};
use crate::variants::{SolveStatus, SolverState};

pub use lanczos::{lanczos_recurrence_residual, successive_orthogonality, LanczosWindow, ScaledOperator};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("history has no records")]
    EmptyHistory,
    #[error("history has no A-norm error measurements (no exact solution was supplied)")]
    MissingError,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// One probed iterate. Fields that do not apply to a variant, or that need
/// data the probe was not given, are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    /// `‖x* − x_k‖_A / ‖x* − x_0‖_A`
    pub rel_err_a_norm: Option<f64>,
    /// `‖b − A x_k‖`
    pub true_res_norm: f64,
    /// `‖r_k‖` of the recursively updated residual
    pub upd_res_norm: f64,
    /// `‖(b − A x_k) − r_k‖`
    pub residual_gap_norm: f64,
    /// `⟨M⁻¹ r_k, r_k⟩ − ν'_k`, predictor variants only
    pub nu_gap: Option<f64>,
    /// `‖A r̃_k − w'_k‖`, pipelined variants only
    pub w_gap_norm: Option<f64>,
    /// `‖A p_k − s_k‖`, variants with a recursively updated `s`
    pub s_gap_norm: Option<f64>,
    pub lanczos_res_norm: Option<f64>,
    pub succ_orth: Option<f64>,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub nu: f64,
    pub nu_prime: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceHistory {
    pub variant: String,
    pub problem: String,
    pub preconditioner: String,
    pub records: Vec<IterationRecord>,
    pub status: SolveStatus,
}

impl ConvergenceHistory {
    pub fn new(variant: impl Into<String>, preconditioner: impl Into<String>) -> Self {
        Self {
            variant: variant.into(),
            problem: String::new(),
            preconditioner: preconditioner.into(),
            records: Vec::new(),
            status: SolveStatus::Running,
        }
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn summary(&self) -> Result<Summary, DiagnosticsError> {
        summarize(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    /// First recorded k with relative A-norm error below 1e-5.
    pub iters_to_1e5: Option<usize>,
    /// Minimum of `log10(rel_err_a_norm)` over the records.
    pub min_log10_err: f64,
    pub status: SolveStatus,
}

pub const SUMMARY_THRESHOLD: f64 = 1e-5;

pub fn summarize(history: &ConvergenceHistory) -> Result<Summary, DiagnosticsError> {
    if history.records.is_empty() {
        return Err(DiagnosticsError::EmptyHistory);
    }
    let mut iters = None;
    let mut min_log = f64::INFINITY;
    let mut any = false;
    for rec in &history.records {
        let Some(e) = rec.rel_err_a_norm else { continue };
        any = true;
        if iters.is_none() && e < SUMMARY_THRESHOLD {
            iters = Some(rec.k);
        }
        min_log = min_log.min(e.log10());
    }
    if !any {
        return Err(DiagnosticsError::MissingError);
    }
    Ok(Summary { iters_to_1e5: iters, min_log10_err: min_log, status: history.status })
}

/// Flags stagnation once the best residual of the last `window` entries fails
/// to beat the best residual before them by a relative `min_improvement`.
#[derive(Debug, Clone)]
pub struct StagnationDetector {
    window: usize,
    min_improvement: f64,
    seen: Vec<f64>,
    best_before: f64,
}

impl StagnationDetector {
    pub fn new(window: usize, min_improvement: f64) -> Self {
        Self { window: window.max(1), min_improvement, seen: Vec::new(), best_before: f64::INFINITY }
    }

    /// Adds the next residual norm and reports whether the run has stagnated.
    pub fn push(&mut self, res: f64) -> bool {
        self.seen.push(res);
        let n = self.seen.len();
        if n <= self.window {
            return false;
        }
        self.best_before = self.best_before.min(self.seen[n - self.window - 1]);
        let best_recent = self.seen[n - self.window..].iter().copied().fold(f64::INFINITY, f64::min);
        best_recent >= (1.0 - self.min_improvement) * self.best_before
    }
}

/// Stateless measurements of one iterate. The Lanczos quantities need the
/// previous iterates and are left `None`; see [`Probe`].
pub fn probe(
    state: &SolverState,
    a: &SparseMatrix,
    m: &Preconditioner,
    b: &[f64],
    x_star: Option<&[f64]>,
) -> Result<IterationRecord, DiagnosticsError> {
    let n = a.n();
    for len in [state.n(), b.len()].into_iter().chain(x_star.map(<[f64]>::len)) {
        if len != n {
            return Err(DiagnosticsError::DimensionMismatch { expected: n, found: len });
        }
    }
    let id = state.config.id;
    let mut tmp = vec![0.0; n];

    let rel_err_a_norm = x_star.map(|xs| {
        let e: Vec<f64> = xs.iter().zip(&state.x).map(|(s, x)| s - x).collect();
        a_norm(a, &e).map(|v| v.value).unwrap_or(f64::NAN)
    });

    a.apply(&state.x, &mut tmp);
    let true_res: Vec<f64> = b.iter().zip(&tmp).map(|(bi, ax)| bi - ax).collect();
    let gap: Vec<f64> = true_res.iter().zip(&state.r).map(|(t, r)| t - r).collect();

    let nu_gap = match (id.has_predictor(), state.nu_prime) {
        (true, Some(nu_prime)) => {
            m.apply(&state.r, &mut tmp);
            Some(dot(&tmp, &state.r) - nu_prime)
        }
        _ => None,
    };

    let w_gap_norm = if id.is_pipelined() {
        let w = state.w_pred.as_deref().filter(|_| state.k > 0).or(state.w.as_deref());
        w.map(|w| {
            a.apply(state.r_tilde(), &mut tmp);
            diff_norm(&tmp, w)
        })
    } else {
        None
    };

    let s_gap_norm = if id.recurses_s() {
        a.apply(&state.p, &mut tmp);
        Some(diff_norm(&tmp, &state.s))
    } else {
        None
    };

    Ok(IterationRecord {
        k: state.k,
        rel_err_a_norm,
        true_res_norm: norm2(&true_res),
        upd_res_norm: norm2(&state.r),
        residual_gap_norm: norm2(&gap),
        nu_gap,
        w_gap_norm,
        s_gap_norm,
        lanczos_res_norm: None,
        succ_orth: None,
        alpha: state.alpha,
        beta: (state.k > 0).then_some(state.beta),
        nu: state.nu,
        nu_prime: state.nu_prime,
    })
}

fn diff_norm(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone)]
struct WindowEntry {
    k: usize,
    /// residual mapped onto the symmetrically preconditioned system
    r_hat: Vec<f64>,
    alpha: f64,
    beta: f64,
}

/// Stateful probe that keeps the last two residuals so it can report the
/// Lanczos recurrence residual and successive orthogonality.
///
/// [`Probe::observe`] must see every iterate for those two columns to be
/// filled; full records are only produced every `cadence` iterations (or
/// when forced) because they cost fresh matrix products.
///
/// With a Jacobi preconditioner the residuals are scaled by `M^{-1/2}` and
/// the recurrence is checked against `M^{-1/2} A M^{-1/2}`, which is the
/// operator the preconditioned iteration implicitly runs Lanczos on.
pub struct Probe<'a> {
    a: &'a SparseMatrix,
    m: &'a Preconditioner,
    b: &'a [f64],
    x_star: Option<&'a [f64]>,
    cadence: usize,
    scale: Vec<f64>,
    e0: Option<f64>,
    window: VecDeque<WindowEntry>,
}

impl<'a> Probe<'a> {
    pub fn new(a: &'a SparseMatrix, m: &'a Preconditioner, b: &'a [f64], x_star: Option<&'a [f64]>) -> Self {
        Self { a, m, b, x_star, cadence: 1, scale: m.sqrt_diag(a.n()), e0: None, window: VecDeque::with_capacity(3) }
    }

    pub fn with_cadence(mut self, cadence: usize) -> Self {
        self.cadence = cadence.max(1);
        self
    }

    pub fn has_exact_solution(&self) -> bool {
        self.x_star.is_some()
    }

    /// Updates the Lanczos window and, on cadence or when `force` is set,
    /// returns a full record. The first observed state fixes `‖e_0‖_A`.
    pub fn observe(&mut self, state: &SolverState, force: bool) -> Option<IterationRecord> {
        let r_hat: Vec<f64> = state.r.iter().zip(&self.scale).map(|(r, d)| r * d).collect();
        if self.window.back().is_some_and(|e| e.k + 1 != state.k) {
            self.window.clear();
        }
        self.window.push_back(WindowEntry { k: state.k, r_hat, alpha: state.alpha, beta: state.beta });
        if self.window.len() > 3 {
            self.window.pop_front();
        }

        let first = self.e0.is_none();
        if !(force || first || state.k.is_multiple_of(self.cadence)) {
            return None;
        }
        let mut rec = probe(state, self.a, self.m, self.b, self.x_star).ok()?;
        if let Some(e) = rec.rel_err_a_norm {
            let e0 = *self.e0.get_or_insert(e);
            rec.rel_err_a_norm = Some(if e0 > 0.0 { e / e0 } else { 0.0 });
        } else if first {
            self.e0 = Some(f64::NAN);
        }

        let len = self.window.len();
        if len >= 2 {
            let cur = &self.window[len - 1];
            let prev = &self.window[len - 2];
            let prev2 = (len == 3).then(|| &self.window[0]);
            let win = LanczosWindow {
                r_km2: prev2.map(|e| e.r_hat.as_slice()),
                r_km1: &prev.r_hat,
                r_k: &cur.r_hat,
                alpha_km2: prev2.map(|e| e.alpha),
                alpha_km1: prev.alpha,
                beta_km1: prev.beta,
            };
            let op = ScaledOperator::new(self.a, &self.scale);
            rec.lanczos_res_norm = lanczos_recurrence_residual(&op, &win);
            rec.succ_orth = successive_orthogonality(&prev.r_hat, &cur.r_hat);
        }
        Some(rec)
    }
}
