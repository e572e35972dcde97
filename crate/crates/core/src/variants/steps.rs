//! One iteration of each variant.
//!
//! Every stepper follows the same shape: scalars that only depend on the
//! previous iteration, cheap vector updates, the (possibly predicted) ν check,
//! the matrix products, the inner products of the single reduction, and
//! finally `α_k = ν_k / μ_k`. When a scalar check fails the state is left
//! part-way through the iteration with a terminal status.

use super::{apply_m, BreakdownReason, MuExpression, NuExpression, SolverState};
use crate::linalg::{axpy, dot, xpby, LinearOperator, Preconditioner};

fn predict_nu(state: &SolverState) -> f64 {
    let (a, nu, d, dh, g) = (state.alpha, state.nu, state.delta, state.delta_hat, state.gamma);
    match state.config.nu_expression.unwrap_or(NuExpression::Simplified) {
        NuExpression::Simplified => nu - 2.0 * a * d + a * a * g,
        NuExpression::Expanded => nu - a * (d + dh) + a * a * g,
        NuExpression::Meurant => -nu + a * a * g,
    }
}

/// Inner products shared by the predict-and-recompute variants, taken after
/// `s` and `s̃` are current.
fn pr_reduction(state: &mut SolverState) -> f64 {
    let expr = state.config.nu_expression.unwrap_or(NuExpression::Simplified);
    let rt = state.r_tilde();
    let st = state.s_tilde();
    let mu = dot(&state.p, &state.s);
    let delta = if expr == NuExpression::Meurant { 0.0 } else { dot(rt, &state.s) };
    let gamma = dot(st, &state.s);
    let delta_hat = if expr == NuExpression::Expanded { dot(st, &state.r) } else { 0.0 };
    let nu = if state.config.recompute_nu { dot(rt, &state.r) } else { state.nu_prime.unwrap_or(state.nu) };
    state.mu = mu;
    state.delta = delta;
    state.gamma = gamma;
    state.delta_hat = delta_hat;
    nu
}

fn finish(state: &mut SolverState, nu: f64) {
    if state.require_positive(nu, BreakdownReason::NonPositiveNu)
        && state.require_positive(state.mu, BreakdownReason::NonPositiveMu)
    {
        state.nu = nu;
        state.alpha = nu / state.mu;
        let (a, g, d, dh, e) = (state.alpha, state.gamma, state.delta, state.delta_hat, state.eta);
        state.require_finite(&[a, g, d, dh, e]);
    }
}

/// Hestenes–Stiefel: `ν` and `μ` are two dependent reductions.
pub fn step_hs<A: LinearOperator + ?Sized>(state: &mut SolverState, a: &A, m: &Preconditioner) {
    let alpha = state.alpha;
    state.k += 1;
    axpy(alpha, &state.p, &mut state.x);
    axpy(-alpha, &state.s, &mut state.r);
    apply_m(m, &state.r, &mut state.r_t);
    let rt = state.r_t.as_deref().unwrap_or(&state.r);
    let nu = dot(rt, &state.r);
    if !state.require_positive(nu, BreakdownReason::NonPositiveNu) {
        return;
    }
    let beta = nu / state.nu;
    let rt = state.r_t.as_deref().unwrap_or(&state.r);
    xpby(rt, beta, &mut state.p);
    a.apply(&state.p, &mut state.s);
    state.beta = beta;
    state.mu = dot(&state.p, &state.s);
    finish(state, nu);
}

/// Chronopoulos–Gear: `w = A r̃` first, then `ν` and `η` in one reduction and
/// `s` by recurrence.
pub fn step_cg_cg<A: LinearOperator + ?Sized>(state: &mut SolverState, a: &A, m: &Preconditioner) {
    let alpha = state.alpha;
    state.k += 1;
    axpy(alpha, &state.p, &mut state.x);
    axpy(-alpha, &state.s, &mut state.r);
    apply_m(m, &state.r, &mut state.r_t);
    let w = state.w.as_mut().expect("CG-CG state carries w");
    let rt = state.r_t.as_deref().unwrap_or(&state.r);
    a.apply(rt, w);
    let nu = dot(rt, &state.r);
    let eta = dot(rt, w);
    let unsimplified = state.config.mu_expression == MuExpression::Unsimplified;
    let zeta = if unsimplified { dot(rt, &state.s) } else { 0.0 };
    if !state.require_positive(nu, BreakdownReason::NonPositiveNu) {
        return;
    }
    let beta = nu / state.nu;
    let mu = if unsimplified { eta + 2.0 * beta * zeta + beta * beta * state.mu } else { eta - (beta / alpha) * nu };
    let rt = state.r_t.as_deref().unwrap_or(&state.r);
    xpby(rt, beta, &mut state.p);
    xpby(state.w.as_deref().unwrap(), beta, &mut state.s);
    state.beta = beta;
    state.eta = eta;
    state.mu = mu;
    finish(state, nu);
}

/// Predict-and-recompute (and Meurant with [`NuExpression::Meurant`]).
///
/// `ν'` and `β` come from scalars of the previous iteration, so `A p` can be
/// applied before `⟨r̃, r⟩` is known; the fresh `ν` joins the same reduction
/// as `μ`, `δ`, `γ`.
pub fn step_pr<A: LinearOperator + ?Sized>(state: &mut SolverState, a: &A, m: &Preconditioner) {
    let alpha = state.alpha;
    let nu_prime = predict_nu(state);
    let beta = nu_prime / state.nu;
    state.k += 1;
    state.nu_prime = Some(nu_prime);
    state.beta = beta;
    axpy(alpha, &state.p, &mut state.x);
    axpy(-alpha, &state.s, &mut state.r);
    if let (Some(rt), Some(st)) = (state.r_t.as_deref_mut(), state.s_t.as_deref()) {
        axpy(-alpha, st, rt);
    }
    let rt = state.r_t.as_deref().unwrap_or(&state.r);
    xpby(rt, beta, &mut state.p);
    if !state.require_positive(nu_prime, BreakdownReason::NonPositivePredictedNu) {
        return;
    }
    a.apply(&state.p, &mut state.s);
    apply_m(m, &state.s, &mut state.s_t);
    let nu = pr_reduction(state);
    finish(state, nu);
}

/// Ghysels–Vanroose: `t = A w̃` overlaps the reduction for `ν` and `η`;
/// `s`, `s̃`, `u`, `w` are all carried by recurrence.
pub fn step_gv<A: LinearOperator + ?Sized>(state: &mut SolverState, a: &A, m: &Preconditioner) {
    let alpha = state.alpha;
    state.k += 1;
    axpy(alpha, &state.p, &mut state.x);
    axpy(-alpha, &state.s, &mut state.r);
    if let (Some(rt), Some(st)) = (state.r_t.as_deref_mut(), state.s_t.as_deref()) {
        axpy(-alpha, st, rt);
    }
    {
        let w = state.w.as_mut().expect("GV state carries w");
        let u = state.u.as_deref().expect("GV state carries u");
        axpy(-alpha, u, w);
    }
    let w = state.w.as_deref().unwrap();
    apply_m(m, w, &mut state.w_t);
    let wt = state.w_t.as_deref().unwrap_or(w);
    let rt = state.r_t.as_deref().unwrap_or(&state.r);
    let nu = dot(rt, &state.r);
    let eta = dot(rt, w);
    let unsimplified = state.config.mu_expression == MuExpression::Unsimplified;
    let zeta = if unsimplified { dot(rt, &state.s) } else { 0.0 };
    a.apply(wt, state.t.as_mut().expect("GV state carries t"));
    if !state.require_positive(nu, BreakdownReason::NonPositiveNu) {
        return;
    }
    let beta = nu / state.nu;
    let mu = if unsimplified { eta + 2.0 * beta * zeta + beta * beta * state.mu } else { eta - (beta / alpha) * nu };
    let rt = state.r_t.as_deref().unwrap_or(&state.r);
    xpby(rt, beta, &mut state.p);
    let w = state.w.as_deref().unwrap();
    xpby(w, beta, &mut state.s);
    if let (Some(st), Some(wt)) = (state.s_t.as_deref_mut(), state.w_t.as_deref()) {
        xpby(wt, beta, st);
    }
    xpby(state.t.as_deref().unwrap(), beta, state.u.as_mut().unwrap());
    state.beta = beta;
    state.eta = eta;
    state.mu = mu;
    finish(state, nu);
}

/// Pipelined predict-and-recompute. `w'` and `w̃'` are predicted to build `s`
/// and `s̃`; then `u = A s̃` and, unless disabled, the recomputed `w = A r̃`
/// go through the operator as one block.
pub fn step_pipe_pr<A: LinearOperator + ?Sized>(state: &mut SolverState, a: &A, m: &Preconditioner) {
    let alpha = state.alpha;
    let nu_prime = predict_nu(state);
    let beta = nu_prime / state.nu;
    state.k += 1;
    state.nu_prime = Some(nu_prime);
    state.beta = beta;
    axpy(alpha, &state.p, &mut state.x);
    axpy(-alpha, &state.s, &mut state.r);
    if let (Some(rt), Some(st)) = (state.r_t.as_deref_mut(), state.s_t.as_deref()) {
        axpy(-alpha, st, rt);
    }
    {
        let w = state.w.as_mut().expect("pipe-PR state carries w");
        axpy(-alpha, state.u.as_deref().expect("pipe-PR state carries u"), w);
    }
    if let (Some(wt), Some(ut)) = (state.w_t.as_deref_mut(), state.u_t.as_deref()) {
        axpy(-alpha, ut, wt);
    }
    let rt = state.r_t.as_deref().unwrap_or(&state.r);
    xpby(rt, beta, &mut state.p);
    let w = state.w.as_deref().unwrap();
    xpby(w, beta, &mut state.s);
    if let (Some(st), Some(wt)) = (state.s_t.as_deref_mut(), state.w_t.as_deref()) {
        xpby(wt, beta, st);
    }
    if state.keep_w_prediction {
        match state.w_pred.as_mut() {
            Some(buf) => buf.copy_from_slice(w),
            None => state.w_pred = Some(w.to_vec()),
        }
    }
    if !state.require_positive(nu_prime, BreakdownReason::NonPositivePredictedNu) {
        return;
    }
    let st = state.s_t.as_deref().unwrap_or(&state.s);
    let u = state.u.as_mut().unwrap();
    if state.config.recompute_w {
        let rt = state.r_t.as_deref().unwrap_or(&state.r);
        a.apply_pair(st, rt, u, state.w.as_mut().unwrap());
        apply_m(m, state.w.as_deref().unwrap(), &mut state.w_t);
    } else {
        a.apply(st, u);
    }
    apply_m(m, state.u.as_deref().unwrap(), &mut state.u_t);
    let nu = pr_reduction(state);
    finish(state, nu);
}
