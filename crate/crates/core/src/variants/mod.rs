//! Conjugate gradient variants behind one stepper interface.
//!
//! All seven variants are equivalent in exact arithmetic and differ in how
//! the inner products and matrix products of an iteration depend on each
//! other:
//!
//! | id        | method                                        | reductions | A passes |
//! |-----------|-----------------------------------------------|------------|----------|
//! | `HS`      | Hestenes–Stiefel                              | 2          | 1        |
//! | `CG`      | Chronopoulos–Gear                             | 1          | 1        |
//! | `M`       | Meurant (predict ν, recompute)                | 1          | 1        |
//! | `PR`      | predict-and-recompute                         | 1          | 1        |
//! | `GV`      | Ghysels–Vanroose pipelined                    | 1, overlapped | 1     |
//! | `PPRM`    | pipelined predict-and-recompute, Meurant ν    | 1, overlapped | 1 (block of 2) |
//! | `PPR`     | pipelined predict-and-recompute               | 1, overlapped | 1 (block of 2) |
//!
//! `M` and `PPRM` run on the `PR` / `PPR` steppers with
//! [`NuExpression::Meurant`]. Without a preconditioner every tilde vector
//! aliases its plain counterpart and `M⁻¹` is never applied.

mod steps;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{ConvergenceHistory, Probe, StagnationDetector};
use crate::linalg::{dot, LinearOperator, Preconditioner};

pub use steps::{step_cg_cg, step_gv, step_hs, step_pipe_pr, step_pr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VariantId {
    #[serde(rename = "HS")]
    Hs,
    #[serde(rename = "CG")]
    CgCg,
    #[serde(rename = "M")]
    M,
    #[serde(rename = "PR")]
    Pr,
    #[serde(rename = "GV")]
    Gv,
    #[serde(rename = "PPRM")]
    PipePrM,
    #[serde(rename = "PPR")]
    PipePr,
}

impl VariantId {
    pub const ALL: [VariantId; 7] = [
        VariantId::Hs,
        VariantId::CgCg,
        VariantId::M,
        VariantId::Pr,
        VariantId::Gv,
        VariantId::PipePrM,
        VariantId::PipePr,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            Self::Hs => "HS",
            Self::CgCg => "CG",
            Self::M => "M",
            Self::Pr => "PR",
            Self::Gv => "GV",
            Self::PipePrM => "PPRM",
            Self::PipePr => "PPR",
        }
    }

    pub fn long_name(self) -> &'static str {
        match self {
            Self::Hs => "HS-CG",
            Self::CgCg => "CG-CG",
            Self::M => "M-CG",
            Self::Pr => "PR-CG",
            Self::Gv => "GV-CG",
            Self::PipePrM => "pipe-PR-M-CG",
            Self::PipePr => "pipe-PR-CG",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Self::Hs => "Hestenes-Stiefel, two global reductions per iteration",
            Self::CgCg => "Chronopoulos-Gear, one reduction, recursive s",
            Self::M => "Meurant, predicted nu = -nu + alpha^2 gamma, recomputed",
            Self::Pr => "predict-and-recompute, predicted nu = nu - 2 alpha delta + alpha^2 gamma",
            Self::Gv => "Ghysels-Vanroose pipelined, reduction overlapped with A w",
            Self::PipePrM => "pipelined predict-and-recompute with the Meurant nu predictor",
            Self::PipePr => "pipelined predict-and-recompute, w recomputed alongside u",
        }
    }

    /// Predicts ν' and later recomputes ν.
    pub fn has_predictor(self) -> bool {
        matches!(self, Self::M | Self::Pr | Self::PipePrM | Self::PipePr)
    }

    /// Overlaps the matrix product with the reduction.
    pub fn is_pipelined(self) -> bool {
        matches!(self, Self::Gv | Self::PipePrM | Self::PipePr)
    }

    pub fn is_pipe_pr(self) -> bool {
        matches!(self, Self::PipePrM | Self::PipePr)
    }

    /// `s` maintained by recurrence rather than computed as `A p`.
    pub fn recurses_s(self) -> bool {
        matches!(self, Self::CgCg | Self::Gv | Self::PipePrM | Self::PipePr)
    }

    pub fn default_nu_expression(self) -> Option<NuExpression> {
        match self {
            Self::M | Self::PipePrM => Some(NuExpression::Meurant),
            Self::Pr | Self::PipePr => Some(NuExpression::Simplified),
            _ => None,
        }
    }

    /// Working vectors stored as `(unpreconditioned, extra when preconditioned)`.
    pub fn memory_vectors(self) -> (usize, usize) {
        match self {
            Self::Hs => (4, 1),
            Self::CgCg => (5, 1),
            Self::M | Self::Pr => (4, 2),
            Self::Gv => (7, 3),
            Self::PipePrM | Self::PipePr => (6, 4),
        }
    }
}

impl fmt::Display for VariantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("unknown variant `{0}`")]
pub struct UnknownVariant(String);

impl FromStr for VariantId {
    type Err = UnknownVariant;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Ok(match key.as_str() {
            "hs" | "hs-cg" => Self::Hs,
            "cg" | "cg-cg" => Self::CgCg,
            "m" | "m-cg" => Self::M,
            "pr" | "pr-cg" => Self::Pr,
            "gv" | "gv-cg" => Self::Gv,
            "pprm" | "pipe-pr-m" | "pipe-pr-m-cg" => Self::PipePrM,
            "ppr" | "pipe-pr" | "pipe-pr-cg" => Self::PipePr,
            _ => return Err(UnknownVariant(s.to_string())),
        })
    }
}

/// Formula used for the predicted `ν'_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NuExpression {
    /// `ν - α⟨r̃,s⟩ - α⟨s̃,r⟩ + α²γ`; needs one extra inner product.
    Expanded,
    /// `ν - 2αδ + α²γ`
    Simplified,
    /// `-ν + α²γ`
    Meurant,
}

/// Formula for `μ_k` in the Chronopoulos–Gear style variants.
///
/// `Unsimplified` is an experimental ablation: `μ = η + 2βζ + β²μ_{k-1}`
/// with `ζ = ⟨r̃_k, s_{k-1}⟩` folded into the same reduction. It is not a
/// published listing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MuExpression {
    #[default]
    Simplified,
    Unsimplified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VariantConfig {
    pub id: VariantId,
    /// Recompute `ν = ⟨r̃, r⟩` after predicting it (predictor variants).
    pub recompute_nu: bool,
    /// Recompute `w = A r̃` after predicting it (pipelined predict-and-recompute only).
    pub recompute_w: bool,
    pub nu_expression: Option<NuExpression>,
    pub mu_expression: MuExpression,
}

impl VariantConfig {
    pub fn new(id: VariantId) -> Self {
        Self {
            id,
            recompute_nu: true,
            recompute_w: true,
            nu_expression: id.default_nu_expression(),
            mu_expression: MuExpression::Simplified,
        }
    }

    pub fn without_nu_recompute(mut self) -> Self {
        self.recompute_nu = false;
        self
    }

    pub fn without_w_recompute(mut self) -> Self {
        self.recompute_w = false;
        self
    }

    pub fn with_nu_expression(mut self, e: NuExpression) -> Self {
        self.nu_expression = Some(e);
        self
    }

    pub fn with_mu_expression(mut self, e: MuExpression) -> Self {
        self.mu_expression = e;
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let id = self.id;
        if id.has_predictor() != self.nu_expression.is_some() {
            return Err(SolverError::InvalidConfig(format!(
                "a nu expression applies only to predictor variants, not {id}"
            )));
        }
        if !self.recompute_nu && !id.has_predictor() {
            return Err(SolverError::InvalidConfig(format!("{id} has no predicted nu to skip recomputing")));
        }
        if !self.recompute_w && !id.is_pipe_pr() {
            return Err(SolverError::InvalidConfig(format!("{id} has no predicted w to skip recomputing")));
        }
        if self.mu_expression == MuExpression::Unsimplified && !matches!(id, VariantId::CgCg | VariantId::Gv) {
            return Err(SolverError::InvalidConfig(format!("the mu expression flag does not apply to {id}")));
        }
        Ok(())
    }

    /// Short label that encodes every non-default flag, e.g. `PPR-norecw`.
    pub fn label(&self) -> String {
        let mut s = self.id.short_name().to_string();
        if self.nu_expression != self.id.default_nu_expression() {
            match self.nu_expression {
                Some(NuExpression::Expanded) => s.push_str("-nuexp"),
                Some(NuExpression::Simplified) => s.push_str("-nusimp"),
                Some(NuExpression::Meurant) => s.push_str("-numeur"),
                None => {}
            }
        }
        if !self.recompute_nu {
            s.push_str("-norecnu");
        }
        if !self.recompute_w {
            s.push_str("-norecw");
        }
        if self.mu_expression == MuExpression::Unsimplified {
            s.push_str("-muunsimp");
        }
        s
    }
}

impl FromStr for VariantConfig {
    type Err = SolverError;

    /// Parses labels produced by [`VariantConfig::label`].
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split('-');
        let head = parts.next().unwrap_or_default();
        // long names contain dashes themselves
        let (id, rest): (VariantId, Vec<&str>) = match head.parse::<VariantId>() {
            Ok(id) => (id, parts.collect()),
            Err(_) => match s.parse::<VariantId>() {
                Ok(id) => (id, Vec::new()),
                Err(e) => return Err(SolverError::InvalidConfig(e.to_string())),
            },
        };
        let mut cfg = VariantConfig::new(id);
        for flag in rest {
            cfg = match flag {
                "nuexp" => cfg.with_nu_expression(NuExpression::Expanded),
                "nusimp" => cfg.with_nu_expression(NuExpression::Simplified),
                "numeur" => cfg.with_nu_expression(NuExpression::Meurant),
                "norecnu" => cfg.without_nu_recompute(),
                "norecw" => cfg.without_w_recompute(),
                "muunsimp" => cfg.with_mu_expression(MuExpression::Unsimplified),
                other => return Err(SolverError::InvalidConfig(format!("unknown variant flag `{other}` in `{s}`"))),
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BreakdownReason {
    /// `ν = ⟨r̃, r⟩ ≤ 0`
    NonPositiveNu,
    /// predicted `ν' ≤ 0`
    NonPositivePredictedNu,
    /// `μ = ⟨p, s⟩ ≤ 0`
    NonPositiveMu,
    NonFinite,
}

impl fmt::Display for BreakdownReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::NonPositiveNu => "nu<=0",
            Self::NonPositivePredictedNu => "nu'<=0",
            Self::NonPositiveMu => "mu<=0",
            Self::NonFinite => "non-finite",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopCriterion {
    /// The updated residual is exactly zero.
    ZeroResidual,
    ErrorReduction,
    Stagnation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Running,
    Breakdown { k: usize, reason: BreakdownReason },
    MaxIterations,
    Converged(StopCriterion),
}

impl SolveStatus {
    pub fn is_running(&self) -> bool {
        matches!(self, Self::Running)
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Running => f.write_str("running"),
            Self::Breakdown { k, reason } => write!(f, "breakdown({reason}) at k={k}"),
            Self::MaxIterations => f.write_str("max-iterations"),
            Self::Converged(c) => write!(f, "converged({c:?})"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("dimension mismatch: operator is {expected}x{expected}, vector has length {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid variant configuration: {0}")]
    InvalidConfig(String),
    #[error("stop rule needs the exact solution, but none was supplied to the probe")]
    MissingExactSolution,
    #[error("preconditioner dimension does not match the operator")]
    PreconditionerMismatch,
}

/// Working vectors and scalars of one solve.
///
/// Optional vectors are only allocated when the variant (and preconditioning
/// mode) needs them; accessors such as [`SolverState::r_tilde`] fall back to
/// the plain vector when running unpreconditioned.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub config: VariantConfig,
    pub preconditioned: bool,
    pub status: SolveStatus,
    pub k: usize,

    pub x: Vec<f64>,
    pub r: Vec<f64>,
    pub p: Vec<f64>,
    pub s: Vec<f64>,
    pub r_t: Option<Vec<f64>>,
    pub s_t: Option<Vec<f64>>,
    pub w: Option<Vec<f64>>,
    pub w_t: Option<Vec<f64>>,
    pub u: Option<Vec<f64>>,
    pub u_t: Option<Vec<f64>>,
    pub t: Option<Vec<f64>>,

    /// Copy of the predicted `w'_k`, kept only when diagnostics ask for it.
    /// Not counted as working memory.
    pub w_pred: Option<Vec<f64>>,
    pub keep_w_prediction: bool,

    pub alpha: f64,
    pub beta: f64,
    pub nu: f64,
    pub nu_prime: Option<f64>,
    pub mu: f64,
    pub delta: f64,
    /// `⟨s̃, r⟩`, only for [`NuExpression::Expanded`]
    pub delta_hat: f64,
    pub gamma: f64,
    pub eta: f64,
}

impl SolverState {
    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn r_tilde(&self) -> &[f64] {
        self.r_t.as_deref().unwrap_or(&self.r)
    }

    pub fn s_tilde(&self) -> &[f64] {
        self.s_t.as_deref().unwrap_or(&self.s)
    }

    /// Count of allocated working vectors.
    pub fn working_vectors(&self) -> usize {
        4 + [&self.r_t, &self.s_t, &self.w, &self.w_t, &self.u, &self.u_t, &self.t]
            .iter()
            .filter(|v| v.is_some())
            .count()
    }

    fn terminate(&mut self, reason: BreakdownReason) {
        self.status = if self.r.iter().all(|&v| v == 0.0) {
            SolveStatus::Converged(StopCriterion::ZeroResidual)
        } else {
            SolveStatus::Breakdown { k: self.k, reason }
        };
    }

    /// Marks the state terminal unless `value > 0` and finite.
    fn require_positive(&mut self, value: f64, reason: BreakdownReason) -> bool {
        if value.is_nan() || value.is_infinite() {
            self.terminate(BreakdownReason::NonFinite);
            false
        } else if value <= 0.0 {
            self.terminate(reason);
            false
        } else {
            true
        }
    }

    fn require_finite(&mut self, values: &[f64]) -> bool {
        if values.iter().all(|v| v.is_finite()) {
            true
        } else {
            self.terminate(BreakdownReason::NonFinite);
            false
        }
    }
}

pub(crate) fn apply_m(m: &Preconditioner, x: &[f64], y: &mut Option<Vec<f64>>) {
    if let Some(y) = y.as_deref_mut() {
        m.apply(x, y);
    }
}

/// Shared initialization: `r₀ = b − A x₀`, `r̃₀ = M⁻¹ r₀`, `ν₀`, `p₀ = r̃₀`,
/// `s₀ = A p₀`, `α₀ = ν₀ / ⟨p₀, s₀⟩`, plus the auxiliary vectors and scalars
/// the variant needs.
///
/// A zero initial residual yields `Converged(ZeroResidual)`; a non-positive
/// `ν₀` or `μ₀` yields a breakdown status rather than an error.
pub fn initialize<A: LinearOperator + ?Sized>(
    config: VariantConfig,
    a: &A,
    m: &Preconditioner,
    b: &[f64],
    x0: &[f64],
) -> Result<SolverState, SolverError> {
    config.validate()?;
    let n = a.dim();
    for len in [b.len(), x0.len()] {
        if len != n {
            return Err(SolverError::DimensionMismatch { expected: n, found: len });
        }
    }
    if let Preconditioner::Jacobi { inv_diag } = m {
        if inv_diag.len() != n {
            return Err(SolverError::PreconditionerMismatch);
        }
    }
    let id = config.id;
    let pre = !m.is_identity();
    let alloc = |cond: bool| if cond { Some(vec![0.0; n]) } else { None };

    let x = x0.to_vec();
    let mut r = vec![0.0; n];
    a.apply(&x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut r_t = alloc(pre);
    apply_m(m, &r, &mut r_t);
    let rt: &[f64] = r_t.as_deref().unwrap_or(&r);
    let nu = dot(&r, rt);
    let p = rt.to_vec();
    let mut s = vec![0.0; n];
    a.apply(&p, &mut s);
    let mu = dot(&p, &s);

    let needs_s_t = id.has_predictor() || id.is_pipelined();
    let mut s_t = alloc(pre && needs_s_t);
    apply_m(m, &s, &mut s_t);
    let st: &[f64] = s_t.as_deref().unwrap_or(&s);

    let nu_expr = config.nu_expression;
    let (mut delta, mut delta_hat, mut gamma) = (0.0, 0.0, 0.0);
    if id.has_predictor() {
        gamma = dot(st, &s);
        if nu_expr != Some(NuExpression::Meurant) {
            delta = dot(rt, &s);
        }
        if nu_expr == Some(NuExpression::Expanded) {
            delta_hat = dot(st, &r);
        }
    }

    let mut w = alloc(id == VariantId::CgCg || id.is_pipelined());
    let mut w_t = alloc(pre && id.is_pipelined());
    let mut u = alloc(id.is_pipelined());
    let mut u_t = alloc(pre && id.is_pipe_pr());
    let t = alloc(id == VariantId::Gv);
    if id.is_pipelined() {
        if let Some(w) = w.as_deref_mut() {
            a.apply(rt, w);
        }
        if let (Some(w), Some(w_t)) = (w.as_deref(), w_t.as_deref_mut()) {
            m.apply(w, w_t);
        }
        if let Some(u) = u.as_deref_mut() {
            a.apply(st, u);
        }
        if let (Some(u), Some(u_t)) = (u.as_deref(), u_t.as_deref_mut()) {
            m.apply(u, u_t);
        }
    }

    let mut state = SolverState {
        config,
        preconditioned: pre,
        status: SolveStatus::Running,
        k: 0,
        x,
        r,
        p,
        s,
        r_t,
        s_t,
        w,
        w_t,
        u,
        u_t,
        t,
        w_pred: None,
        keep_w_prediction: false,
        alpha: f64::NAN,
        beta: f64::NAN,
        nu,
        nu_prime: None,
        mu,
        delta,
        delta_hat,
        gamma,
        eta: 0.0,
    };
    if state.require_positive(nu, BreakdownReason::NonPositiveNu)
        && state.require_positive(mu, BreakdownReason::NonPositiveMu)
    {
        state.alpha = nu / mu;
        state.require_finite(&[state.alpha, gamma, delta, delta_hat]);
    }
    Ok(state)
}

/// Advances one iteration with the stepper matching `state.config`.
/// Does nothing once the status is terminal.
pub fn step<A: LinearOperator + ?Sized>(state: &mut SolverState, a: &A, m: &Preconditioner) {
    if !state.status.is_running() {
        return;
    }
    match state.config.id {
        VariantId::Hs => step_hs(state, a, m),
        VariantId::CgCg => step_cg_cg(state, a, m),
        VariantId::M | VariantId::Pr => step_pr(state, a, m),
        VariantId::Gv => step_gv(state, a, m),
        VariantId::PipePrM | VariantId::PipePr => step_pipe_pr(state, a, m),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StopRule {
    /// Exactly this many iterations (capped by `max_iter`).
    FixedIterations(usize),
    /// Run until `max_iter`.
    MaxIterations,
    /// Stop at the first k with `‖e_k‖_A / ‖e_0‖_A < threshold`.
    ErrorReduction(f64),
    /// Stop once the true residual stops improving; see [`StagnationDetector`].
    Stagnation { window: usize, min_improvement: f64 },
}

/// Runs `config` from `x0` and returns the probed history.
///
/// Breakdown is reported through the final status of the history, with the
/// iteration at which it happened. The final iterate is always recorded,
/// whatever the probe cadence.
#[allow(clippy::too_many_arguments)]
pub fn run<A: LinearOperator + ?Sized>(
    config: VariantConfig,
    a: &A,
    m: &Preconditioner,
    b: &[f64],
    x0: &[f64],
    max_iter: usize,
    stop: StopRule,
    probe: &mut Probe<'_>,
) -> Result<ConvergenceHistory, SolverError> {
    if matches!(stop, StopRule::ErrorReduction(_)) && !probe.has_exact_solution() {
        return Err(SolverError::MissingExactSolution);
    }
    let limit = match stop {
        StopRule::FixedIterations(n) => n.min(max_iter),
        _ => max_iter,
    };
    let mut state = initialize(config, a, m, b, x0)?;
    state.keep_w_prediction = config.id.is_pipe_pr();
    let mut history = ConvergenceHistory::new(config.label(), m.name());
    let mut stagnation = match stop {
        StopRule::Stagnation { window, min_improvement } => Some(StagnationDetector::new(window, min_improvement)),
        _ => None,
    };

    let mut record = probe.observe(&state, true);
    loop {
        if let Some(rec) = record.take() {
            let err = rec.rel_err_a_norm;
            let res = rec.true_res_norm;
            history.records.push(rec);
            if state.status.is_running() {
                if let (StopRule::ErrorReduction(tol), Some(e)) = (stop, err) {
                    if e < tol {
                        state.status = SolveStatus::Converged(StopCriterion::ErrorReduction);
                    }
                }
                if let Some(det) = stagnation.as_mut() {
                    if det.push(res) {
                        state.status = SolveStatus::Converged(StopCriterion::Stagnation);
                    }
                }
            }
        }
        if !state.status.is_running() {
            break;
        }
        if state.k >= limit {
            state.status = SolveStatus::MaxIterations;
            break;
        }
        step(&mut state, a, m);
        let last = !state.status.is_running() || state.k >= limit;
        // stopping rules need a record every iteration
        let force = last || !matches!(stop, StopRule::FixedIterations(_) | StopRule::MaxIterations);
        record = probe.observe(&state, force);
    }
    history.status = state.status;
    Ok(history)
}
