//! Lanczos view of a CG run.
//!
//! The residuals of CG are, up to sign and scale, the Lanczos vectors
//! `q_{k+1} = (−1)^k r_k / ‖r_k‖`. Eliminating `p` from the updates and using
//! `β_{k-1} = ‖r_{k-1}‖² / ‖r_{k-2}‖²` gives the symmetric recurrence
//!
//! ```text
//! A q_k ≈ (1/α_{k-1}) (‖r_k‖/‖r_{k-1}‖) q_{k+1}
//!       + (1/α_{k-1} + β_{k-1}/α_{k-2}) q_k
//!       + (1/α_{k-2}) (‖r_{k-1}‖/‖r_{k-2}‖) q_{k-1}
//! ```
//!
//! whose residual norm is reported here. It is zero in exact arithmetic and
//! picks up both a drifting `s ≈ A p` and a `β` inconsistent with the
//! residual norms.

use crate::linalg::{dot, norm2, LinearOperator, SparseMatrix};

/// Three consecutive residuals and the step scalars linking them. At k = 1
/// there is no `r_{k-2}` and the `q_{k-1}` and `β` terms vanish.
#[derive(Debug, Clone, Copy)]
pub struct LanczosWindow<'v> {
    pub r_km2: Option<&'v [f64]>,
    pub r_km1: &'v [f64],
    pub r_k: &'v [f64],
    pub alpha_km2: Option<f64>,
    pub alpha_km1: f64,
    pub beta_km1: f64,
}

/// Returns `None` when `r_{k-1}` or `r_{k-2}` is zero, or a coefficient is
/// not finite. A zero `r_k` is allowed.
pub fn lanczos_recurrence_residual<A: LinearOperator + ?Sized>(a: &A, w: &LanczosWindow<'_>) -> Option<f64> {
    let n = w.r_km1.len();
    let nrm1 = norm2(w.r_km1);
    if nrm1 == 0.0 {
        return None;
    }
    let q_k: Vec<f64> = w.r_km1.iter().map(|v| v / nrm1).collect();
    let mut aq = vec![0.0; n];
    a.apply(&q_k, &mut aq);

    // q_{k+1} and q_{k-1} carry the opposite sign of q_k
    let c_next = 1.0 / (w.alpha_km1 * nrm1);
    let (c_diag, prev) = match (w.r_km2, w.alpha_km2) {
        (Some(r2), Some(a2)) => {
            let nrm2 = norm2(r2);
            if nrm2 == 0.0 {
                return None;
            }
            let c_prev = nrm1 / (a2 * nrm2 * nrm2);
            (1.0 / w.alpha_km1 + w.beta_km1 / a2, Some((c_prev, r2)))
        }
        _ => (1.0 / w.alpha_km1, None),
    };
    if !(c_next.is_finite() && c_diag.is_finite() && prev.is_none_or(|(c, _)| c.is_finite())) {
        return None;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let mut v = aq[i] + c_next * w.r_k[i] - c_diag * q_k[i];
        if let Some((c_prev, r2)) = prev {
            v += c_prev * r2[i];
        }
        acc += v * v;
    }
    Some(acc.sqrt())
}

/// `|⟨q_k, q_{k+1}⟩|` from two consecutive residuals.
pub fn successive_orthogonality(r_prev: &[f64], r_cur: &[f64]) -> Option<f64> {
    let d = norm2(r_prev) * norm2(r_cur);
    (d > 0.0).then(|| (dot(r_prev, r_cur) / d).abs())
}

/// `D A D` for a diagonal `D`, applied without forming the product.
pub struct ScaledOperator<'a> {
    a: &'a SparseMatrix,
    d: &'a [f64],
}

impl<'a> ScaledOperator<'a> {
    pub fn new(a: &'a SparseMatrix, d: &'a [f64]) -> Self {
        assert_eq!(a.n(), d.len(), "scaling has the wrong length");
        Self { a, d }
    }
}

impl LinearOperator for ScaledOperator<'_> {
    fn dim(&self) -> usize {
        self.a.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let dx: Vec<f64> = x.iter().zip(self.d).map(|(x, d)| x * d).collect();
        self.a.apply(&dx, y);
        for (yi, d) in y.iter_mut().zip(self.d) {
            *yi *= d;
        }
    }
}
