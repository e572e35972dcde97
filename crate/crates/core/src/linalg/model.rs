//! Synthetic SPD test matrix with an exponentially clustered spectrum.
//!
//! The eigenvalues are
//!
//! ```text
//! λ_1 = 1/κ,  λ_n = 1,
//! λ_i = λ_1 + (i-1)/(n-1) · (λ_n - λ_1) · ρ^(n-i),   i = 2..n-1
//! ```
//!
//! and the eigenvectors are a Haar-distributed orthogonal matrix. Small ρ
//! pushes most eigenvalues toward λ_1 and leaves a few widely separated ones
//! at the top, which is what makes finite precision CG struggle.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{LinalgError, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelProblemSpec {
    pub n: usize,
    pub rho: f64,
    pub kappa: f64,
    pub seed: u64,
}

impl ModelProblemSpec {
    pub fn validate(&self) -> Result<(), LinalgError> {
        if self.n < 2 {
            return Err(LinalgError::InvalidModel(format!("n = {} but n >= 2 is required", self.n)));
        }
        if self.kappa.is_nan() || self.kappa <= 1.0 || !self.kappa.is_finite() {
            return Err(LinalgError::InvalidModel(format!("kappa = {} but kappa > 1 is required", self.kappa)));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(LinalgError::InvalidModel(format!("rho = {} but 0 < rho <= 1 is required", self.rho)));
        }
        Ok(())
    }

    /// `model_<n>_<rho*10>_<log10 kappa>`, e.g. `model_48_8_3`.
    pub fn name(&self) -> String {
        format!("model_{}_{}_{}", self.n, (self.rho * 10.0).round(), self.kappa.log10().round())
    }
}

/// Increasing eigenvalues of the model problem.
pub fn model_eigenvalues(spec: &ModelProblemSpec) -> Result<Vec<f64>, LinalgError> {
    spec.validate()?;
    let n = spec.n;
    let lo = 1.0 / spec.kappa;
    let hi = 1.0;
    let mut lambda = Vec::with_capacity(n);
    lambda.push(lo);
    for i in 2..n {
        let frac = (i - 1) as f64 / (n - 1) as f64;
        lambda.push(lo + frac * (hi - lo) * spec.rho.powi((n - i) as i32));
    }
    lambda.push(hi);
    Ok(lambda)
}

/// Haar-distributed orthogonal matrix (row-major): QR of a seeded standard
/// Gaussian matrix with the columns of Q flipped so that diag(R) > 0.
pub fn haar_orthogonal(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let gauss: Vec<f64> = (0..n * n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let g = DMatrix::from_row_slice(n, n, &gauss);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = q[(i, j)];
        }
    }
    out
}

/// Returns the dense operator `Q diag(λ) Qᵀ` (bit-exactly symmetric) and
/// its eigenvalues.
pub fn build_model_problem(spec: &ModelProblemSpec) -> Result<(SparseMatrix, Vec<f64>), LinalgError> {
    let lambda = model_eigenvalues(spec)?;
    let n = spec.n;
    let q = haar_orthogonal(n, spec.seed);
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += q[i * n + k] * lambda[k] * q[j * n + k];
            }
            a[i * n + j] = acc;
            a[j * n + i] = acc;
        }
    }
    Ok((SparseMatrix::from_dense(n, &a)?, lambda))
}
