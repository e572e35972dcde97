//! Deterministic linear algebra kernels.
//!
//! Every reduction in this module accumulates strictly left to right. The
//! solvers built on top of it are sensitive to rounding order, so the
//! reference path never reassociates sums (no SIMD lanes, no pairwise
//! splitting, no threads).

mod csr;
pub mod market;
pub mod model;
mod precond;

pub use csr::{LinearOperator, SparseMatrix};
pub use market::{parse_matrix_market, read_matrix_market, write_matrix_market, ParseError};
pub use model::{build_model_problem, haar_orthogonal, model_eigenvalues, ModelProblemSpec};
pub use precond::Preconditioner;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid CSR structure: {0}")]
    InvalidStructure(String),
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("Jacobi preconditioner needs a positive diagonal, found A[{index},{index}] = {value}")]
    NonPositiveDiagonal { index: usize, value: f64 },
    #[error("invalid model problem parameters: {0}")]
    InvalidModel(String),
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<(), LinalgError> {
    if expected == found {
        Ok(())
    } else {
        Err(LinalgError::DimensionMismatch { expected, found })
    }
}

/// Inner product with sequential accumulation.
///
/// Panics if the lengths differ.
#[inline]
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "dot: length mismatch");
    let mut acc = 0.0;
    for (a, b) in x.iter().zip(y) {
        acc += a * b;
    }
    acc
}

#[inline]
pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    assert_eq!(x.len(), y.len(), "axpy: length mismatch");
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `y = x + beta * y`
#[inline]
pub fn xpby(x: &[f64], beta: f64, y: &mut [f64]) {
    assert_eq!(x.len(), y.len(), "xpby: length mismatch");
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi = xi + beta * *yi;
    }
}

/// `out = x - y`
#[inline]
pub fn sub_into(x: &[f64], y: &[f64], out: &mut [f64]) {
    assert_eq!(x.len(), y.len(), "sub: length mismatch");
    assert_eq!(x.len(), out.len(), "sub: length mismatch");
    for ((o, a), b) in out.iter_mut().zip(x).zip(y) {
        *o = a - b;
    }
}

/// Energy norm `sqrt(<x, Ax>)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ANorm {
    pub value: f64,
    /// Set when `<x, Ax>` came out slightly negative from roundoff and was
    /// clamped to zero.
    pub clamped: bool,
}

pub fn a_norm<A: LinearOperator + ?Sized>(a: &A, x: &[f64]) -> Result<ANorm, LinalgError> {
    check_len(a.dim(), x.len())?;
    let mut ax = vec![0.0; x.len()];
    a.apply(x, &mut ax);
    let q = dot(x, &ax);
    Ok(if q < 0.0 { ANorm { value: 0.0, clamped: true } } else { ANorm { value: q.sqrt(), clamped: false } })
}
