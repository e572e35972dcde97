//! Shared fixtures for the benchmarks.

use pipecg_core::{build_model_problem, ModelProblemSpec, SparseMatrix};

/// 1D Laplacian with a diagonal shift, `n` rows, three entries per row.
pub fn shifted_laplacian(n: usize, shift: f64) -> SparseMatrix {
    let mut t = Vec::with_capacity(3 * n);
    for i in 0..n {
        t.push((i, i, 2.0 + shift));
        if i + 1 < n {
            t.push((i, i + 1, -1.0));
            t.push((i + 1, i, -1.0));
        }
    }
    SparseMatrix::from_triplets(n, t).expect("valid tridiagonal")
}

/// The dense model problem with the usual parameters and `x* = 1/√n`.
pub fn model(n: usize) -> (SparseMatrix, Vec<f64>) {
    let spec = ModelProblemSpec { n, rho: 0.8, kappa: 1e3, seed: 0 };
    let (a, _) = build_model_problem(&spec).expect("valid model");
    let x = vec![1.0 / (n as f64).sqrt(); n];
    let b = a.spmv(&x).expect("square");
    (a, b)
}

pub fn ramp(n: usize) -> Vec<f64> {
    (0..n).map(|i| ((i as f64) * 0.618).sin()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_well_formed() {
        let a = shifted_laplacian(5, 0.1);
        assert_eq!(a.nnz(), 13);
        assert!(a.check_symmetric().is_ok());
        let (m, b) = model(8);
        assert_eq!((m.n(), b.len()), (8, 8));
    }
}
