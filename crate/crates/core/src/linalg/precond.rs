use super::{check_len, LinalgError, SparseMatrix};

/// Positive definite preconditioner `M⁻¹`, applied as a map.
#[derive(Debug, Clone, PartialEq)]
pub enum Preconditioner {
    Identity,
    /// `inv_diag[i] = 1 / A[i,i]`
    Jacobi {
        inv_diag: Vec<f64>,
    },
}

impl Preconditioner {
    pub fn jacobi(a: &SparseMatrix) -> Result<Self, LinalgError> {
        let d = a.diag();
        if let Some((index, &value)) = d.iter().enumerate().find(|(_, &v)| v.is_nan() || v <= 0.0) {
            return Err(LinalgError::NonPositiveDiagonal { index, value });
        }
        Ok(Self::Jacobi { inv_diag: d.iter().map(|v| 1.0 / v).collect() })
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Self::Identity)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Identity => "none",
            Self::Jacobi { .. } => "jacobi",
        }
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), y.len(), "preconditioner: length mismatch");
        match self {
            Self::Identity => y.copy_from_slice(x),
            Self::Jacobi { inv_diag } => {
                assert_eq!(inv_diag.len(), x.len(), "preconditioner: dimension mismatch");
                for ((yi, xi), di) in y.iter_mut().zip(x).zip(inv_diag) {
                    *yi = di * xi;
                }
            }
        }
    }

    pub fn apply_vec(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if let Self::Jacobi { inv_diag } = self {
            check_len(inv_diag.len(), x.len())?;
        }
        let mut y = vec![0.0; x.len()];
        self.apply(x, &mut y);
        Ok(y)
    }

    /// `M^{-1/2}` as a diagonal, for mapping residuals of the preconditioned
    /// iteration onto the symmetrically preconditioned system.
    pub fn sqrt_diag(&self, n: usize) -> Vec<f64> {
        match self {
            Self::Identity => vec![1.0; n],
            Self::Jacobi { inv_diag } => inv_diag.iter().map(|d| d.sqrt()).collect(),
        }
    }
}
