use super::{check_len, LinalgError};

/// Square operator applied by the solvers.
///
/// `apply_pair` must give each output bit-identical to a separate `apply`
/// call; implementations are expected to read the operator only once.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    fn apply(&self, x: &[f64], y: &mut [f64]);

    fn apply_pair(&self, x1: &[f64], x2: &[f64], y1: &mut [f64], y2: &mut [f64]) {
        self.apply(x1, y1);
        self.apply(x2, y2);
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
    fn apply_pair(&self, x1: &[f64], x2: &[f64], y1: &mut [f64], y2: &mut [f64]) {
        (**self).apply_pair(x1, x2, y1, y2)
    }
}

/// Square matrix in compressed sparse row form.
///
/// Column indices are strictly increasing within each row. The solvers
/// assume the matrix is symmetric positive definite; [`SparseMatrix::check_symmetric`]
/// verifies the symmetric part bit-exactly. Dense operators (the model
/// problem) are stored here with every entry present.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn new(n: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>, values: Vec<f64>) -> Result<Self, LinalgError> {
        if row_ptr.len() != n + 1 {
            return Err(LinalgError::InvalidStructure(format!(
                "row_ptr has length {}, expected {}",
                row_ptr.len(),
                n + 1
            )));
        }
        if row_ptr[0] != 0 {
            return Err(LinalgError::InvalidStructure("row_ptr[0] != 0".into()));
        }
        if col_idx.len() != values.len() || row_ptr[n] != col_idx.len() {
            return Err(LinalgError::InvalidStructure(format!(
                "row_ptr[n] = {}, col_idx has {}, values has {}",
                row_ptr[n],
                col_idx.len(),
                values.len()
            )));
        }
        for i in 0..n {
            let (lo, hi) = (row_ptr[i], row_ptr[i + 1]);
            if lo > hi {
                return Err(LinalgError::InvalidStructure(format!("row_ptr decreases at row {i}")));
            }
            let row = &col_idx[lo..hi];
            if row.iter().any(|&j| j >= n) {
                return Err(LinalgError::InvalidStructure(format!("column index out of range in row {i}")));
            }
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(LinalgError::InvalidStructure(format!(
                    "column indices not strictly increasing in row {i}"
                )));
            }
        }
        Ok(Self { n, row_ptr, col_idx, values })
    }

    /// Builds from coordinate triplets. Duplicates are summed, then exact
    /// zeros are dropped.
    pub fn from_triplets<I>(n: usize, triplets: I) -> Result<Self, LinalgError>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut t: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        if let Some(&(i, j, _)) = t.iter().find(|&&(i, j, _)| i >= n || j >= n) {
            return Err(LinalgError::InvalidStructure(format!("entry ({i}, {j}) outside a {n}x{n} matrix")));
        }
        // stable sort keeps duplicates in input order, so their sum is
        // reproducible
        t.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(t.len());
        let mut values = Vec::with_capacity(t.len());
        let mut k = 0;
        while k < t.len() {
            let (i, j, mut v) = t[k];
            k += 1;
            while k < t.len() && t[k].0 == i && t[k].1 == j {
                v += t[k].2;
                k += 1;
            }
            if v != 0.0 {
                row_ptr[i + 1] += 1;
                col_idx.push(j);
                values.push(v);
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self::new(n, row_ptr, col_idx, values)
    }

    /// Stores every entry of a row-major dense matrix, zeros included.
    pub fn from_dense(n: usize, dense: &[f64]) -> Result<Self, LinalgError> {
        check_len(n * n, dense.len())?;
        let row_ptr = (0..=n).map(|i| i * n).collect();
        let col_idx = (0..n).flat_map(|_| 0..n).collect();
        Self::new(n, row_ptr, col_idx, dense.to_vec())
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self { n, row_ptr: (0..=n).collect(), col_idx: (0..n).collect(), values: d.to_vec() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterates `(row, col, value)` in storage order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.col_idx[k], self.values[k]))
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.col_idx[lo..hi].binary_search(&j) {
            Ok(p) => self.values[lo + p],
            Err(_) => 0.0,
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n * self.n];
        for (i, j, v) in self.triplets() {
            d[i * self.n + j] = v;
        }
        d
    }

    pub fn is_diagonal(&self) -> bool {
        self.triplets().all(|(i, j, _)| i == j)
    }

    /// Every stored `(i, j, v)` has a stored `(j, i, v)` with identical bits.
    pub fn check_symmetric(&self) -> Result<(), LinalgError> {
        for (i, j, v) in self.triplets() {
            let (lo, hi) = (self.row_ptr[j], self.row_ptr[j + 1]);
            let mirrored = self.col_idx[lo..hi].binary_search(&i).map(|p| self.values[lo + p]);
            match mirrored {
                Ok(w) if w.to_bits() == v.to_bits() => {}
                _ => return Err(LinalgError::NotSymmetric { row: i, col: j }),
            }
        }
        Ok(())
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        check_len(self.n, x.len())?;
        let mut y = vec![0.0; self.n];
        self.apply(x, &mut y);
        Ok(y)
    }

    /// `(A x1, A x2)` in one pass over the stored entries.
    pub fn block_spmv(&self, x1: &[f64], x2: &[f64]) -> Result<(Vec<f64>, Vec<f64>), LinalgError> {
        check_len(self.n, x1.len())?;
        check_len(self.n, x2.len())?;
        let mut y1 = vec![0.0; self.n];
        let mut y2 = vec![0.0; self.n];
        self.apply_pair(x1, x2, &mut y1, &mut y2);
        Ok((y1, y2))
    }
}

impl LinearOperator for SparseMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n, "spmv: input length mismatch");
        assert_eq!(y.len(), self.n, "spmv: output length mismatch");
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
    }

    fn apply_pair(&self, x1: &[f64], x2: &[f64], y1: &mut [f64], y2: &mut [f64]) {
        assert_eq!(x1.len(), self.n, "block spmv: input length mismatch");
        assert_eq!(x2.len(), self.n, "block spmv: input length mismatch");
        assert_eq!(y1.len(), self.n, "block spmv: output length mismatch");
        assert_eq!(y2.len(), self.n, "block spmv: output length mismatch");
        for i in 0..self.n {
            let mut acc1 = 0.0;
            let mut acc2 = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let v = self.values[k];
                let j = self.col_idx[k];
                acc1 += v * x1[j];
                acc2 += v * x2[j];
            }
            y1[i] = acc1;
            y2[i] = acc2;
        }
    }
}
