//! Compressed sparse row storage for constraint Jacobians.

/// Row-major sparse matrix. Rows are appended in order; columns within a row
/// may repeat, in which case the entries add.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn new(n_cols: usize) -> Self {
        Self { n_cols, row_ptr: vec![0], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn with_capacity(n_cols: usize, rows: usize, nnz: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(rows + 1);
        row_ptr.push(0);
        Self { n_cols, row_ptr, col_idx: Vec::with_capacity(nnz), values: Vec::with_capacity(nnz) }
    }

    pub fn n_rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Appends one entry to the row currently being built.
    pub fn push(&mut self, col: usize, value: f64) {
        debug_assert!(col < self.n_cols, "column {col} out of range");
        self.col_idx.push(col);
        self.values.push(value);
    }

    /// Closes the current row.
    pub fn finish_row(&mut self) {
        self.row_ptr.push(self.values.len());
    }

    pub fn push_row(&mut self, entries: &[(usize, f64)]) {
        for &(c, v) in entries {
            self.push(c, v);
        }
        self.finish_row();
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.row(i).map(|(c, v)| v * x[c]).sum()).collect()
    }

    /// `out += Aᵀ w`
    pub fn tr_mul_acc(&self, w: &[f64], out: &mut [f64]) {
        for (i, &wi) in w.iter().enumerate() {
            if wi == 0.0 {
                continue;
            }
            for (c, v) in self.row(i) {
                out[c] += v * wi;
            }
        }
    }

    /// Scales row `i` by `rows[i]` and column `j` by `cols[j]` in place.
    pub fn scale(&mut self, rows: &[f64], cols: &[f64]) {
        for i in 0..self.n_rows() {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                self.values[k] *= rows[i] * cols[self.col_idx[k]];
            }
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n_cols]; self.n_rows()];
        for (i, row) in dense.iter_mut().enumerate() {
            for (c, v) in self.row(i) {
                row[c] += v;
            }
        }
        dense
    }
}
