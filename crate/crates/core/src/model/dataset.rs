use crate::error::{Error, Result};

/// Design matrix `X` (n×p, stored column-major) and response vector `y`.
///
/// Construction rejects all-zero columns; the comparison is exact, so columns
/// with tiny but nonzero entries are accepted.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    p: usize,
    cols: Vec<f64>,
    y: Vec<f64>,
}

impl Dataset {
    /// Builds a dataset from column-major storage of length `n * p`.
    pub fn from_column_major(n: usize, p: usize, cols: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::InvalidData(format!(
                "need at least one row and one column, got {n}x{p}"
            )));
        }
        Error::check_len(n * p, cols.len())?;
        Error::check_len(n, y.len())?;
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!("non-finite response at row {}", i + 1)));
        }
        if let Some(k) = cols.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite entry at row {}, column {}",
                k % n + 1,
                k / n + 1
            )));
        }
        let zero: Vec<usize> = (0..p)
            .filter(|&j| cols[j * n..(j + 1) * n].iter().all(|&v| v == 0.0))
            .map(|j| j + 1)
            .collect();
        if !zero.is_empty() {
            return Err(Error::ZeroColumns { columns: zero });
        }
        Ok(Self { n, p, cols, y })
    }

    /// Builds a dataset from observation rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], y: Vec<f64>) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut cols = vec![0.0; n * p];
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            Error::check_len(p, row.len())?;
            for (j, &v) in row.iter().enumerate() {
                cols[j * n + i] = v;
            }
        }
        Self::from_column_major(n, p, cols, y)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.cols[j * self.n..(j + 1) * self.n]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.cols[j * self.n + i]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.p).map(|j| self.get(i, j)).collect()
    }

    /// `X β`
    pub fn mul(&self, beta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                crate::linalg::axpy(b, self.column(j), &mut out);
            }
        }
        out
    }

    /// `Xᵀ v`
    pub fn mul_t(&self, v: &[f64]) -> Vec<f64> {
        (0..self.p).map(|j| crate::linalg::dot(self.column(j), v)).collect()
    }

    /// True when every label is exactly −1 or +1.
    pub fn has_sign_labels(&self) -> bool {
        self.y.iter().all(|&v| v == 1.0 || v == -1.0)
    }
}
