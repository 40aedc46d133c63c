//! Small dense column-major matrix used for transition matrices.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }

    /// Builds a matrix from row-major nested vectors.
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    /// Builds a matrix whose `j`-th column is `columns[j]`.
    pub fn from_columns(columns: &[Vec<T>]) -> Self {
        let c = columns.len();
        let r = columns.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for col in columns {
            assert_eq!(col.len(), r, "ragged columns");
            data.extend_from_slice(col);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[j * self.rows + i] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: T) {
        self.data[j * self.rows + i] = self.data[j * self.rows + i] + v;
    }

    pub fn column(&self, j: usize) -> &[T] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn column_sum(&self, j: usize) -> T {
        self.column(j).iter().copied().sum()
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols);
        let mut out = vec![T::zero(); self.rows];
        for (j, &vj) in v.iter().enumerate() {
            if vj == T::zero() {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.column(j)) {
                *o = *o + a * vj;
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let col = self.mul_vec(other.column(j));
            out.data[j * self.rows..(j + 1) * self.rows].copy_from_slice(&col);
        }
        out
    }

    /// Copies the block `rows × cols` starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        let mut out = Self::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                out.set(i, j, self.get(r0 + i, c0 + j));
            }
        }
        out
    }

    /// True when every entry strictly below the diagonal is exactly zero.
    pub fn is_upper_triangular(&self) -> bool {
        (0..self.cols).all(|j| ((j + 1)..self.rows).all(|i| self.get(i, j) == T::zero()))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == T::zero())
    }

    pub fn all_positive(&self) -> bool {
        self.data.iter().all(|&v| v > T::zero())
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> DenseMatrix<U> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Column-stochastic check: nonnegative entries and unit column sums.
    pub fn is_column_stochastic(&self, tol: f64) -> bool {
        self.data.iter().all(|&v| v >= T::zero() && v.is_finite())
            && (0..self.cols).all(|j| (self.column_sum(j).as_f64() - 1.0).abs() <= tol)
    }
}

/// Spectral radius of a square matrix.
///
/// Triangular matrices have their eigenvalues on the diagonal, so the radius
/// is read off directly. Otherwise power iteration runs until the Rayleigh
/// estimate changes by less than `rel_tol` (relative) or `max_iter` is hit.
pub fn spectral_radius<T: Scalar>(m: &DenseMatrix<T>, rel_tol: f64, max_iter: usize) -> T {
    assert!(m.is_square());
    let n = m.rows();
    if n == 0 {
        return T::zero();
    }
    if m.is_upper_triangular() || transpose(m).is_upper_triangular() {
        return m.diagonal().into_iter().map(T::abs).fold(T::zero(), T::max);
    }
    power_iteration(m, rel_tol, max_iter)
}

/// Dominant eigenvalue magnitude by plain power iteration, no shortcuts.
pub fn power_iteration<T: Scalar>(m: &DenseMatrix<T>, rel_tol: f64, max_iter: usize) -> T {
    let n = m.rows();
    let mut v = vec![T::one() / T::of(n as f64); n];
    let mut estimate = T::zero();
    for _ in 0..max_iter {
        let w = m.mul_vec(&v);
        let norm = w.iter().map(|x| x.abs()).fold(T::zero(), T::max);
        if norm == T::zero() {
            return T::zero();
        }
        let next: Vec<T> = w.iter().map(|&x| x / norm).collect();
        let prev = estimate;
        estimate = norm;
        v = next;
        if (estimate - prev).abs().as_f64() <= rel_tol * estimate.as_f64() {
            break;
        }
    }
    estimate
}

pub fn transpose<T: Scalar>(m: &DenseMatrix<T>) -> DenseMatrix<T> {
    let mut out = DenseMatrix::zeros(m.cols(), m.rows());
    for j in 0..m.cols() {
        for i in 0..m.rows() {
            out.set(j, i, m.get(i, j));
        }
    }
    out
}
