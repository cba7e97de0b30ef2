//! Dense row-major `f64` matrices.
//!
//! Every kernel here uses a fixed summation order so that identical inputs
//! give bit-identical outputs on every run. In particular [`Matrix::matmul`]
//! accumulates each output entry over the shared index in ascending order.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MATMUL_BLOCK: usize = 256;
const TRANSPOSE_TILE: usize = 32;

#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Entrywise binary operation selector for [`Matrix::elementwise`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementwiseOp {
    Add,
    Sub,
    /// Hadamard product.
    Mul,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major data.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n_cols {
                return Err(Error::invalid(format!(
                    "row {i} has {} entries, expected {n_cols}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::from_vec(n_rows, n_cols, data)
    }

    /// A single-column matrix.
    pub fn column_vector(values: &[f64]) -> Result<Self> {
        Self::from_vec(values.len(), 1, values.to_vec())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        assert!(row < self.rows && col < self.cols, "index out of bounds");
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        assert!(row < self.rows && col < self.cols, "index out of bounds");
        self.data[row * self.cols + col] = value;
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    /// New matrix made of the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.cols) {
            return Err(Error::invalid(format!(
                "column {bad} out of range for {} columns",
                self.cols
            )));
        }
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for r in 0..self.rows {
            let row = self.row(r);
            data.extend(cols.iter().map(|&c| row[c]));
        }
        Self::from_vec(self.rows, cols.len(), data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Sum of all entries, accumulated in storage order.
    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Standard product `self · rhs`.
    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::shape("matmul", self.shape(), rhs.shape()));
        }
        let (m, k, n) = (self.rows, self.cols, rhs.cols);
        let mut out = vec![0.0; m * n];
        // i-k-j order within column blocks: each out[i][j] still sees k
        // ascending, the inner loop is contiguous in both `rhs` and `out`,
        // and every row of `rhs` is read once per block instead of once per
        // output row.
        for j0 in (0..n).step_by(MATMUL_BLOCK) {
            let j1 = (j0 + MATMUL_BLOCK).min(n);
            for kk in 0..k {
                let b_row = &rhs.data[kk * n + j0..kk * n + j1];
                for i in 0..m {
                    let a = self.data[i * k + kk];
                    let out_row = &mut out[i * n + j0..i * n + j1];
                    for (o, &b) in out_row.iter_mut().zip(b_row) {
                        *o += a * b;
                    }
                }
            }
        }
        Ok(Matrix {
            rows: m,
            cols: n,
            data: out,
        })
    }

    /// `self * rhs^T`, bitwise equal to `self.matmul(&rhs.transpose())`.
    ///
    pub fn matmul_transpose_rhs(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.cols {
            return Err(Error::shape("matmul_transpose_rhs", self.shape(), rhs.shape()));
        }
        self.matmul(&rhs.transpose())
    }

    pub fn transpose(&self) -> Matrix {
        let (m, n) = self.shape();
        let mut out = vec![0.0; m * n];
        // Square tiles keep both the reads and the strided writes in cache.
        for i0 in (0..m).step_by(TRANSPOSE_TILE) {
            let i1 = (i0 + TRANSPOSE_TILE).min(m);
            for j0 in (0..n).step_by(TRANSPOSE_TILE) {
                let j1 = (j0 + TRANSPOSE_TILE).min(n);
                for i in i0..i1 {
                    for j in j0..j1 {
                        out[j * m + i] = self.data[i * n + j];
                    }
                }
            }
        }
        Matrix {
            rows: n,
            cols: m,
            data: out,
        }
    }


    pub fn elementwise(&self, rhs: &Matrix, op: ElementwiseOp) -> Result<Matrix> {
        if self.shape() != rhs.shape() {
            let name = match op {
                ElementwiseOp::Add => "add",
                ElementwiseOp::Sub => "sub",
                ElementwiseOp::Mul => "mul",
            };
            return Err(Error::shape(name, self.shape(), rhs.shape()));
        }
        let f: fn(f64, f64) -> f64 = match op {
            ElementwiseOp::Add => |a, b| a + b,
            ElementwiseOp::Sub => |a, b| a - b,
            ElementwiseOp::Mul => |a, b| a * b,
        };
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, rhs: &Matrix) -> Result<Matrix> {
        self.elementwise(rhs, ElementwiseOp::Add)
    }

    pub fn sub(&self, rhs: &Matrix) -> Result<Matrix> {
        self.elementwise(rhs, ElementwiseOp::Sub)
    }

    pub fn hadamard(&self, rhs: &Matrix) -> Result<Matrix> {
        self.elementwise(rhs, ElementwiseOp::Mul)
    }

    /// Gradient step: returns `self - eta * grad`.
    pub fn sub_scaled(&self, grad: &Matrix, eta: f64) -> Result<Matrix> {
        let mut out = self.clone();
        out.sub_scaled_assign(grad, eta)?;
        Ok(out)
    }

    /// In-place form of [`Matrix::sub_scaled`].
    pub fn sub_scaled_assign(&mut self, grad: &Matrix, eta: f64) -> Result<()> {
        if self.shape() != grad.shape() {
            return Err(Error::shape("sub_scaled", self.shape(), grad.shape()));
        }
        if !eta.is_finite() {
            return Err(Error::invalid(format!("step size must be finite, got {eta}")));
        }
        for (w, &g) in self.data.iter_mut().zip(&grad.data) {
            *w -= eta * g;
        }
        Ok(())
    }

    /// Adds the column vector `v` to every column of `self`.
    pub fn add_col_broadcast(&self, v: &Matrix) -> Result<Matrix> {
        if v.cols != 1 || v.rows != self.rows {
            return Err(Error::shape("add_col_broadcast", self.shape(), v.shape()));
        }
        let mut out = self.clone();
        for (r, &b) in v.data.iter().enumerate() {
            for x in &mut out.data[r * self.cols..(r + 1) * self.cols] {
                *x += b;
            }
        }
        Ok(out)
    }

    /// Column vector of row sums, each accumulated left to right.
    pub fn row_sums(&self) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: 1,
            data: (0..self.rows).map(|r| self.row(r).iter().sum()).collect(),
        }
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows.min(6) {
            write!(f, "{:?}", &self.row(r)[..self.cols.min(8)])?;
            if self.cols > 8 {
                write!(f, "...")?;
            }
        }
        if self.rows > 6 {
            write!(f, "...")?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    /// Textbook triple loop, kept separate from the kernel under test.
    fn naive_matmul(a: &Matrix, b: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut s = 0.0;
                for k in 0..a.cols() {
                    s += a.get(i, k) * b.get(k, j);
                }
                out.set(i, j, s);
            }
        }
        out
    }

    #[test]
    fn matmul_identity() {
        let b = m(&[&[5.0, 6.0], &[7.0, 8.0]]);
        assert_eq!(Matrix::identity(2).matmul(&b).unwrap(), b);
    }

    #[test]
    fn matmul_small_cases() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = m(&[&[5.0, 6.0], &[7.0, 8.0]]);
        let expected = m(&[&[19.0, 22.0], &[43.0, 50.0]]);
        assert_eq!(naive_matmul(&a, &b), expected);
        assert_eq!(a.matmul(&b).unwrap(), expected);

        let row = m(&[&[1.0, 2.0]]);
        let col = m(&[&[3.0], &[4.0]]);
        assert_eq!(row.matmul(&col).unwrap(), m(&[&[11.0]]));
    }

    #[test]
    fn matmul_rejects_mismatch() {
        let a = Matrix::zeros(2, 3);
        let err = a.matmul(&Matrix::zeros(2, 3)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2x3"), "{msg}");
    }

    #[test]
    fn transpose_cases() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(a.transpose(), m(&[&[1.0, 3.0], &[2.0, 4.0]]));
        let one = m(&[&[-2.5]]);
        assert_eq!(one.transpose(), one);
        let r = m(&[&[1.0, 2.0, 3.0]]);
        assert_eq!(r.transpose().shape(), (3, 1));
    }

    #[test]
    fn elementwise_cases() {
        let a = m(&[&[1.5, -2.0], &[0.25, 7.0]]);
        assert_eq!(a.hadamard(&Matrix::filled(2, 2, 1.0)).unwrap(), a);
        assert_eq!(a.sub(&a).unwrap(), Matrix::zeros(2, 2));
        let x = m(&[&[2.0, 3.0]]);
        let y = m(&[&[4.0, 5.0]]);
        assert_eq!(x.hadamard(&y).unwrap(), m(&[&[8.0, 15.0]]));
        assert!(x.add(&a).is_err());
    }

    #[test]
    fn sub_scaled_cases() {
        let w = m(&[&[0.3, -1.7]]);
        let g = m(&[&[4.0, 9.0]]);
        assert_eq!(w.sub_scaled(&g, 0.0).unwrap(), w);
        assert_eq!(w.sub_scaled(&Matrix::zeros(1, 2), 0.7).unwrap(), w);
        let r = m(&[&[1.0]]).sub_scaled(&m(&[&[2.0]]), 0.5).unwrap();
        assert_eq!(r, m(&[&[0.0]]));
        assert!(w.sub_scaled(&Matrix::zeros(2, 1), 0.1).is_err());
        assert!(w.sub_scaled(&g, f64::NAN).is_err());
    }

    #[test]
    fn broadcast_cases() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(a.add_col_broadcast(&Matrix::zeros(2, 1)).unwrap(), a);
        let r = m(&[&[1.0, 2.0]]).add_col_broadcast(&m(&[&[10.0]])).unwrap();
        assert_eq!(r, m(&[&[11.0, 12.0]]));
        let single = m(&[&[1.0], &[2.0]]);
        let v = m(&[&[0.5], &[-1.0]]);
        assert_eq!(single.add_col_broadcast(&v).unwrap(), single.add(&v).unwrap());
        assert!(a.add_col_broadcast(&Matrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn from_vec_validates() {
        assert!(Matrix::from_vec(2, 2, vec![1.0; 3]).is_err());
        assert!(Matrix::from_vec(0, 2, vec![]).is_err());
        assert!(Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn select_columns_reorders() {
        let a = m(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]);
        assert_eq!(
            a.select_columns(&[2, 0]).unwrap(),
            m(&[&[3.0, 1.0], &[6.0, 4.0]])
        );
        assert!(a.select_columns(&[3]).is_err());
    }

    #[test]
    fn matmul_across_column_blocks_matches_naive() {
        let mut rng = crate::rng::SeededRng::new(3);
        let a = rng.normal_matrix(7, 33, 0.0, 1.0).unwrap();
        let b = rng.normal_matrix(33, 2 * MATMUL_BLOCK + 17, 0.0, 1.0).unwrap();
        assert_eq!(a.matmul(&b).unwrap(), naive_matmul(&a, &b));
    }

    #[test]
    fn matmul_transpose_rhs_is_bitwise_equal() {
        let mut rng = crate::rng::SeededRng::new(4);
        let d = rng.normal_matrix(5, 300, 0.0, 1.0).unwrap();
        let x = rng.normal_matrix(41, 300, 0.0, 1.0).unwrap();
        let fast = d.matmul_transpose_rhs(&x).unwrap();
        assert_eq!(fast, d.matmul(&x.transpose()).unwrap());
        assert_eq!(fast, naive_matmul(&d, &x.transpose()));
        assert!(d.matmul_transpose_rhs(&Matrix::zeros(3, 4)).is_err());
    }

    fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
        proptest::collection::vec(-3.0f64..3.0, rows * cols)
            .prop_map(move |d| Matrix::from_vec(rows, cols, d).unwrap())
    }

    proptest! {
        #[test]
        fn matmul_matches_naive(a in matrix(3, 5), b in matrix(5, 4)) {
            // Same summation order, so the match is exact.
            prop_assert_eq!(a.matmul(&b).unwrap(), naive_matmul(&a, &b));
        }

        #[test]
        fn matmul_is_associative(a in matrix(3, 4), b in matrix(4, 2), c in matrix(2, 5)) {
            let left = a.matmul(&b).unwrap().matmul(&c).unwrap();
            let right = a.matmul(&b.matmul(&c).unwrap()).unwrap();
            let diff = left.sub(&right).unwrap().max_abs();
            prop_assert!(diff <= 1e-12, "diff {}", diff);
        }

        #[test]
        fn transpose_is_involution(a in matrix(4, 7)) {
            prop_assert_eq!(a.transpose().transpose(), a);
        }

        #[test]
        fn ops_do_not_mutate_inputs(a in matrix(3, 3), b in matrix(3, 3)) {
            let (a0, b0) = (a.clone(), b.clone());
            let _ = a.matmul(&b).unwrap();
            let _ = a.hadamard(&b).unwrap();
            let _ = a.sub_scaled(&b, 0.3).unwrap();
            prop_assert_eq!(a, a0);
            prop_assert_eq!(b, b0);
        }
    }
}
