//! Column-major dense matrices and the handful of kernels the solver needs.
//!
//! Products go through `matrixmultiply::dgemm`; callers own the flop
//! accounting so that each phase is charged for its own work.

use std::ops::{Index, IndexMut, Range};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl std::fmt::Debug for Mat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Mat({}x{})", self.rows, self.cols)?;
        if self.rows * self.cols <= 64 {
            for i in 0..self.rows {
                write!(f, "\n ")?;
                for j in 0..self.cols {
                    write!(f, " {:>12.5e}", self[(i, j)])?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    N,
    T,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    /// Wraps column-major storage.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(rows * cols, data.len()));
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        Mat::from_fn(r, c, |i, j| rows[i][j])
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

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Two distinct columns borrowed mutably at once.
    pub fn col_pair_mut(&mut self, a: usize, b: usize) -> (&mut [f64], &mut [f64]) {
        assert!(a != b);
        let r = self.rows;
        if a < b {
            let (lo, hi) = self.data.split_at_mut(b * r);
            (&mut lo[a * r..(a + 1) * r], &mut hi[..r])
        } else {
            let (lo, hi) = self.data.split_at_mut(a * r);
            (&mut hi[..r], &mut lo[b * r..(b + 1) * r])
        }
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn block(&self, rows: Range<usize>, cols: Range<usize>) -> Mat {
        let r0 = rows.start;
        let c0 = cols.start;
        Mat::from_fn(rows.len(), cols.len(), |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, src: &Mat) {
        for j in 0..src.cols {
            let dst = &mut self.data[(c0 + j) * self.rows + r0..(c0 + j) * self.rows + r0 + src.rows];
            dst.copy_from_slice(src.col(j));
        }
    }

    pub fn select_rows(&self, idx: &[usize]) -> Mat {
        Mat::from_fn(idx.len(), self.cols, |i, j| self[(idx[i], j)])
    }

    pub fn select_cols(&self, idx: &[usize]) -> Mat {
        let mut out = Mat::zeros(self.rows, idx.len());
        for (jj, &j) in idx.iter().enumerate() {
            out.col_mut(jj).copy_from_slice(self.col(j));
        }
        out
    }

    /// Rows `top` stacked above rows `bottom`; column counts must agree.
    pub fn vstack(top: &Mat, bottom: &Mat) -> Mat {
        assert_eq!(top.cols, bottom.cols);
        let mut out = Mat::zeros(top.rows + bottom.rows, top.cols);
        out.set_block(0, 0, top);
        out.set_block(top.rows, 0, bottom);
        out
    }

    pub fn hstack(left: &Mat, right: &Mat) -> Mat {
        assert_eq!(left.rows, right.rows);
        let mut data = Vec::with_capacity(left.data.len() + right.data.len());
        data.extend_from_slice(&left.data);
        data.extend_from_slice(&right.data);
        Mat {
            rows: left.rows,
            cols: left.cols + right.cols,
            data,
        }
    }

    pub fn scale_cols(&mut self, s: &[f64]) {
        for (j, &sj) in s.iter().enumerate() {
            for x in self.col_mut(j) {
                *x *= sj;
            }
        }
    }

    pub fn sub_assign(&mut self, other: &Mat) {
        assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a -= *b;
        }
    }

    pub fn add_assign(&mut self, other: &Mat) {
        assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn norm_max(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        let mut out = Mat::zeros(self.rows, other.cols);
        gemm(1.0, self, Op::N, other, Op::N, 0.0, &mut out);
        out
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

/// `c <- alpha * op(a) * op(b) + beta * c`.
pub fn gemm(alpha: f64, a: &Mat, op_a: Op, b: &Mat, op_b: Op, beta: f64, c: &mut Mat) {
    let (m, ka, rsa, csa) = match op_a {
        Op::N => (a.rows, a.cols, 1isize, a.rows as isize),
        Op::T => (a.cols, a.rows, a.rows as isize, 1isize),
    };
    let (kb, n, rsb, csb) = match op_b {
        Op::N => (b.rows, b.cols, 1isize, b.rows as isize),
        Op::T => (b.cols, b.rows, b.rows as isize, 1isize),
    };
    assert_eq!(ka, kb, "inner dimensions differ");
    assert_eq!((c.rows, c.cols), (m, n), "output shape differs");
    if m == 0 || n == 0 {
        return;
    }
    if ka == 0 {
        if beta == 0.0 {
            c.data.fill(0.0);
        } else {
            c.data.iter_mut().for_each(|x| *x *= beta);
        }
        return;
    }
    // SAFETY: strides describe the column-major buffers owned by `a`, `b` and `c`,
    // whose lengths are rows*cols as enforced by every constructor.
    unsafe {
        matrixmultiply::dgemm(
            m,
            ka,
            n,
            alpha,
            a.data.as_ptr(),
            rsa,
            csa,
            b.data.as_ptr(),
            rsb,
            csb,
            beta,
            c.data.as_mut_ptr(),
            1,
            c.rows as isize,
        );
    }
}

/// `op(a) * op(b)` freshly allocated.
pub fn product(a: &Mat, op_a: Op, b: &Mat, op_b: Op) -> Mat {
    let m = if op_a == Op::N { a.rows } else { a.cols };
    let n = if op_b == Op::N { b.cols } else { b.rows };
    let mut c = Mat::zeros(m, n);
    gemm(1.0, a, op_a, b, op_b, 0.0, &mut c);
    c
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    // Scaled to survive tiny entries.
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * x.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &Mat, b: &Mat) -> Mat {
        Mat::from_fn(a.rows(), b.cols(), |i, j| {
            (0..a.cols()).map(|k| a[(i, k)] * b[(k, j)]).sum()
        })
    }

    #[test]
    fn gemm_all_transpose_combinations() {
        let a = Mat::from_fn(4, 3, |i, j| (i * 3 + j) as f64 - 2.5);
        let b = Mat::from_fn(3, 5, |i, j| ((i + 2 * j) % 7) as f64 * 0.5);
        let reference = naive(&a, &b);
        let at = a.transpose();
        let bt = b.transpose();
        assert!(product(&a, Op::N, &b, Op::N).max_abs_diff(&reference) < 1e-14);
        assert!(product(&at, Op::T, &b, Op::N).max_abs_diff(&reference) < 1e-14);
        assert!(product(&a, Op::N, &bt, Op::T).max_abs_diff(&reference) < 1e-14);
        assert!(product(&at, Op::T, &bt, Op::T).max_abs_diff(&reference) < 1e-14);
    }

    #[test]
    fn gemm_accumulates_with_beta() {
        let a = Mat::identity(2);
        let mut c = Mat::from_fn(2, 2, |i, j| (i + j) as f64);
        gemm(2.0, &a, Op::N, &a, Op::N, 1.0, &mut c);
        assert_eq!(c, Mat::from_rows(&[&[2.0, 1.0], &[1.0, 4.0]]));
    }

    #[test]
    fn empty_inner_dimension_scales_output() {
        let a = Mat::zeros(2, 0);
        let b = Mat::zeros(0, 3);
        let mut c = Mat::from_fn(2, 3, |_, _| 1.0);
        gemm(1.0, &a, Op::N, &b, Op::N, 0.0, &mut c);
        assert_eq!(c.norm_max(), 0.0);
    }

    #[test]
    fn stacking_and_selection() {
        let a = Mat::from_fn(2, 2, |i, j| (i * 2 + j) as f64);
        let v = Mat::vstack(&a, &a);
        assert_eq!(v.shape(), (4, 2));
        assert_eq!(v[(3, 1)], 3.0);
        let mut h = Mat::hstack(&a, &a);
        assert_eq!(h[(1, 3)], 3.0);
        assert_eq!(v.select_rows(&[3, 0]).row(0), vec![2.0, 3.0]);
        assert_eq!(h.select_cols(&[2]).col(0), &[0.0, 2.0]);
        let (x, y) = h.col_pair_mut(3, 1);
        x[0] = 9.0;
        y[0] = 8.0;
        assert_eq!(h[(0, 3)], 9.0);
        assert_eq!(h[(0, 1)], 8.0);
    }

    #[test]
    fn norm2_handles_tiny_values() {
        let x = [3e-200, 4e-200];
        assert!((norm2(&x) - 5e-200).abs() < 1e-214);
        assert_eq!(norm2(&[]), 0.0);
    }
}
