//! Eigenvector matrix of a rank-one system kept in Cauchy-like form.
//!
//! `C(i, j) = zhat_i v_j / (d_i - lambda_j)` with the denominator taken from
//! the gap pairs. Nothing is cached: blocks and products regenerate entries
//! from the generators.

use std::ops::Range;

use crate::dense::{gemm, Mat, Op};
use crate::error::{Error, Result};
use crate::flops::{FlopCounter, Phase};
use crate::secular::SecularSolution;

/// Charged per generated entry: two subtractions, a division, a product.
pub const FLOPS_PER_ENTRY: u64 = 4;

const ROW_CHUNK: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct CauchyEvecMatrix {
    d: Vec<f64>,
    gamma: Vec<f64>,
    mu: Vec<f64>,
    zhat: Vec<f64>,
    v: Vec<f64>,
}

impl CauchyEvecMatrix {
    pub fn from_solution(sol: &SecularSolution) -> Self {
        CauchyEvecMatrix {
            d: sol.d.clone(),
            gamma: sol.gamma.clone(),
            mu: sol.mu.clone(),
            zhat: sol.zhat.clone(),
            v: sol.v.clone(),
        }
    }

    pub fn from_generators(
        d: Vec<f64>,
        gamma: Vec<f64>,
        mu: Vec<f64>,
        zhat: Vec<f64>,
        v: Vec<f64>,
    ) -> Result<Self> {
        let k = d.len();
        for (name, len) in [("gamma", gamma.len()), ("mu", mu.len()), ("zhat", zhat.len()), ("v", v.len())] {
            if len != k {
                return Err(Error::shape(format!("{k} entries in {name}"), len));
            }
        }
        Ok(CauchyEvecMatrix { d, gamma, mu, zhat, v })
    }

    pub fn k(&self) -> usize {
        self.d.len()
    }

    pub fn poles(&self) -> &[f64] {
        &self.d
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn zhat(&self) -> &[f64] {
        &self.zhat
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    /// `lambda_j` as `d_j + gamma_j`; only for reporting and identities.
    pub fn lambda(&self, j: usize) -> f64 {
        self.d[j] + self.gamma[j]
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let gap = if i <= j {
            (self.d[i] - self.d[j]) - self.gamma[j]
        } else {
            (self.d[i] - self.d[j + 1]) + self.mu[j]
        };
        self.zhat[i] * self.v[j] / gap
    }

    /// Dense copy of `C(rows, cols)`.
    pub fn block(&self, rows: Range<usize>, cols: Range<usize>) -> Mat {
        let r0 = rows.start;
        let c0 = cols.start;
        Mat::from_fn(rows.len(), cols.len(), |i, j| self.entry(r0 + i, c0 + j))
    }

    /// Dense copy of `C(rows, cols)` for arbitrary index lists.
    pub fn gather(&self, rows: &[usize], cols: &[usize]) -> Mat {
        Mat::from_fn(rows.len(), cols.len(), |i, j| self.entry(rows[i], cols[j]))
    }

    pub fn materialize(&self) -> Mat {
        self.block(0..self.k(), 0..self.k())
    }

    fn check_rows(&self, x: &Mat) -> Result<()> {
        if x.rows() != self.k() {
            return Err(Error::shape(format!("{} rows", self.k()), x.rows()));
        }
        Ok(())
    }

    /// `C X`, generated in row chunks.
    pub fn multiply(&self, x: &Mat, flops: &FlopCounter, phase: Phase) -> Result<Mat> {
        self.check_rows(x)?;
        let (k, p) = (self.k(), x.cols());
        let mut out = Mat::zeros(k, p);
        for r0 in (0..k).step_by(ROW_CHUNK) {
            let r1 = (r0 + ROW_CHUNK).min(k);
            let blk = self.block(r0..r1, 0..k);
            let mut part = Mat::zeros(r1 - r0, p);
            gemm(1.0, &blk, Op::N, x, Op::N, 0.0, &mut part);
            out.set_block(r0, 0, &part);
        }
        flops.add(phase, FLOPS_PER_ENTRY * (k * k) as u64);
        flops.gemm(phase, k, k, p);
        Ok(out)
    }

    /// `C^T X`, generated in row chunks of `C`.
    pub fn transpose_multiply(&self, x: &Mat, flops: &FlopCounter, phase: Phase) -> Result<Mat> {
        self.check_rows(x)?;
        let (k, p) = (self.k(), x.cols());
        let mut out = Mat::zeros(k, p);
        for r0 in (0..k).step_by(ROW_CHUNK) {
            let r1 = (r0 + ROW_CHUNK).min(k);
            let blk = self.block(r0..r1, 0..k);
            let xs = x.block(r0..r1, 0..p);
            gemm(1.0, &blk, Op::T, &xs, Op::N, 1.0, &mut out);
        }
        flops.add(phase, FLOPS_PER_ENTRY * (k * k) as u64);
        flops.gemm(phase, k, k, p);
        Ok(out)
    }

    /// `(C Omega, C^T Omega)` from a single pass over the generated entries.
    pub fn sample_both(&self, omega: &Mat, flops: &FlopCounter, phase: Phase) -> Result<(Mat, Mat)> {
        self.check_rows(omega)?;
        let (k, p) = (self.k(), omega.cols());
        let mut y = Mat::zeros(k, p);
        let mut z = Mat::zeros(k, p);
        for r0 in (0..k).step_by(ROW_CHUNK) {
            let r1 = (r0 + ROW_CHUNK).min(k);
            let blk = self.block(r0..r1, 0..k);
            let mut part = Mat::zeros(r1 - r0, p);
            gemm(1.0, &blk, Op::N, omega, Op::N, 0.0, &mut part);
            y.set_block(r0, 0, &part);
            let os = omega.block(r0..r1, 0..p);
            gemm(1.0, &blk, Op::T, &os, Op::N, 1.0, &mut z);
        }
        flops.add(phase, FLOPS_PER_ENTRY * (k * k) as u64);
        flops.gemm(phase, k, k, 2 * p);
        Ok((y, z))
    }
}
