//! Seeded Gaussian source for the randomized sampling.
//!
//! Xoshiro256++ seeded through SplitMix64 (the `seed_from_u64` path), with
//! Box-Muller producing normals in pairs. The same seed always yields the
//! same stream on every platform.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::dense::Mat;

pub struct GaussianRng {
    inner: Xoshiro256PlusPlus,
    spare: Option<f64>,
}

impl GaussianRng {
    pub fn new(seed: u64) -> Self {
        GaussianRng {
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform in the open interval (0, 1].
    fn uniform_open(&mut self) -> f64 {
        1.0 - self.inner.gen::<f64>()
    }

    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform_open();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }

    /// Column-major fill, one column after another.
    pub fn gaussian_mat(&mut self, rows: usize, cols: usize) -> Mat {
        let data: Vec<f64> = (0..rows * cols).map(|_| self.normal()).collect();
        Mat::from_col_major(rows, cols, data).expect("length matches by construction")
    }

    /// Uniformly distributed direction on the unit sphere.
    pub fn unit_vector(&mut self, n: usize) -> Vec<f64> {
        let mut v: Vec<f64> = (0..n).map(|_| self.normal()).collect();
        let norm = crate::dense::norm2(&v);
        v.iter_mut().for_each(|x| *x /= norm);
        v
    }
}
