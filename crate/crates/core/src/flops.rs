//! Instrumented flop accounting.
//!
//! Every kernel that does real arithmetic reports into a [`FlopCounter`]
//! under one of four phases. A fused multiply-add counts as two flops.

use std::sync::atomic::{AtomicU64, Ordering};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    /// Secular roots, weight recomputation and explicit eigenvector columns.
    Secular,
    /// Plain matrix products that update eigenvectors.
    DenseUpdate,
    /// Sampling and interpolative decompositions of the randomized HSS build.
    HssConstruct,
    /// Structured multiplication by an HSS tree.
    HssMult,
}

#[derive(Debug, Default)]
pub struct FlopCounter {
    secular: AtomicU64,
    dense_update: AtomicU64,
    hss_construct: AtomicU64,
    hss_mult: AtomicU64,
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct FlopTotals {
    pub secular: u64,
    pub dense_update: u64,
    pub hss_construct: u64,
    pub hss_mult: u64,
}

impl FlopTotals {
    /// Flops spent forming eigenvectors of `T` from the merge eigenvectors,
    /// whichever path was taken.
    pub fn update_total(&self) -> u64 {
        self.dense_update + self.hss_construct + self.hss_mult
    }

    pub fn total(&self) -> u64 {
        self.update_total() + self.secular
    }
}

impl std::ops::Sub for FlopTotals {
    type Output = FlopTotals;

    fn sub(self, rhs: FlopTotals) -> FlopTotals {
        FlopTotals {
            secular: self.secular - rhs.secular,
            dense_update: self.dense_update - rhs.dense_update,
            hss_construct: self.hss_construct - rhs.hss_construct,
            hss_mult: self.hss_mult - rhs.hss_mult,
        }
    }
}

impl FlopCounter {
    pub fn new() -> Self {
        Self::default()
    }

    fn slot(&self, phase: Phase) -> &AtomicU64 {
        match phase {
            Phase::Secular => &self.secular,
            Phase::DenseUpdate => &self.dense_update,
            Phase::HssConstruct => &self.hss_construct,
            Phase::HssMult => &self.hss_mult,
        }
    }

    #[inline]
    pub fn add(&self, phase: Phase, flops: u64) {
        self.slot(phase).fetch_add(flops, Ordering::Relaxed);
    }

    /// Account for a `m x k` by `k x n` product.
    #[inline]
    pub fn gemm(&self, phase: Phase, m: usize, k: usize, n: usize) {
        self.add(phase, 2 * (m as u64) * (k as u64) * (n as u64));
    }

    pub fn snapshot(&self) -> FlopTotals {
        FlopTotals {
            secular: self.secular.load(Ordering::Relaxed),
            dense_update: self.dense_update.load(Ordering::Relaxed),
            hss_construct: self.hss_construct.load(Ordering::Relaxed),
            hss_mult: self.hss_mult.load(Ordering::Relaxed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gemm_counts_two_per_fma() {
        let c = FlopCounter::new();
        c.gemm(Phase::DenseUpdate, 3, 4, 5);
        c.add(Phase::Secular, 7);
        let t = c.snapshot();
        assert_eq!(t.dense_update, 120);
        assert_eq!(t.secular, 7);
        assert_eq!(t.update_total(), 120);
        assert_eq!(t.total(), 127);
    }
}
