//! Divide-and-conquer eigensolver for symmetric tridiagonal matrices with
//! HSS-accelerated eigenvector updates.

pub mod cauchy;
pub mod cli;
pub mod dc;
pub mod dense;
pub mod error;
pub mod flops;
pub mod hss;
pub mod matgen;
pub mod metrics;
pub mod oracle;
pub mod rng;
pub mod secular;

pub use error::{Error, Result};
