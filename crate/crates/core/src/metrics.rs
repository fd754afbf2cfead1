//! Accuracy metrics, all in the entrywise max norm.

use crate::dense::{gemm, Mat, Op};
use crate::error::{Error, Result};
use crate::matgen::SymTridiagonal;

/// `max |Q^T Q - I| / n`.
pub fn orthogonality(q: &Mat) -> f64 {
    let n = q.cols();
    if n == 0 {
        return 0.0;
    }
    let mut g = Mat::zeros(n, n);
    gemm(1.0, q, Op::T, q, Op::N, 0.0, &mut g);
    for i in 0..n {
        g[(i, i)] -= 1.0;
    }
    g.norm_max() / n as f64
}

/// `max |T - Q diag(lambda) Q^T| / (|T|_max n)`.
pub fn backward_error(t: &SymTridiagonal, lambda: &[f64], q: &Mat) -> Result<f64> {
    let n = t.n();
    if q.shape() != (n, n) || lambda.len() != n {
        return Err(Error::shape(
            format!("{n} eigenvalues and a {n}x{n} matrix"),
            format!("{} and {:?}", lambda.len(), q.shape()),
        ));
    }
    let mut ql = q.clone();
    ql.scale_cols(lambda);
    let mut r = t.to_dense();
    gemm(-1.0, &ql, Op::N, q, Op::T, 1.0, &mut r);
    let norm = t.norm_max();
    let scale = if norm > 0.0 { norm * n as f64 } else { n as f64 };
    Ok(r.norm_max() / scale)
}

/// `max |a_i - b_i|` over equally long sequences.
pub fn max_deviation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::shape(a.len(), b.len()));
    }
    Ok(a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_two_by_two() {
        let s = 2f64.sqrt();
        let t = SymTridiagonal::new(vec![0.0, 0.0], vec![s]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let q = Mat::from_rows(&[&[h, h], &[-h, h]]);
        let o = orthogonality(&q);
        assert!(o <= 2.0 * f64::EPSILON, "{o:e}");
        let b = backward_error(&t, &[-s, s], &q).unwrap();
        assert!(b <= 2.0 * f64::EPSILON, "{b:e}");
    }

    #[test]
    fn corrupted_column_is_flagged() {
        let mut q = Mat::identity(4);
        q[(2, 1)] = 0.3;
        assert!(orthogonality(&q) > 1e-3 / 4.0);
        assert!(max_deviation(&[1.0], &[1.0, 2.0]).is_err());
    }
}
