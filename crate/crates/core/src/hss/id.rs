//! Row interpolative decomposition `M ~ X M(J, :)` with `X(J, :) = I`.

use crate::dense::Mat;

#[derive(Debug, Clone)]
pub struct Interpolation {
    /// `p x r` interpolation matrix, identity on the skeleton rows.
    pub x: Mat,
    /// Selected rows, in pivot order.
    pub skeleton: Vec<usize>,
    /// The rank limit was reached before the tolerance was met.
    pub saturated: bool,
    /// Largest entry of `X` off the identity rows.
    pub max_entry: f64,
    /// Approximate flop cost of the factorization.
    pub flops: u64,
}

impl Interpolation {
    pub fn rank(&self) -> usize {
        self.skeleton.len()
    }
}

/// Householder QR with column pivoting applied to `M^T`, truncated once the
/// trailing columns have Frobenius norm at most `tol * |M|_F` or `max_rank`
/// pivots are taken. The non-selected rows are then expressed through
/// `R11^{-1} R12`.
pub fn interpolative_decomp(m: &Mat, tol: f64, max_rank: usize) -> Interpolation {
    let (p, q) = m.shape();
    let mut a = m.transpose();
    let mut perm: Vec<usize> = (0..p).collect();
    let total = m.norm_fro();
    let floor = tol * total;
    let limit = max_rank.min(p).min(q);
    let mut flops = 0u64;

    let mut norms: Vec<f64> = (0..p).map(|j| a.col(j).iter().map(|x| x * x).sum()).collect();
    let mut r = 0;
    let mut met_tol = total == 0.0;
    while r < limit && !met_tol {
        let trailing: f64 = norms[r..].iter().sum();
        if trailing.sqrt() <= floor {
            met_tol = true;
            break;
        }
        let piv = r + norms[r..]
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
            .0;
        if piv != r {
            let (x, y) = a.col_pair_mut(r, piv);
            x.swap_with_slice(y);
            perm.swap(r, piv);
            norms.swap(r, piv);
        }

        let col = &a.col(r)[r..];
        let alpha = crate::dense::norm2(col);
        let beta = if col[0] >= 0.0 { -alpha } else { alpha };
        let mut v = col.to_vec();
        v[0] -= beta;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        {
            let c = a.col_mut(r);
            c[r] = beta;
            c[r + 1..].fill(0.0);
        }
        if vv > 0.0 {
            for j in r + 1..p {
                let cj = &mut a.col_mut(j)[r..];
                let dotv: f64 = cj.iter().zip(&v).map(|(x, y)| x * y).sum();
                let f = 2.0 * dotv / vv;
                for (x, y) in cj.iter_mut().zip(&v) {
                    *x -= f * y;
                }
            }
        }
        r += 1;
        // Trailing norms recomputed in full: downdating loses digits right at
        // the noise floor this routine is asked to resolve.
        for j in r..p {
            norms[j] = a.col(j)[r..].iter().map(|x| x * x).sum();
        }
        flops += 6 * ((q - r + 1) * (p - r + 1)) as u64;
    }
    if !met_tol && r == limit && r < p {
        let trailing: f64 = norms[r..].iter().sum();
        met_tol = r < q && trailing.sqrt() <= floor;
    }
    let saturated = !met_tol && r < p;

    // T = R11^{-1} R12 by back substitution, one column of R12 at a time.
    let rest = p - r;
    let mut t = Mat::zeros(r, rest);
    for b in 0..rest {
        let rhs = &a.col(r + b)[..r];
        let tc = t.col_mut(b);
        for i in (0..r).rev() {
            let mut s = rhs[i];
            for l in i + 1..r {
                s -= a[(i, l)] * tc[l];
            }
            tc[i] = s / a[(i, i)];
        }
    }
    flops += (r * r * rest) as u64;

    let mut x = Mat::zeros(p, r);
    for (c, &row) in perm[..r].iter().enumerate() {
        x[(row, c)] = 1.0;
    }
    let mut max_entry = 0.0f64;
    for b in 0..rest {
        let row = perm[r + b];
        for c in 0..r {
            let val = t[(c, b)];
            max_entry = max_entry.max(val.abs());
            x[(row, c)] = val;
        }
    }
    Interpolation {
        x,
        skeleton: perm[..r].to_vec(),
        saturated,
        max_entry,
        flops,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::GaussianRng;

    fn residual(m: &Mat, id: &Interpolation) -> f64 {
        let mut rec = id.x.matmul(&m.select_rows(&id.skeleton));
        rec.sub_assign(m);
        rec.norm_fro() / m.norm_fro()
    }

    #[test]
    fn rank_one_is_exact() {
        let a: Vec<f64> = (0..9).map(|i| i as f64 - 4.5).collect();
        let b: Vec<f64> = (0..6).map(|j| 1.0 + j as f64).collect();
        let m = Mat::from_fn(9, 6, |i, j| a[i] * b[j]);
        let id = interpolative_decomp(&m, 1e-14, 6);
        assert_eq!(id.rank(), 1);
        assert!(residual(&m, &id) < 1e-15);
        assert!(!id.saturated);
    }

    #[test]
    fn orthonormal_rows_select_everything() {
        let mut g = GaussianRng::new(2);
        let (_, q) = crate::oracle::jacobi_eig(&crate::oracle::DenseSym::from_mat(&g.gaussian_mat(6, 6)).unwrap()).unwrap();
        // Rows of q are orthonormal; a 6x6 orthogonal matrix has full rank.
        let id = interpolative_decomp(&q, 1e-15, 10);
        assert_eq!(id.rank(), 6);
        let mut sorted = id.skeleton.clone();
        sorted.sort();
        assert_eq!(sorted, (0..6).collect::<Vec<_>>());
        // X is a permuted identity.
        for i in 0..6 {
            let row = id.x.row(i);
            assert_eq!(row.iter().filter(|&&v| v == 1.0).count(), 1);
            assert_eq!(row.iter().filter(|&&v| v == 0.0).count(), 5);
        }
    }

    #[test]
    fn known_rank_product() {
        let mut g = GaussianRng::new(3);
        let m = g.gaussian_mat(60, 7).matmul(&g.gaussian_mat(7, 30));
        let id = interpolative_decomp(&m, 1e-13, 30);
        assert_eq!(id.rank(), 7);
        assert!(residual(&m, &id) <= 1e-12);
        for (c, &row) in id.skeleton.iter().enumerate() {
            for cc in 0..7 {
                assert_eq!(id.x[(row, cc)], if c == cc { 1.0 } else { 0.0 });
            }
        }
        assert!(id.max_entry <= 2.0 * 7f64.sqrt() + 10.0);
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        let id = interpolative_decomp(&Mat::zeros(5, 3), 1e-15, 3);
        assert_eq!(id.rank(), 0);
        assert_eq!(id.x.shape(), (5, 0));
        assert!(!id.saturated);
    }

    #[test]
    fn rank_limit_sets_saturation() {
        let mut g = GaussianRng::new(4);
        let m = g.gaussian_mat(40, 12);
        let id = interpolative_decomp(&m, 1e-15, 5);
        assert_eq!(id.rank(), 5);
        assert!(id.saturated);
        // Using every sample column while rows remain also counts.
        let id = interpolative_decomp(&m, 1e-15, 100);
        assert_eq!(id.rank(), 12);
        assert!(id.saturated);
        // Wide input: every row is selected, nothing to interpolate.
        let id = interpolative_decomp(&m.transpose(), 1e-15, 100);
        assert_eq!(id.rank(), 12);
        assert!(!id.saturated);
    }
}
