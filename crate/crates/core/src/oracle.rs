//! Slow reference routines for tests and `verify`.
//!
//! Nothing here touches the production kernels: the eigensolver is cyclic
//! Jacobi and singular values come from one-sided Jacobi, with a column
//! pivoted QR of its own to cut numerically low-rank inputs down first.

use crate::dense::Mat;
use crate::error::{Error, Result};
use crate::matgen::SymTridiagonal;

const EPS: f64 = f64::EPSILON;

pub const MAX_ORDER: usize = 4096;
pub const MAX_SWEEPS: usize = 50;

/// Symmetric matrix with mirrored row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSym {
    n: usize,
    data: Vec<f64>,
}

impl DenseSym {
    /// Fills from `f(i, j)` for `i <= j` and mirrors.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if n > MAX_ORDER {
            return Err(Error::TooLarge {
                n,
                limit: MAX_ORDER,
                what: "the dense oracle",
            });
        }
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        if !data.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("dense symmetric matrix"));
        }
        Ok(DenseSym { n, data })
    }

    /// Takes the upper triangle of a square matrix.
    pub fn from_mat(m: &Mat) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::shape("a square matrix", format!("{}x{}", m.rows(), m.cols())));
        }
        DenseSym::from_fn(m.rows(), |i, j| m[(i, j)])
    }

    pub fn from_tridiagonal(t: &SymTridiagonal) -> Result<Self> {
        let (a, b) = (t.diag(), t.offdiag());
        DenseSym::from_fn(t.n(), |i, j| {
            if i == j {
                a[i]
            } else if j == i + 1 {
                b[i]
            } else {
                0.0
            }
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn to_mat(&self) -> Mat {
        Mat::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }
}

fn off_norm_sq(a: &Mat) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for j in 0..n {
        for (i, x) in a.col(j).iter().enumerate() {
            if i != j {
                s += x * x;
            }
        }
    }
    s
}

/// Round-robin pairing for `m` (even) slots: every round pairs all slots,
/// and `m - 1` rounds cover every pair once.
fn round_robin(m: usize, round: usize) -> impl Iterator<Item = (usize, usize)> {
    let slot = move |pos: usize| {
        if pos == 0 {
            0
        } else {
            1 + (pos - 1 + round) % (m - 1)
        }
    };
    (0..m / 2).map(move |t| {
        let (a, b) = (slot(t), slot(m - 1 - t));
        (a.min(b), a.max(b))
    })
}

fn rotate_cols(m: &mut Mat, rots: &[(usize, usize, f64, f64)]) {
    for &(p, q, c, s) in rots {
        let (x, y) = m.col_pair_mut(p, q);
        for (xp, yq) in x.iter_mut().zip(y.iter_mut()) {
            let (u, v) = (*xp, *yq);
            *xp = c * u - s * v;
            *yq = s * u + c * v;
        }
    }
}

// Row rotations walked one column at a time, so each column stays in cache.
fn rotate_rows(m: &mut Mat, rots: &[(usize, usize, f64, f64)]) {
    for j in 0..m.cols() {
        let col = m.col_mut(j);
        for &(p, q, c, s) in rots {
            let (u, v) = (col[p], col[q]);
            col[p] = c * u - s * v;
            col[q] = s * u + c * v;
        }
    }
}

/// Eigenvalues (ascending) and orthonormal eigenvectors by cyclic Jacobi.
///
/// Each round applies `n/2` disjoint rotations chosen by a round-robin
/// schedule; `J^T A J` is formed by a column pass and a row pass.
pub fn jacobi_eig(a: &DenseSym) -> Result<(Vec<f64>, Mat)> {
    let n = a.n();
    let mut m = a.to_mat();
    let mut q = Mat::identity(n);
    if n <= 1 {
        return Ok((m.as_slice().to_vec(), q));
    }
    let fro = m.norm_fro();
    let target = (n as f64 * EPS * fro).powi(2);
    let slots = n + n % 2;
    let mut converged = off_norm_sq(&m) <= target;
    let mut sweeps = 0;
    let mut rots = Vec::with_capacity(slots / 2);

    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence {
                routine: "jacobi_eig",
                iterations: sweeps,
            });
        }
        for round in 0..slots - 1 {
            rots.clear();
            for (p, qq) in round_robin(slots, round) {
                if qq >= n {
                    continue;
                }
                let apq = m[(p, qq)];
                let (app, aqq) = (m[(p, p)], m[(qq, qq)]);
                // Below an ulp of both diagonal entries a rotation changes nothing.
                if apq.abs() <= 0.5 * EPS * (app.abs() * aqq.abs()).sqrt() {
                    m[(p, qq)] = 0.0;
                    m[(qq, p)] = 0.0;
                    continue;
                }
                let zeta = (aqq - app) / (2.0 * apq);
                let t = if zeta.abs() > 1e150 {
                    0.5 / zeta
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                rots.push((p, qq, c, t * c));
            }
            if rots.is_empty() {
                continue;
            }
            rotate_cols(&mut m, &rots);
            rotate_rows(&mut m, &rots);
            rotate_cols(&mut q, &rots);
            for &(p, qq, _, _) in &rots {
                m[(p, qq)] = 0.0;
                m[(qq, p)] = 0.0;
            }
        }
        sweeps += 1;
        converged = off_norm_sq(&m) <= target;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let lambda = order.iter().map(|&i| m[(i, i)]).collect();
    Ok((lambda, q.select_cols(&order)))
}

/// Singular values, descending, by one-sided Jacobi on the columns of `g`.
pub fn singular_values(g: &Mat) -> Result<Vec<f64>> {
    let mut g = if g.rows() >= g.cols() { g.clone() } else { g.transpose() };
    let (rows, cols) = g.shape();
    let tol = rows.max(1) as f64 * EPS;
    let mut sweeps = 0;
    loop {
        let mut rotated = false;
        for i in 0..cols {
            for j in i + 1..cols {
                let (x, y) = g.col_pair_mut(i, j);
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for (u, v) in x.iter().zip(y.iter()) {
                    alpha += u * u;
                    beta += v * v;
                    gamma += u * v;
                }
                if alpha == 0.0 || beta == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for (u, v) in x.iter_mut().zip(y.iter_mut()) {
                    let (a, b) = (*u, *v);
                    *u = c * a - s * b;
                    *v = s * a + c * b;
                }
            }
        }
        sweeps += 1;
        if !rotated {
            break;
        }
        if sweeps == 4 * MAX_SWEEPS {
            return Err(Error::NoConvergence {
                routine: "singular_values",
                iterations: sweeps,
            });
        }
    }
    let mut s: Vec<f64> = (0..cols).map(|j| crate::dense::norm2(g.col(j))).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Leading rows of a Householder QR with column pivoting, stopped once the
/// trailing block has Frobenius norm at most `floor`.
fn pivoted_qr_head(m: &Mat, floor: f64) -> Mat {
    let mut a = m.clone();
    let (rows, cols) = a.shape();
    let steps = rows.min(cols);
    let mut perm: Vec<usize> = (0..cols).collect();
    let mut r = 0;
    while r < steps {
        let norms: Vec<f64> = (r..cols)
            .map(|j| a.col(j)[r..].iter().map(|x| x * x).sum::<f64>())
            .collect();
        if norms.iter().sum::<f64>().sqrt() <= floor {
            break;
        }
        let (off, _) = norms
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
        let piv = r + off;
        if piv != r {
            let (x, y) = a.col_pair_mut(r, piv);
            x.swap_with_slice(y);
            perm.swap(r, piv);
        }
        // Reflector for column r below the diagonal.
        let col = &a.col(r)[r..];
        let alpha = crate::dense::norm2(col);
        let x0 = col[0];
        let beta = if x0 >= 0.0 { -alpha } else { alpha };
        let mut v: Vec<f64> = col.to_vec();
        v[0] -= beta;
        let vnorm_sq: f64 = v.iter().map(|x| x * x).sum();
        if vnorm_sq > 0.0 {
            for j in r..cols {
                let cj = &mut a.col_mut(j)[r..];
                let dotv: f64 = cj.iter().zip(&v).map(|(x, y)| x * y).sum();
                let f = 2.0 * dotv / vnorm_sq;
                for (x, y) in cj.iter_mut().zip(&v) {
                    *x -= f * y;
                }
            }
        }
        r += 1;
    }
    Mat::from_fn(r, cols, |i, j| if j >= i { a[(i, j)] } else { 0.0 })
}

/// Number of singular values of `m` above `threshold`.
///
/// The QR preconditioning moves each singular value by at most
/// `threshold / 1000`, so the count is exact unless a singular value sits
/// within that distance of the threshold.
pub fn numerical_rank(m: &Mat, threshold: f64) -> Result<usize> {
    if !m.is_finite() {
        return Err(Error::NonFinite("numerical_rank input"));
    }
    let tall = if m.rows() >= m.cols() { m.clone() } else { m.transpose() };
    let head = pivoted_qr_head(&tall, 1e-3 * threshold);
    if head.rows() == 0 {
        return Ok(0);
    }
    let s = singular_values(&head.transpose())?;
    Ok(s.iter().filter(|&&x| x > threshold).count())
}
