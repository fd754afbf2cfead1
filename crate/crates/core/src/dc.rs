//! Divide-and-conquer driver for the symmetric tridiagonal eigenproblem.
//!
//! `T` is split into two halves plus a rank-one coupling, the halves are
//! solved recursively and each merge becomes a rank-one modified diagonal
//! problem. Eigenvectors of a merge are updated either by a dense product or,
//! for large deflated systems, through an HSS approximation of the Cauchy-like
//! merge eigenvector matrix.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::cauchy::{CauchyEvecMatrix, FLOPS_PER_ENTRY};
use crate::dense::{gemm, Mat, Op};
use crate::error::{Error, Result};
use crate::flops::{FlopCounter, FlopTotals, Phase};
use crate::hss::{
    build_partition, estimate_rank, fit_partition, hss_matmul_right, rand_hss_construct, HssParams,
};
use crate::matgen::SymTridiagonal;
use crate::secular::{deflate, solve_secular_counted, DEFLATION_SCALE};

const EPS: f64 = f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    DenseDc,
    AdcRand,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::DenseDc, Method::AdcRand];

    pub fn name(self) -> &'static str {
        match self {
            Method::DenseDc => "dense-dc",
            Method::AdcRand => "adc-rand",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Subproblems of at most this order go to the QL iteration.
    pub base_size: usize,
    /// The HSS path is taken when the deflated system is larger than this.
    pub hss_threshold: usize,
    pub leaf_size: usize,
    pub oversample: usize,
    pub rank_eps: f64,
    pub rank_cap: usize,
    pub seed: u64,
    pub method: Method,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            base_size: 25,
            hss_threshold: 2000,
            leaf_size: 200,
            oversample: 10,
            rank_eps: crate::hss::DEFAULT_RANK_EPS,
            rank_cap: crate::hss::DEFAULT_RANK_CAP,
            seed: 0,
            method: Method::AdcRand,
        }
    }
}

impl SolverConfig {
    pub fn with_method(method: Method) -> Self {
        SolverConfig {
            method,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.base_size < 3 {
            return bad("base size must be at least 3");
        }
        if self.leaf_size == 0 || self.hss_threshold < 4 * self.leaf_size {
            return bad("hss threshold must be at least four leaf sizes");
        }
        if !(self.rank_eps > 0.0 && self.rank_eps < 1.0) {
            return bad("rank eps must lie in (0, 1)");
        }
        if self.rank_cap == 0 {
            return bad("rank cap must be positive");
        }
        Ok(())
    }
}

/// What happened at one merge.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeRecord {
    /// Order of the merged problem.
    pub n: usize,
    /// Size of the system left after deflation.
    pub k: usize,
    pub deflated: usize,
    /// Rank estimate the HSS build was sized for, if the path was taken.
    pub hss_rank: Option<usize>,
    /// Largest skeleton actually selected.
    pub hss_max_rank: Option<usize>,
    /// The HSS path was attempted but the dense product was used.
    pub fallback: bool,
    pub flops: FlopTotals,
}

impl MergeRecord {
    pub fn deflated_fraction(&self) -> f64 {
        self.deflated as f64 / self.n as f64
    }
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    /// Ascending.
    pub lambda: Vec<f64>,
    pub q: Mat,
    pub merges: Vec<MergeRecord>,
    pub flops: FlopTotals,
}

impl EigenResult {
    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    pub fn max_deflated_fraction(&self) -> f64 {
        self.merges.iter().map(|m| m.deflated_fraction()).fold(0.0, f64::max)
    }
}

/// `T = blockdiag(T1, T2) + rho v v^T` with `v = e_k + theta e_{k+1}`, where
/// `k` rows go to `T1`.
pub fn split(t: &SymTridiagonal, k: usize) -> Result<(SymTridiagonal, SymTridiagonal, f64, f64)> {
    let n = t.n();
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!("split index {k} outside 1..{n}")));
    }
    let (a, b) = (t.diag(), t.offdiag());
    let beta = b[k - 1];
    let rho = beta.abs();
    let theta = if beta < 0.0 { -1.0 } else { 1.0 };
    let mut a1 = a[..k].to_vec();
    let mut a2 = a[k..].to_vec();
    a1[k - 1] -= rho;
    a2[0] -= rho;
    let t1 = SymTridiagonal::new(a1, b[..k - 1].to_vec())?;
    let t2 = SymTridiagonal::new(a2, b[k..].to_vec())?;
    Ok((t1, t2, rho, theta))
}

/// Rank-one system of a merge, before deflation.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeSystem {
    /// `(L1, L2)` sorted ascending.
    pub d: Vec<f64>,
    /// Unit vector, permuted with `d`.
    pub z: Vec<f64>,
    /// Coupling scaled by `|v|^2 = 2`.
    pub rho: f64,
    /// `perm[s]` is the index into `(L1, L2)` placed at position `s`.
    pub perm: Vec<usize>,
}

/// `z = (last row of Q1, theta * first row of Q2) / sqrt(2)` and `rho = 2 rho`,
/// sorted jointly with `d = (L1, L2)`.
pub fn merge(q1: &Mat, l1: &[f64], q2: &Mat, l2: &[f64], rho: f64, theta: f64) -> Result<MergeSystem> {
    let (n1, n2) = (l1.len(), l2.len());
    if q1.shape() != (n1, n1) || q2.shape() != (n2, n2) {
        return Err(Error::shape(format!("{n1}x{n1} and {n2}x{n2}"), format!("{:?} and {:?}", q1.shape(), q2.shape())));
    }
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let d: Vec<f64> = l1.iter().chain(l2).copied().collect();
    let z: Vec<f64> = (0..n1)
        .map(|j| q1[(n1 - 1, j)] * scale)
        .chain((0..n2).map(|j| theta * q2[(0, j)] * scale))
        .collect();
    let mut perm: Vec<usize> = (0..n1 + n2).collect();
    perm.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    Ok(MergeSystem {
        d: perm.iter().map(|&p| d[p]).collect(),
        z: perm.iter().map(|&p| z[p]).collect(),
        rho: 2.0 * rho,
        perm,
    })
}

/// Implicit QL with Wilkinson shifts, rotations accumulated into `Q`.
pub fn base_case_eig(t: &SymTridiagonal) -> Result<EigenResult> {
    let n = t.n();
    let mut d = t.diag().to_vec();
    let mut e = t.offdiag().to_vec();
    e.push(0.0);
    let mut q = Mat::identity(n);
    let max_iter = 30 * n.max(1);
    let mut iters = 0;

    for l in 0..n {
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= EPS * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iters += 1;
            if iters > max_iter {
                return Err(Error::NoConvergence {
                    routine: "tridiagonal QL",
                    iterations: iters,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let (qi, qn) = q.col_pair_mut(i, i + 1);
                for (x, y) in qi.iter_mut().zip(qn.iter_mut()) {
                    let f = *y;
                    *y = s * *x + c * f;
                    *x = c * *x - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    Ok(EigenResult {
        lambda: order.iter().map(|&i| d[i]).collect(),
        q: q.select_cols(&order),
        merges: Vec::new(),
        flops: FlopTotals::default(),
    })
}

/// `Qblock * Qprime`.
pub fn update_vectors_dense(qblock: &Mat, qprime: &Mat, flops: &FlopCounter) -> Result<Mat> {
    if qblock.cols() != qprime.rows() {
        return Err(Error::shape(format!("{} rows", qblock.cols()), qprime.rows()));
    }
    let mut out = Mat::zeros(qblock.rows(), qprime.cols());
    gemm(1.0, qblock, Op::N, qprime, Op::N, 0.0, &mut out);
    flops.gemm(Phase::DenseUpdate, qblock.rows(), qblock.cols(), qprime.cols());
    Ok(out)
}

/// Result of [`update_vectors_hss`].
#[derive(Debug, Clone)]
pub struct HssUpdate {
    pub q: Mat,
    /// Rank the final build was sized for; zero when the partition had a
    /// single leaf.
    pub rank: usize,
    pub max_rank: Option<usize>,
    pub fallback: bool,
}

/// `Qblock * C` through a randomized HSS approximation of `C`. Falls back to
/// the dense product when the partition degenerates to one leaf or the
/// interpolative decompositions keep running out of samples.
pub fn update_vectors_hss(
    qblock: &Mat,
    c: &CauchyEvecMatrix,
    cfg: &SolverConfig,
    seed: u64,
    flops: &FlopCounter,
) -> Result<HssUpdate> {
    let k = c.k();
    if qblock.cols() != k {
        return Err(Error::shape(format!("{k} columns"), qblock.cols()));
    }
    let dense = |rank, max_rank| -> Result<HssUpdate> {
        flops.add(Phase::DenseUpdate, FLOPS_PER_ENTRY * (k * k) as u64);
        Ok(HssUpdate {
            q: update_vectors_dense(qblock, &c.materialize(), flops)?,
            rank,
            max_rank,
            fallback: true,
        })
    };
    let (d, gamma, mu) = (c.poles(), c.gamma(), c.mu());
    let partition = build_partition(k, cfg.leaf_size, d, gamma, mu);
    let rank = estimate_rank(&partition, d, gamma, mu, cfg.rank_eps, cfg.rank_cap);
    if rank == 0 {
        return dense(0, None);
    }
    // A saturated build is retried once with the rank doubled.
    let mut attempt = rank;
    let mut last = None;
    for _ in 0..2 {
        let part = fit_partition(partition.clone(), attempt + cfg.oversample);
        if part.n_leaves() < 2 {
            break;
        }
        let params = HssParams::new(attempt, cfg.oversample, seed);
        let tree = rand_hss_construct(c, &part, &params, flops)?;
        if !tree.saturated {
            return Ok(HssUpdate {
                q: hss_matmul_right(qblock, &tree, flops)?,
                rank: attempt,
                max_rank: Some(tree.max_rank()),
                fallback: false,
            });
        }
        last = Some(tree.max_rank());
        attempt = (2 * attempt).min(cfg.rank_cap.max(rank + 1));
    }
    dense(attempt, last)
}

enum Plan {
    Leaf(SymTridiagonal),
    Node {
        left: Box<Plan>,
        right: Box<Plan>,
        rho: f64,
        theta: f64,
    },
}

fn plan(t: SymTridiagonal, base: usize, leaves: &mut usize) -> Result<Plan> {
    if t.n() <= base {
        *leaves += 1;
        return Ok(Plan::Leaf(t));
    }
    let (t1, t2, rho, theta) = split(&t, t.n() / 2)?;
    Ok(Plan::Node {
        left: Box::new(plan(t1, base, leaves)?),
        right: Box::new(plan(t2, base, leaves)?),
        rho,
        theta,
    })
}

fn take_leaves(p: Plan, out: &mut Vec<SymTridiagonal>) -> Shape {
    match p {
        Plan::Leaf(t) => {
            out.push(t);
            Shape::Leaf
        }
        Plan::Node { left, right, rho, theta } => {
            let l = take_leaves(*left, out);
            let r = take_leaves(*right, out);
            Shape::Node(Box::new(l), Box::new(r), rho, theta)
        }
    }
}

enum Shape {
    Leaf,
    Node(Box<Shape>, Box<Shape>, f64, f64),
}

struct Merger<'a> {
    cfg: &'a SolverConfig,
    flops: FlopCounter,
    merges: Vec<MergeRecord>,
    solved: std::vec::IntoIter<EigenResult>,
}

impl Merger<'_> {
    fn run(&mut self, s: &Shape) -> Result<(Vec<f64>, Mat)> {
        match s {
            Shape::Leaf => {
                let r = self.solved.next().expect("one result per leaf");
                Ok((r.lambda, r.q))
            }
            Shape::Node(l, r, rho, theta) => {
                let (l1, q1) = self.run(l)?;
                let (l2, q2) = self.run(r)?;
                self.merge_pair(&q1, &l1, &q2, &l2, *rho, *theta)
            }
        }
    }

    fn merge_pair(&mut self, q1: &Mat, l1: &[f64], q2: &Mat, l2: &[f64], rho: f64, theta: f64) -> Result<(Vec<f64>, Mat)> {
        let (n1, n2) = (l1.len(), l2.len());
        let n = n1 + n2;
        let before = self.flops.snapshot();
        let place = |perm: &[usize]| {
            let mut qs = Mat::zeros(n, n);
            for (s, &src) in perm.iter().enumerate() {
                if src < n1 {
                    qs.col_mut(s)[..n1].copy_from_slice(q1.col(src));
                } else {
                    qs.col_mut(s)[n1..].copy_from_slice(q2.col(src - n1));
                }
            }
            qs
        };

        if rho == 0.0 {
            let mut perm: Vec<usize> = (0..n).collect();
            let d: Vec<f64> = l1.iter().chain(l2).copied().collect();
            perm.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
            self.merges.push(MergeRecord {
                n,
                k: 0,
                deflated: n,
                hss_rank: None,
                hss_max_rank: None,
                fallback: false,
                flops: FlopTotals::default(),
            });
            return Ok((perm.iter().map(|&p| d[p]).collect(), place(&perm)));
        }

        let sys = merge(q1, l1, q2, l2, rho, theta)?;
        let defl = deflate(&sys.d, &sys.z, sys.rho, DEFLATION_SCALE)?;
        let full_perm: Vec<usize> = defl.permutation.iter().map(|&p| sys.perm[p]).collect();
        let mut qs = place(&full_perm);
        for g in &defl.rotations {
            let (ci, cj) = qs.col_pair_mut(g.i, g.j);
            for (x, y) in ci.iter_mut().zip(cj.iter_mut()) {
                let (a, b) = (*x, *y);
                *x = g.c * a + g.s * b;
                *y = -g.s * a + g.c * b;
            }
        }
        self.flops.add(Phase::DenseUpdate, 6 * (n * defl.rotations.len()) as u64);

        let k = defl.kept.k();
        let mut pairs: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n);
        let mut record = MergeRecord {
            n,
            k,
            deflated: defl.n_deflated,
            hss_rank: None,
            hss_max_rank: None,
            fallback: false,
            flops: FlopTotals::default(),
        };
        if k > 0 {
            let sol = solve_secular_counted(&defl.kept, &self.flops)?;
            let c = CauchyEvecMatrix::from_solution(&sol);
            let qk = qs.select_cols(&defl.kept_positions);
            let updated = if self.cfg.method == Method::AdcRand && k > self.cfg.hss_threshold {
                let salt = (self.merges.len() as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                let up = update_vectors_hss(&qk, &c, self.cfg, self.cfg.seed ^ salt, &self.flops)?;
                record.hss_rank = Some(up.rank);
                record.hss_max_rank = up.max_rank;
                record.fallback = up.fallback;
                up.q
            } else {
                self.flops.add(Phase::DenseUpdate, FLOPS_PER_ENTRY * (k * k) as u64);
                update_vectors_dense(&qk, &c.materialize(), &self.flops)?
            };
            for j in 0..k {
                pairs.push((sol.lambda[j], updated.col(j).to_vec()));
            }
        }
        for &(pos, val) in &defl.deflated_eigenvalues {
            pairs.push((val, qs.col(pos).to_vec()));
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut q = Mat::zeros(n, n);
        let mut lambda = Vec::with_capacity(n);
        for (j, (val, col)) in pairs.into_iter().enumerate() {
            lambda.push(val);
            q.col_mut(j).copy_from_slice(&col);
        }
        record.flops = self.flops.snapshot() - before;
        self.merges.push(record);
        Ok((lambda, q))
    }
}

/// Full eigendecomposition of `T`; eigenvalues ascending, eigenvectors in the
/// columns of `q`.
pub fn adc_solve(t: &SymTridiagonal, cfg: &SolverConfig) -> Result<EigenResult> {
    cfg.validate()?;
    if t.n() == 0 {
        return Err(Error::InvalidOrder {
            n: 0,
            reason: "tridiagonal matrix needs n >= 1",
        });
    }
    let mut n_leaves = 0;
    let p = plan(t.clone(), cfg.base_size, &mut n_leaves)?;
    let mut leaves = Vec::with_capacity(n_leaves);
    let shape = take_leaves(p, &mut leaves);
    // Bottom-level problems are independent; merges run in tree order.
    let solved: Vec<EigenResult> = leaves.par_iter().map(base_case_eig).collect::<Result<_>>()?;

    let mut m = Merger {
        cfg,
        flops: FlopCounter::new(),
        merges: Vec::new(),
        solved: solved.into_iter(),
    };
    let (lambda, q) = m.run(&shape)?;
    Ok(EigenResult {
        lambda,
        q,
        flops: m.flops.snapshot(),
        merges: m.merges,
    })
}
