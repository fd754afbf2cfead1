//! Rank-one modified diagonal eigenproblem `D + rho z z^T`.
//!
//! Deflation, the secular equation solved per root in a shifted variable,
//! Löwner recomputation of the weights and the explicit eigenvector columns.
//! Every distance `d_i - lambda_j` is rebuilt from a gap pair (`gamma`, `mu`)
//! and a difference of poles, never from a stored `lambda`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flops::{FlopCounter, Phase};

const EPS: f64 = f64::EPSILON;

/// Multiplier in the deflation tolerance `scale * eps * max(|d|, rho |z|^2)`.
pub const DEFLATION_SCALE: f64 = 8.0;

/// Rational iterations per root before falling back to bisection.
pub const MAX_RATIONAL_ITERATIONS: usize = 60;

const MAX_BISECTIONS: usize = 2200;

// Rough flop cost per pole per secular evaluation.
const FLOPS_PER_TERM: u64 = 6;

/// `diag(d) + rho z z^T` with strictly ascending `d` and nonzero `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneSystem {
    d: Vec<f64>,
    z: Vec<f64>,
    rho: f64,
}

impl RankOneSystem {
    /// An empty system is allowed; it is what remains when everything deflates.
    pub fn new(d: Vec<f64>, z: Vec<f64>, rho: f64) -> Result<Self> {
        if d.len() != z.len() {
            return Err(Error::shape(d.len(), z.len()));
        }
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::InvalidArgument(format!("rho must be positive, got {rho}")));
        }
        if !d.iter().chain(&z).all(|x| x.is_finite()) {
            return Err(Error::NonFinite("rank-one system"));
        }
        if d.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("poles must be strictly ascending".into()));
        }
        if z.iter().any(|&x| x == 0.0) {
            return Err(Error::InvalidArgument("weights must be nonzero".into()));
        }
        Ok(RankOneSystem { d, z, rho })
    }

    pub fn k(&self) -> usize {
        self.d.len()
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `rho * |z|^2`, also the distance from `d_k` to the virtual pole.
    pub fn weight_sum(&self) -> f64 {
        self.rho * self.z.iter().map(|x| x * x).sum::<f64>()
    }
}

/// Rotation in the plane of sorted positions `i` and `j`: the new weight at
/// `i` is `c z_i + s z_j` and the weight at `j` becomes zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Givens {
    pub i: usize,
    pub j: usize,
    pub c: f64,
    pub s: f64,
}

#[derive(Debug, Clone)]
pub struct DeflationOutcome {
    pub kept: RankOneSystem,
    /// `permutation[s]` is the input index placed at sorted position `s`.
    pub permutation: Vec<usize>,
    /// Applied in order, after sorting.
    pub rotations: Vec<Givens>,
    /// Sorted positions of the kept entries, in the order of `kept.d()`.
    pub kept_positions: Vec<usize>,
    /// `(sorted position, eigenvalue)` for every deflated entry.
    pub deflated_eigenvalues: Vec<(usize, f64)>,
    pub n_deflated: usize,
    pub tol: f64,
}

/// Sort `(d, z)` by `d` and remove the eigenpairs that need no secular solve.
///
/// A weight with `rho |z_j| <= tol` deflates at `d_j`. Two neighbours whose
/// coupling after a rotation, `|c s (d_j - d_p)|`, is below `tol` are rotated
/// so that the second weight vanishes. `tol = eps_scale * eps * max(max |d|,
/// rho |z|^2)`; [`DEFLATION_SCALE`] is the usual choice.
pub fn deflate(d: &[f64], z: &[f64], rho: f64, eps_scale: f64) -> Result<DeflationOutcome> {
    let n = d.len();
    if n == 0 || z.len() != n {
        return Err(Error::shape(format!("{n} weights, n >= 1"), z.len()));
    }
    if !d.iter().chain(z).all(|x| x.is_finite()) {
        return Err(Error::NonFinite("deflation input"));
    }
    if !(rho.is_finite() && rho > 0.0) || !(eps_scale > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "deflation needs rho > 0 and eps_scale > 0, got {rho} and {eps_scale}"
        )));
    }

    let mut permutation: Vec<usize> = (0..n).collect();
    permutation.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let mut ds: Vec<f64> = permutation.iter().map(|&p| d[p]).collect();
    let mut zs: Vec<f64> = permutation.iter().map(|&p| z[p]).collect();

    let dmax = ds.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let wsum = rho * zs.iter().map(|x| x * x).sum::<f64>();
    let tol = eps_scale * EPS * dmax.max(wsum);

    let mut rotations = Vec::new();
    let mut deflated = Vec::new();
    let mut kept_positions = Vec::with_capacity(n);
    let mut prev: Option<usize> = None;

    for j in 0..n {
        if rho * zs[j].abs() <= tol {
            zs[j] = 0.0;
            deflated.push((j, ds[j]));
            continue;
        }
        if let Some(p) = prev {
            let tau = zs[p].hypot(zs[j]);
            let c = zs[p] / tau;
            let s = zs[j] / tau;
            if (c * s * (ds[j] - ds[p])).abs() <= tol {
                let (dp, dj) = (ds[p], ds[j]);
                ds[p] = c * c * dp + s * s * dj;
                ds[j] = s * s * dp + c * c * dj;
                zs[p] = tau;
                zs[j] = 0.0;
                rotations.push(Givens { i: p, j, c, s });
                deflated.push((j, ds[j]));
                continue;
            }
            kept_positions.push(p);
        }
        prev = Some(j);
    }
    if let Some(p) = prev {
        kept_positions.push(p);
    }

    let kd: Vec<f64> = kept_positions.iter().map(|&p| ds[p]).collect();
    let kz: Vec<f64> = kept_positions.iter().map(|&p| zs[p]).collect();
    let kept = RankOneSystem::new(kd, kz, rho)?;
    Ok(DeflationOutcome {
        n_deflated: deflated.len(),
        kept,
        permutation,
        rotations,
        kept_positions,
        deflated_eigenvalues: deflated,
        tol,
    })
}

/// Roots of the secular equation with their gap pairs, recomputed weights
/// (which absorb `sqrt(rho)`) and column normalizers.
#[derive(Debug, Clone, PartialEq)]
pub struct SecularSolution {
    pub d: Vec<f64>,
    pub rho: f64,
    pub lambda: Vec<f64>,
    /// `lambda_i - d_i`.
    pub gamma: Vec<f64>,
    /// `d_{i+1} - lambda_i`; the last entry measures against `d_k + rho |z|^2`.
    pub mu: Vec<f64>,
    pub zhat: Vec<f64>,
    pub v: Vec<f64>,
    /// Secular-function evaluations per root.
    pub evaluations: Vec<usize>,
}

impl SecularSolution {
    pub fn k(&self) -> usize {
        self.d.len()
    }

    #[inline]
    pub fn gap(&self, i: usize, j: usize) -> f64 {
        stable_gap(i, j, &self.d, &self.gamma, &self.mu)
    }
}

/// `d_i - lambda_j` rebuilt from the gap pair of root `j`.
#[inline]
pub fn stable_gap(i: usize, j: usize, d: &[f64], gamma: &[f64], mu: &[f64]) -> f64 {
    if i <= j {
        (d[i] - d[j]) - gamma[j]
    } else {
        (d[i] - d[j + 1]) + mu[j]
    }
}

struct Root {
    lambda: f64,
    gamma: f64,
    mu: f64,
    evaluations: usize,
}

/// Secular-function pieces at `origin + tau`: poles `0..=split` go to `psi`,
/// the rest to `phi`. Also returns a running-sum rounding estimate.
struct Eval {
    psi: f64,
    dpsi: f64,
    phi: f64,
    dphi: f64,
    err: f64,
}

impl Eval {
    fn value(&self) -> f64 {
        1.0 + self.psi + self.phi
    }
}

fn evaluate(d: &[f64], w: &[f64], origin: f64, tau: f64, split: usize) -> Eval {
    let (mut psi, mut dpsi, mut err) = (0.0, 0.0, 0.0);
    for j in 0..=split {
        let del = (d[j] - origin) - tau;
        let t = w[j] / del;
        psi += t;
        dpsi += t / del;
        err += psi.abs();
    }
    let (mut phi, mut dphi) = (0.0, 0.0);
    for j in split + 1..d.len() {
        let del = (d[j] - origin) - tau;
        let t = w[j] / del;
        phi += t;
        dphi += t / del;
        err += phi.abs();
    }
    err += 8.0 * (phi - psi) + 2.0;
    Eval {
        psi,
        dpsi,
        phi,
        dphi,
        err,
    }
}

/// Root of `C + q/(a - eta) + s/(b - eta) = 0` in the open interval `(a, b)`.
fn two_pole_step(c: f64, q: f64, s: f64, a: f64, b: f64, g: f64) -> Option<f64> {
    let bb = c * (a + b) + q + s;
    let cc = a * b * g;
    let disc = bb * bb - 4.0 * c * cc;
    if !(disc >= 0.0) {
        return None;
    }
    let t = bb + if bb >= 0.0 { disc.sqrt() } else { -disc.sqrt() };
    let inside = |eta: f64| eta.is_finite() && eta > a && eta < b;
    let small = (t != 0.0).then(|| 2.0 * cc / t).filter(|&e| inside(e));
    let large = (c != 0.0).then(|| t / (2.0 * c)).filter(|&e| inside(e));
    match (small, large) {
        (Some(x), Some(y)) => Some(if x.abs() <= y.abs() { x } else { y }),
        (x, y) => x.or(y),
    }
}

fn solve_root(d: &[f64], w: &[f64], wsum: f64, i: usize) -> Result<Root> {
    let k = d.len();
    let last = i + 1 == k;

    // Origin pole, bracket (lo, hi) on tau and the starting point.
    let (io, mut lo, mut hi, gap) = if last {
        (i, 0.0, wsum, wsum)
    } else {
        let gap = d[i + 1] - d[i];
        let mid = evaluate(d, w, d[i], 0.5 * gap, i);
        if mid.value() >= 0.0 {
            (i, 0.0, 0.5 * gap, gap)
        } else {
            (i + 1, -0.5 * gap, 0.0, gap)
        }
    };
    let origin = d[io];
    // Left and right poles of the interval in the shifted variable.
    let pole_a = d[i] - origin;
    let pole_b = if last { f64::INFINITY } else { d[i + 1] - origin };

    let mut tau = if io == i { hi } else { lo };
    let mut evaluations = if last { 0 } else { 1 };
    let mut converged = false;

    for _ in 0..MAX_RATIONAL_ITERATIONS {
        let e = evaluate(d, w, origin, tau, i);
        evaluations += 1;
        let g = e.value();
        if g.abs() <= EPS * e.err {
            converged = true;
            break;
        }
        if g < 0.0 {
            lo = tau;
        } else {
            hi = tau;
        }
        if hi - lo <= 4.0 * EPS * lo.abs().max(hi.abs()) {
            converged = true;
            break;
        }
        let da = pole_a - tau;
        let step = if last {
            let q = e.dpsi * da * da;
            let c = 1.0 + e.psi - q / da;
            (c > 0.0).then(|| da + q / c)
        } else {
            let db = pole_b - tau;
            let q = e.dpsi * da * da;
            let s = e.dphi * db * db;
            let c = 1.0 + (e.psi - q / da) + (e.phi - s / db);
            two_pole_step(c, q, s, da, db, g)
        };
        let mut next = match step {
            Some(eta) => tau + eta,
            None => 0.5 * (lo + hi),
        };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let moved = (next - tau).abs();
        tau = next;
        if moved <= 2.0 * EPS * tau.abs() {
            converged = true;
            break;
        }
    }

    if !converged {
        for _ in 0..MAX_BISECTIONS {
            let e = evaluate(d, w, origin, tau, i);
            evaluations += 1;
            let g = e.value();
            if g.abs() <= EPS * e.err {
                converged = true;
                break;
            }
            if g < 0.0 {
                lo = tau;
            } else {
                hi = tau;
            }
            if hi - lo <= 4.0 * EPS * lo.abs().max(hi.abs()) {
                converged = true;
                break;
            }
            tau = 0.5 * (lo + hi);
        }
    }

    let (gamma, mu) = if last {
        (tau, wsum - tau)
    } else if io == i {
        (tau, gap - tau)
    } else {
        (gap + tau, -tau)
    };
    let bracketed = gamma > 0.0 && (last || mu > 0.0) && tau.is_finite();
    if !converged || !bracketed {
        return Err(Error::SecularBracket { index: i });
    }
    Ok(Root {
        lambda: origin + tau,
        gamma,
        mu,
        evaluations,
    })
}

pub fn solve_secular(sys: &RankOneSystem) -> Result<SecularSolution> {
    solve_secular_counted(sys, &FlopCounter::new())
}

/// Roots, Löwner weights and normalizers, charging the secular phase.
pub fn solve_secular_counted(sys: &RankOneSystem, flops: &FlopCounter) -> Result<SecularSolution> {
    let k = sys.k();
    let d = sys.d();
    let w: Vec<f64> = sys.z().iter().map(|z| sys.rho() * z * z).collect();
    let wsum = sys.weight_sum();

    let roots: Vec<Root> = (0..k)
        .into_par_iter()
        .map(|i| solve_root(d, &w, wsum, i))
        .collect::<Result<_>>()?;
    let evals: usize = roots.iter().map(|r| r.evaluations).sum();
    flops.add(Phase::Secular, evals as u64 * k as u64 * FLOPS_PER_TERM);

    let mut sol = SecularSolution {
        d: d.to_vec(),
        rho: sys.rho(),
        lambda: roots.iter().map(|r| r.lambda).collect(),
        gamma: roots.iter().map(|r| r.gamma).collect(),
        mu: roots.iter().map(|r| r.mu).collect(),
        evaluations: roots.iter().map(|r| r.evaluations).collect(),
        zhat: Vec::new(),
        v: Vec::new(),
    };
    sol.zhat = recompute_weights(d, &sol.gamma, &sol.mu, sys.z())?;
    sol.v = column_normalizers(d, &sol.gamma, &sol.mu, &sol.zhat);
    flops.add(Phase::Secular, 8 * (k as u64) * (k as u64));
    Ok(sol)
}

/// Löwner weights: the vector whose rank-one system has exactly the computed
/// roots as eigenvalues. Magnitudes take the sign of `orig_z`.
pub fn recompute_weights(d: &[f64], gamma: &[f64], mu: &[f64], orig_z: &[f64]) -> Result<Vec<f64>> {
    let k = d.len();
    (0..k)
        .into_par_iter()
        .map(|i| {
            // lambda_i - d_i, then the ratios (lambda_j - d_i) / (d_j - d_i).
            let mut prod = gamma[i];
            for j in 0..k {
                if j != i {
                    prod *= -stable_gap(i, j, d, gamma, mu) / (d[j] - d[i]);
                }
            }
            if !(prod > 0.0) || !prod.is_finite() {
                return Err(Error::NegativeRadicand { index: i, value: prod });
            }
            Ok(prod.sqrt().copysign(orig_z[i]))
        })
        .collect()
}

/// `v_j = 1 / |(zhat_i / (d_i - lambda_j))_i|`.
pub fn column_normalizers(d: &[f64], gamma: &[f64], mu: &[f64], zhat: &[f64]) -> Vec<f64> {
    let k = d.len();
    (0..k)
        .into_par_iter()
        .map(|j| {
            let sq: f64 = (0..k)
                .map(|i| {
                    let e = zhat[i] / stable_gap(i, j, d, gamma, mu);
                    e * e
                })
                .sum();
            if sq.is_finite() && sq > 0.0 {
                1.0 / sq.sqrt()
            } else {
                let col: Vec<f64> = (0..k)
                    .map(|i| zhat[i] / stable_gap(i, j, d, gamma, mu))
                    .collect();
                1.0 / crate::dense::norm2(&col)
            }
        })
        .collect()
}

/// Unit eigenvector for root `j` of the recomputed system.
pub fn eigvec_column(sol: &SecularSolution, j: usize) -> Vec<f64> {
    (0..sol.k())
        .map(|i| sol.zhat[i] * sol.v[j] / sol.gap(i, j))
        .collect()
}

/// `f(lambda_j)` for the original weights, every denominator taken from the
/// gap pair.
pub fn residual(sys: &RankOneSystem, sol: &SecularSolution, j: usize) -> f64 {
    1.0 + sys.rho()
        * sys
            .z()
            .iter()
            .enumerate()
            .map(|(i, z)| z * z / sol.gap(i, j))
            .sum::<f64>()
}
