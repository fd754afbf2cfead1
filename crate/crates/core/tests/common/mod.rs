//! Randomized property groups shared by the property and acceptance targets.
#![allow(dead_code)]

use hss_eig::cauchy::CauchyEvecMatrix;
use hss_eig::dc::split;
use hss_eig::flops::FlopCounter;
use hss_eig::hss::{build_partition, estimate_rank, fit_partition, rand_hss_construct, HssParams};
use hss_eig::matgen::SymTridiagonal;
use hss_eig::rng::GaussianRng;
use hss_eig::secular::{recompute_weights, solve_secular, stable_gap, RankOneSystem};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

pub const CASES: u32 = 256;

const EPS: f64 = f64::EPSILON;

fn run<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

/// Strictly ascending poles with gaps in `[0.01, 1)`, weights bounded away
/// from zero and `rho` in `[0.1, 10)`.
fn system() -> impl Strategy<Value = RankOneSystem> {
    (1usize..48, any::<u64>(), 0.1f64..10.0).prop_map(|(k, seed, rho)| {
        let mut g = GaussianRng::new(seed);
        let mut x = g.normal();
        let d = (0..k)
            .map(|_| {
                x += 0.01 + 0.99 * g.uniform();
                x
            })
            .collect();
        let z = (0..k)
            .map(|_| (0.05 + 0.95 * g.uniform()) * if g.uniform() < 0.5 { -1.0 } else { 1.0 })
            .collect();
        RankOneSystem::new(d, z, rho).unwrap()
    })
}

/// `d_i < lambda_i < d_{i+1}`, and `d_k < lambda_k <= d_k + rho |z|^2`.
pub fn interlacing(cases: u32) -> Result<(), String> {
    run(cases, system(), |sys| {
        let sol = solve_secular(&sys).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let (d, k) = (sys.d(), sys.k());
        for i in 0..k {
            prop_assert!(sol.gamma[i] > 0.0, "gamma_{} = {}", i, sol.gamma[i]);
            prop_assert!(sol.lambda[i] > d[i]);
            if i + 1 < k {
                prop_assert!(sol.mu[i] > 0.0);
                prop_assert!(sol.lambda[i] < d[i + 1]);
            } else {
                prop_assert!(sol.lambda[i] <= d[i] + sys.weight_sum() * (1.0 + 4.0 * EPS));
            }
        }
        prop_assert!(sol.lambda.windows(2).all(|w| w[0] < w[1]));
        Ok(())
    })
}

/// The recomputed weights make the computed roots exact eigenvalues: the
/// secular function of `(d, zhat)` vanishes at every root and the
/// eigenvector matrix has orthonormal columns.
pub fn lowner(cases: u32) -> Result<(), String> {
    run(cases, system(), |sys| {
        let sol = solve_secular(&sys).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let k = sys.k();
        let zhat = recompute_weights(&sol.d, &sol.gamma, &sol.mu, sys.z()).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(&zhat, &sol.zhat);
        for j in 0..k {
            let (mut f, mut scale) = (1.0f64, 1.0f64);
            for i in 0..k {
                let t = zhat[i] * zhat[i] / sol.gap(i, j);
                f += t;
                scale += t.abs();
            }
            prop_assert!(f.abs() <= 20.0 * k as f64 * EPS * scale, "root {} residual {:e}", j, f);
            prop_assert!(zhat[j].signum() == sys.z()[j].signum());
        }
        let c = CauchyEvecMatrix::from_solution(&sol).materialize();
        for a in 0..k {
            for b in 0..=a {
                let dot: f64 = c.col(a).iter().zip(c.col(b)).map(|(x, y)| x * y).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                prop_assert!((dot - want).abs() <= 20.0 * k as f64 * EPS, "({}, {}) {:e}", a, b, dot - want);
            }
        }
        Ok(())
    })
}

/// Each branch of the stable gap equals its defining expression, has the
/// sign dictated by interlacing and agrees with `d_i - lambda_j`.
pub fn stable_gaps(cases: u32) -> Result<(), String> {
    run(cases, system(), |sys| {
        let sol = solve_secular(&sys).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let (d, k) = (sys.d(), sys.k());
        for i in 0..k {
            for j in 0..k {
                let g = stable_gap(i, j, d, &sol.gamma, &sol.mu);
                if i <= j {
                    prop_assert_eq!(g, (d[i] - d[j]) - sol.gamma[j]);
                    prop_assert!(g < 0.0);
                } else {
                    prop_assert_eq!(g, (d[i] - d[j + 1]) + sol.mu[j]);
                    prop_assert!(g > 0.0);
                }
                let naive = d[i] - sol.lambda[j];
                let width = d[i].abs().max(sol.lambda[j].abs()).max(1.0);
                prop_assert!((g - naive).abs() <= 8.0 * EPS * width);
            }
            prop_assert_eq!(stable_gap(i, i, d, &sol.gamma, &sol.mu), -sol.gamma[i]);
        }
        Ok(())
    })
}

/// Splitting and adding the rank-one coupling back restores `T`. On dyadic
/// entries, where every sum is exact, the result is bit for bit; on generic
/// entries each diagonal entry is off by at most one rounding.
pub fn split_reassembly(cases: u32) -> Result<(), String> {
    let strategy = (2usize..80, any::<u64>(), any::<bool>())
        .prop_flat_map(|(n, seed, dyadic)| (Just(n), Just(seed), Just(dyadic), 1..n));
    run(cases, strategy, |(n, seed, dyadic, k)| {
        let mut g = GaussianRng::new(seed);
        let mut draw = |scale: f64| {
            let x = g.normal() * scale;
            if dyadic {
                (x * 64.0).round() / 64.0
            } else {
                x
            }
        };
        let a: Vec<f64> = (0..n).map(|_| draw(10.0)).collect();
        let b: Vec<f64> = (0..n - 1)
            .map(|i| if i % 7 == 3 { 0.0 } else { draw(1.0) })
            .collect();
        let t = SymTridiagonal::new(a, b).unwrap();
        let (t1, t2, rho, theta) = split(&t, k).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(rho >= 0.0 && (theta == 1.0 || theta == -1.0));
        let mut diag: Vec<f64> = t1.diag().iter().chain(t2.diag()).copied().collect();
        diag[k - 1] += rho;
        diag[k] += rho * theta * theta;
        let mut off: Vec<f64> = t1.offdiag().to_vec();
        off.push(rho * theta);
        off.extend_from_slice(t2.offdiag());
        // A zero coupling has theta = +1, so -0.0 comes back as +0.0.
        let same = |x: f64, y: f64| x.to_bits() == y.to_bits() || (x == 0.0 && y == 0.0);
        for (&x, &y) in off.iter().zip(t.offdiag()) {
            prop_assert!(same(x, y), "{:e} vs {:e}", x, y);
        }
        for (i, (&x, &y)) in diag.iter().zip(t.diag()).enumerate() {
            if dyadic || (i != k - 1 && i != k) {
                prop_assert!(same(x, y), "{:e} vs {:e}", x, y);
            } else {
                prop_assert!((x - y).abs() <= EPS * y.abs().max(rho));
            }
        }
        Ok(())
    })
}

/// Randomized trees pass the structural audit: postorder, contiguous leaf
/// coverage, nested skeletons and identity rows in every interpolation factor.
pub fn tree_audit(cases: u32) -> Result<(), String> {
    let strategy = (64usize..420, 16usize..120, any::<u64>(), 2.0f64..20.0);
    run(cases, strategy, |(k, leaf, seed, b)| {
        let mut g = GaussianRng::new(seed);
        let d: Vec<f64> = (1..=k).map(|i| i as f64 * (b - 1.0) / k as f64).collect();
        let sys = RankOneSystem::new(d, g.unit_vector(k), 1.0).unwrap();
        let c = CauchyEvecMatrix::from_solution(&solve_secular(&sys).map_err(|e| TestCaseError::fail(e.to_string()))?);
        let part = build_partition(k, leaf, c.poles(), c.gamma(), c.mu());
        let r = estimate_rank(&part, c.poles(), c.gamma(), c.mu(), 1e-16, 100).max(1);
        let part = fit_partition(part, r + 10);
        let tree = rand_hss_construct(&c, &part, &HssParams::new(r, 10, seed), &FlopCounter::new())
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
        let bad = tree.audit();
        prop_assert!(bad.is_empty(), "{:?}", bad);
        for (i, n) in tree.nodes.iter().enumerate() {
            if let Some([a, b]) = n.children {
                prop_assert!(a < b && b < i);
            }
        }
        prop_assert_eq!(tree.leaves().count(), part.n_leaves());
        Ok(())
    })
}
