//! Randomized construction from row and column samples.

use std::ops::Range;

use rayon::prelude::*;

use super::id::{interpolative_decomp, Interpolation};
use super::{HssNode, HssPartition, HssTree};
use crate::cauchy::{CauchyEvecMatrix, FLOPS_PER_ENTRY};
use crate::dense::{gemm, product, Mat, Op};
use crate::error::{Error, Result};
use crate::flops::{FlopCounter, Phase};
use crate::rng::GaussianRng;

/// Relative Frobenius tolerance of every interpolative decomposition.
pub const DEFAULT_ID_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HssParams {
    /// Rank estimate `r`.
    pub rank: usize,
    /// Oversampling `p`; the samples have `r + p` columns.
    pub oversample: usize,
    pub seed: u64,
    pub id_tol: f64,
}

impl HssParams {
    pub fn new(rank: usize, oversample: usize, seed: u64) -> Self {
        HssParams {
            rank,
            oversample,
            seed,
            id_tol: DEFAULT_ID_TOL,
        }
    }

    pub fn samples(&self) -> usize {
        self.rank + self.oversample
    }
}

/// Compressed block rows and columns carried from a node to its parent.
struct Work {
    /// `Phi(I~, :)` and `Theta(J~, :)`.
    phi: Mat,
    theta: Mat,
    /// `V^T Omega` and `U^T Omega`, nested.
    yhat: Mat,
    zhat: Mat,
}

fn empty_node(level: usize, range: Range<usize>) -> HssNode {
    HssNode {
        level,
        range,
        children: None,
        parent: None,
        d: None,
        u: None,
        v: None,
        row_skel: Vec::new(),
        col_skel: Vec::new(),
        row_local: Vec::new(),
        col_local: Vec::new(),
        b: None,
        row_saturated: false,
        col_saturated: false,
    }
}

/// Full binary tree over the leaves, numbered in postorder.
fn topology(leaves: &[Range<usize>]) -> Vec<HssNode> {
    fn go(leaves: &[Range<usize>], level: usize, out: &mut Vec<HssNode>) -> usize {
        let range = leaves[0].start..leaves[leaves.len() - 1].end;
        if leaves.len() == 1 {
            out.push(empty_node(level, range));
            return out.len() - 1;
        }
        let (l, r) = leaves.split_at(leaves.len() / 2);
        let a = go(l, level + 1, out);
        let b = go(r, level + 1, out);
        let mut node = empty_node(level, range);
        node.children = Some([a, b]);
        out.push(node);
        let id = out.len() - 1;
        out[a].parent = Some(id);
        out[b].parent = Some(id);
        id
    }
    let mut out = Vec::with_capacity(2 * leaves.len() - 1);
    go(leaves, 0, &mut out);
    out
}

struct Compressed {
    u: Interpolation,
    v: Interpolation,
    row_skel: Vec<usize>,
    col_skel: Vec<usize>,
}

fn compress(phi: &Mat, theta: &Mat, rows_in: &[usize], cols_in: &[usize], params: &HssParams) -> Compressed {
    let s = params.samples();
    let u = interpolative_decomp(phi, params.id_tol, s);
    let v = interpolative_decomp(theta, params.id_tol, s);
    let row_skel = u.skeleton.iter().map(|&l| rows_in[l]).collect();
    let col_skel = v.skeleton.iter().map(|&l| cols_in[l]).collect();
    Compressed {
        u,
        v,
        row_skel,
        col_skel,
    }
}

fn install(node: &mut HssNode, c: Compressed) {
    node.row_saturated = c.u.saturated;
    node.col_saturated = c.v.saturated;
    node.row_local = c.u.skeleton.clone();
    node.col_local = c.v.skeleton.clone();
    node.row_skel = c.row_skel;
    node.col_skel = c.col_skel;
    node.u = Some(c.u.x);
    node.v = Some(c.v.x);
}

/// Randomized HSS approximation of `a` over `partition`.
///
/// One Gaussian `Omega` with `r + p` columns serves both samples
/// `Y = A Omega` and `Z = A^T Omega`. Leaves compress `Y_i - D_i Omega_i` and
/// `Z_i - D_i^T Omega_i`; parents compress the stacked skeleton rows with the
/// sibling contributions removed through `B`. A decomposition that used every
/// sample column marks the tree as saturated.
pub fn rand_hss_construct(
    a: &CauchyEvecMatrix,
    partition: &HssPartition,
    params: &HssParams,
    flops: &FlopCounter,
) -> Result<HssTree> {
    let k = a.k();
    if partition.order() != k {
        return Err(Error::shape(format!("partition of order {k}"), partition.order()));
    }
    let s = params.samples();
    if params.rank == 0 {
        return Err(Error::InvalidArgument("rank estimate must be positive".into()));
    }
    if partition.n_leaves() > 1 && s > partition.min_leaf() {
        return Err(Error::InvalidArgument(format!(
            "{s} samples exceed the smallest leaf ({} rows)",
            partition.min_leaf()
        )));
    }
    let mut nodes = topology(partition.leaves());
    let depth = partition.depth();
    let phase = Phase::HssConstruct;

    if nodes.len() == 1 {
        nodes[0].d = Some(a.block(0..k, 0..k));
        flops.add(phase, FLOPS_PER_ENTRY * (k * k) as u64);
        return Ok(HssTree {
            nodes,
            k,
            depth: 0,
            rank_estimate: params.rank,
            oversample: params.oversample,
            saturated: false,
            max_interp_entry: 0.0,
        });
    }

    let omega = GaussianRng::new(params.seed).gaussian_mat(k, s);
    let (y, z) = a.sample_both(&omega, flops, phase)?;

    let mut work: Vec<Option<Work>> = (0..nodes.len()).map(|_| None).collect();
    let mut max_entry = 0.0f64;

    for level in (1..=depth).rev() {
        let ids: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].level == level).collect();
        let results: Vec<(usize, Option<Mat>, Option<[Mat; 2]>, Compressed, Work)> = ids
            .par_iter()
            .map(|&i| {
                let node = &nodes[i];
                match node.children {
                    None => leaf_step(a, node.range.clone(), &omega, &y, &z, params, flops, i),
                    Some([c1, c2]) => {
                        let (w1, w2) = (work[c1].as_ref().unwrap(), work[c2].as_ref().unwrap());
                        parent_step(a, &nodes[c1], &nodes[c2], w1, w2, params, flops, i)
                    }
                }
            })
            .collect();
        for (i, d, bs, c, w) in results {
            max_entry = max_entry.max(c.u.max_entry).max(c.v.max_entry);
            if let Some([c1, c2]) = nodes[i].children {
                let [b1, b2] = bs.unwrap();
                nodes[c1].b = Some(b1);
                nodes[c2].b = Some(b2);
                work[c1] = None;
                work[c2] = None;
            }
            nodes[i].d = d;
            install(&mut nodes[i], c);
            work[i] = Some(w);
        }
    }

    // The root only couples its two children.
    let root = nodes.len() - 1;
    let [c1, c2] = nodes[root].children.expect("multi-leaf root has children");
    let b1 = a.gather(&nodes[c1].row_skel, &nodes[c2].col_skel);
    let b2 = a.gather(&nodes[c2].row_skel, &nodes[c1].col_skel);
    flops.add(phase, FLOPS_PER_ENTRY * (b1.as_slice().len() + b2.as_slice().len()) as u64);
    nodes[c1].b = Some(b1);
    nodes[c2].b = Some(b2);

    let saturated = nodes.iter().any(|n| n.row_saturated || n.col_saturated);
    Ok(HssTree {
        nodes,
        k,
        depth,
        rank_estimate: params.rank,
        oversample: params.oversample,
        saturated,
        max_interp_entry: max_entry,
    })
}

#[allow(clippy::too_many_arguments)]
fn leaf_step(
    a: &CauchyEvecMatrix,
    t: Range<usize>,
    omega: &Mat,
    y: &Mat,
    z: &Mat,
    params: &HssParams,
    flops: &FlopCounter,
    _id: usize,
) -> (usize, Option<Mat>, Option<[Mat; 2]>, Compressed, Work) {
    let s = params.samples();
    let m = t.len();
    let d = a.block(t.clone(), t.clone());
    let om = omega.block(t.clone(), 0..s);
    let mut phi = y.block(t.clone(), 0..s);
    gemm(-1.0, &d, Op::N, &om, Op::N, 1.0, &mut phi);
    let mut theta = z.block(t.clone(), 0..s);
    gemm(-1.0, &d, Op::T, &om, Op::N, 1.0, &mut theta);
    flops.add(Phase::HssConstruct, FLOPS_PER_ENTRY * (m * m) as u64);
    flops.gemm(Phase::HssConstruct, m, m, 2 * s);

    let idx: Vec<usize> = t.clone().collect();
    let c = compress(&phi, &theta, &idx, &idx, params);
    flops.add(Phase::HssConstruct, c.u.flops + c.v.flops);
    let yhat = product(&c.v.x, Op::T, &om, Op::N);
    let zhat = product(&c.u.x, Op::T, &om, Op::N);
    flops.gemm(Phase::HssConstruct, c.v.rank() + c.u.rank(), m, s);
    let w = Work {
        phi: phi.select_rows(&c.u.skeleton),
        theta: theta.select_rows(&c.v.skeleton),
        yhat,
        zhat,
    };
    (_id, Some(d), None, c, w)
}

#[allow(clippy::too_many_arguments)]
fn parent_step(
    a: &CauchyEvecMatrix,
    n1: &HssNode,
    n2: &HssNode,
    w1: &Work,
    w2: &Work,
    params: &HssParams,
    flops: &FlopCounter,
    id: usize,
) -> (usize, Option<Mat>, Option<[Mat; 2]>, Compressed, Work) {
    let ph = Phase::HssConstruct;
    let b1 = a.gather(&n1.row_skel, &n2.col_skel);
    let b2 = a.gather(&n2.row_skel, &n1.col_skel);
    flops.add(ph, FLOPS_PER_ENTRY * (b1.as_slice().len() + b2.as_slice().len()) as u64);
    let s = params.samples();

    // Phi = [Phi_1(I~_1) - B_1 Yhat_2; Phi_2(I~_2) - B_2 Yhat_1]
    let mut top = w1.phi.clone();
    gemm(-1.0, &b1, Op::N, &w2.yhat, Op::N, 1.0, &mut top);
    let mut bot = w2.phi.clone();
    gemm(-1.0, &b2, Op::N, &w1.yhat, Op::N, 1.0, &mut bot);
    let phi = Mat::vstack(&top, &bot);
    // Theta = [Theta_1(J~_1) - B_2^T Zhat_2; Theta_2(J~_2) - B_1^T Zhat_1]
    let mut top = w1.theta.clone();
    gemm(-1.0, &b2, Op::T, &w2.zhat, Op::N, 1.0, &mut top);
    let mut bot = w2.theta.clone();
    gemm(-1.0, &b1, Op::T, &w1.zhat, Op::N, 1.0, &mut bot);
    let theta = Mat::vstack(&top, &bot);
    flops.gemm(ph, b1.rows(), b1.cols(), s);
    flops.gemm(ph, b2.rows(), b2.cols(), s);
    flops.gemm(ph, b1.rows(), b1.cols(), s);
    flops.gemm(ph, b2.rows(), b2.cols(), s);

    let rows_in = [&n1.row_skel[..], &n2.row_skel[..]].concat();
    let cols_in = [&n1.col_skel[..], &n2.col_skel[..]].concat();
    let c = compress(&phi, &theta, &rows_in, &cols_in, params);
    flops.add(ph, c.u.flops + c.v.flops);
    let ys = Mat::vstack(&w1.yhat, &w2.yhat);
    let zs = Mat::vstack(&w1.zhat, &w2.zhat);
    let yhat = product(&c.v.x, Op::T, &ys, Op::N);
    let zhat = product(&c.u.x, Op::T, &zs, Op::N);
    flops.gemm(ph, c.v.rank(), ys.rows(), s);
    flops.gemm(ph, c.u.rank(), zs.rows(), s);
    let w = Work {
        phi: phi.select_rows(&c.u.skeleton),
        theta: theta.select_rows(&c.v.skeleton),
        yhat,
        zhat,
    };
    (id, None, Some([b1, b2]), c, w)
}
