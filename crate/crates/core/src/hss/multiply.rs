//! Products with a compressed tree and dense reassembly.

use rayon::prelude::*;

use super::HssTree;
use crate::dense::{gemm, product, Mat, Op};
use crate::error::{Error, Result};
use crate::flops::{FlopCounter, Phase};

/// Largest order [`hss_to_dense`] will assemble.
pub const DENSE_LIMIT: usize = 4096;

fn level_ids(tree: &HssTree, level: usize) -> Vec<usize> {
    (0..tree.nodes.len()).filter(|&i| tree.nodes[i].level == level).collect()
}

/// `X A` for an `n x k` matrix `X`, with `A` given by its tree.
///
/// Upsweep: `G_i = X(:, I_i) U_i`. Downsweep: `F_i = G_sib B_sib` plus the
/// share of `F_parent V_parent^T` that lands on `i`. Leaves finish with
/// `X(:, I_t) D_t + F_t V_t^T`.
pub fn hss_matmul_right(x: &Mat, tree: &HssTree, flops: &FlopCounter) -> Result<Mat> {
    if x.cols() != tree.k {
        return Err(Error::shape(format!("{} columns", tree.k), x.cols()));
    }
    let n = x.rows();
    let ph = Phase::HssMult;
    let nodes = &tree.nodes;
    let mut out = Mat::zeros(n, tree.k);
    if nodes.len() == 1 {
        let d = nodes[0].d.as_ref().expect("single leaf stores D");
        gemm(1.0, x, Op::N, d, Op::N, 0.0, &mut out);
        flops.gemm(ph, n, tree.k, tree.k);
        return Ok(out);
    }

    let mut g: Vec<Option<Mat>> = (0..nodes.len()).map(|_| None).collect();
    for level in (1..=tree.depth).rev() {
        let done: Vec<(usize, Mat)> = level_ids(tree, level)
            .par_iter()
            .map(|&i| {
                let node = &nodes[i];
                let u = node.u.as_ref().expect("non-root node stores U");
                let inp = match node.children {
                    None => x.block(0..n, node.range.clone()),
                    Some([a, b]) => Mat::hstack(g[a].as_ref().unwrap(), g[b].as_ref().unwrap()),
                };
                flops.gemm(ph, n, u.rows(), u.cols());
                (i, product(&inp, Op::N, u, Op::N))
            })
            .collect();
        for (i, m) in done {
            g[i] = Some(m);
        }
    }

    let mut f: Vec<Option<Mat>> = (0..nodes.len()).map(|_| None).collect();
    for level in 1..=tree.depth {
        let done: Vec<(usize, Mat)> = level_ids(tree, level)
            .par_iter()
            .map(|&i| {
                let node = &nodes[i];
                let s = tree.sibling(i).expect("non-root node has a sibling");
                let bs = nodes[s].b.as_ref().expect("non-root node stores B");
                let mut fi = product(g[s].as_ref().unwrap(), Op::N, bs, Op::N);
                flops.gemm(ph, n, bs.rows(), bs.cols());
                let p = node.parent.unwrap();
                if let Some(fp) = &f[p] {
                    let vp = nodes[p].v.as_ref().unwrap();
                    let [a, _] = nodes[p].children.unwrap();
                    let off = if i == a { 0 } else { nodes[a].col_rank() };
                    let rows: Vec<usize> = (off..off + node.col_rank()).collect();
                    let share = vp.select_rows(&rows);
                    gemm(1.0, fp, Op::N, &share, Op::T, 1.0, &mut fi);
                    flops.gemm(ph, n, fp.cols(), share.rows());
                }
                (i, fi)
            })
            .collect();
        for (i, m) in done {
            f[i] = Some(m);
        }
    }

    let blocks: Vec<(usize, Mat)> = tree
        .leaves()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(i, node)| {
            let xt = x.block(0..n, node.range.clone());
            let d = node.d.as_ref().unwrap();
            let mut o = product(&xt, Op::N, d, Op::N);
            let v = node.v.as_ref().unwrap();
            gemm(1.0, f[i].as_ref().unwrap(), Op::N, v, Op::T, 1.0, &mut o);
            flops.gemm(ph, n, d.rows(), d.cols());
            flops.gemm(ph, n, v.cols(), v.rows());
            (node.range.start, o)
        })
        .collect();
    for (c0, o) in blocks {
        out.set_block(0, c0, &o);
    }
    Ok(out)
}

/// Dense matrix represented by the tree, assembled from expanded bases.
pub fn hss_to_dense(tree: &HssTree) -> Result<Mat> {
    if tree.k > DENSE_LIMIT {
        return Err(Error::TooLarge {
            what: "dense HSS assembly",
            n: tree.k,
            limit: DENSE_LIMIT,
        });
    }
    let nodes = &tree.nodes;
    let mut full_u: Vec<Option<Mat>> = (0..nodes.len()).map(|_| None).collect();
    let mut full_v: Vec<Option<Mat>> = (0..nodes.len()).map(|_| None).collect();
    let mut dense: Vec<Option<Mat>> = (0..nodes.len()).map(|_| None).collect();
    for (i, node) in nodes.iter().enumerate() {
        match node.children {
            None => {
                dense[i] = node.d.clone();
                full_u[i] = node.u.clone();
                full_v[i] = node.v.clone();
            }
            Some([a, b]) => {
                let (ua, ub) = (full_u[a].take().unwrap(), full_u[b].take().unwrap());
                let (va, vb) = (full_v[a].take().unwrap(), full_v[b].take().unwrap());
                let (ma, mb) = (nodes[a].range.len(), nodes[b].range.len());
                let mut m = Mat::zeros(ma + mb, ma + mb);
                m.set_block(0, 0, dense[a].as_ref().unwrap());
                m.set_block(ma, ma, dense[b].as_ref().unwrap());
                let upper = product(&ua.matmul(nodes[a].b.as_ref().unwrap()), Op::N, &vb, Op::T);
                let lower = product(&ub.matmul(nodes[b].b.as_ref().unwrap()), Op::N, &va, Op::T);
                m.set_block(0, ma, &upper);
                m.set_block(ma, 0, &lower);
                dense[a] = None;
                dense[b] = None;
                dense[i] = Some(m);
                if let (Some(u), Some(v)) = (&node.u, &node.v) {
                    let ex_u = block_diag(&ua, &ub).matmul(u);
                    let ex_v = block_diag(&va, &vb).matmul(v);
                    full_u[i] = Some(ex_u);
                    full_v[i] = Some(ex_v);
                }
            }
        }
    }
    Ok(dense.pop().flatten().expect("root assembled last"))
}

fn block_diag(a: &Mat, b: &Mat) -> Mat {
    let mut m = Mat::zeros(a.rows() + b.rows(), a.cols() + b.cols());
    m.set_block(0, 0, a);
    m.set_block(a.rows(), a.cols(), b);
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cauchy::CauchyEvecMatrix;
    use crate::hss::{build_partition, estimate_rank, fit_partition, rand_hss_construct, HssParams, HssPartition};
    use crate::rng::GaussianRng;
    use crate::secular::{solve_secular, RankOneSystem};

    fn setup(k: usize, seed: u64) -> CauchyEvecMatrix {
        let mut g = GaussianRng::new(seed);
        let d: Vec<f64> = (0..k).map(|i| (i as f64 + 0.2 + 0.6 * g.uniform()) / k as f64).collect();
        let sys = RankOneSystem::new(d, g.unit_vector(k), 1.0).unwrap();
        CauchyEvecMatrix::from_solution(&solve_secular(&sys).unwrap())
    }

    fn tree_for(c: &CauchyEvecMatrix, leaf: usize, seed: u64) -> HssTree {
        let p = build_partition(c.k(), leaf, c.poles(), c.gamma(), c.mu());
        let r = estimate_rank(&p, c.poles(), c.gamma(), c.mu(), 1e-16, 100);
        let p = fit_partition(p, r + 10);
        assert!(p.n_leaves() > 1);
        let f = FlopCounter::new();
        rand_hss_construct(c, &p, &HssParams::new(r.max(1), 10, seed), &f).unwrap()
    }

    #[test]
    fn reconstruction_is_accurate() {
        let c = setup(512, 11);
        let tree = tree_for(&c, 64, 1);
        assert!(tree.audit().is_empty(), "{:?}", tree.audit());
        let a = c.materialize();
        let h = hss_to_dense(&tree).unwrap();
        let err = h.max_abs_diff(&a) / a.norm_max();
        assert!(err <= 1e-10, "reconstruction error {err:e}, saturated {}", tree.saturated);
    }

    #[test]
    fn product_matches_assembly() {
        let c = setup(400, 12);
        let tree = tree_for(&c, 50, 2);
        let mut g = GaussianRng::new(5);
        let x = g.gaussian_mat(37, 400);
        let f = FlopCounter::new();
        let y = hss_matmul_right(&x, &tree, &f).unwrap();
        let h = hss_to_dense(&tree).unwrap();
        let expect = x.matmul(&h);
        assert!(y.max_abs_diff(&expect) <= 1e-12 * expect.norm_max());
        assert!(f.snapshot().hss_mult > 0);
        // And against the exact matrix.
        let exact = x.matmul(&c.materialize());
        assert!(y.max_abs_diff(&exact) <= 1e-9 * exact.norm_max());
    }

    #[test]
    fn single_leaf_is_dense() {
        let c = setup(40, 13);
        let p = HssPartition::from_leaves(vec![0..40], 40).unwrap();
        let f = FlopCounter::new();
        let tree = rand_hss_construct(&c, &p, &HssParams::new(1, 0, 0), &f).unwrap();
        assert!(tree.audit().is_empty());
        assert_eq!(hss_to_dense(&tree).unwrap(), c.materialize());
        let x = Mat::identity(40);
        let y = hss_matmul_right(&x, &tree, &f).unwrap();
        assert!(y.max_abs_diff(&c.materialize()) == 0.0);
    }

    #[test]
    fn shapes_are_checked() {
        let c = setup(256, 14);
        let tree = tree_for(&c, 8, 3);
        let f = FlopCounter::new();
        assert!(hss_matmul_right(&Mat::zeros(3, 63), &tree, &f).is_err());
        let p = build_partition(256, 8, c.poles(), c.gamma(), c.mu());
        assert!(rand_hss_construct(&c, &p, &HssParams::new(10, 10, 0), &f).is_err());
        assert!(rand_hss_construct(&c, &p, &HssParams::new(0, 4, 0), &f).is_err());
    }
}
