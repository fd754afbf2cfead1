//! Hierarchically semiseparable approximation of Cauchy-like eigenvector
//! matrices: partitioning, rank estimation, randomized construction and
//! right multiplication.

use std::io::Write;
use std::ops::Range;

use crate::dense::Mat;
use crate::error::{Error, Result};

mod construct;
mod id;
mod multiply;

pub use construct::{rand_hss_construct, HssParams, DEFAULT_ID_TOL};
pub use id::{interpolative_decomp, Interpolation};
pub use multiply::{hss_matmul_right, hss_to_dense, DENSE_LIMIT};

/// Default estimate tolerance in the rank bound.
pub const DEFAULT_RANK_EPS: f64 = 1e-16;
/// Estimated ranks above this are clamped.
pub const DEFAULT_RANK_CAP: usize = 100;
/// Boundaries whose pole gap falls below this are moved.
pub const CLUSTER_DISTANCE: f64 = 1e-10;
/// Largest boundary move, in rows.
pub const MAX_BOUNDARY_SHIFT: usize = 5;

/// Contiguous leaf ranges; the leaf count is a power of two.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HssPartition {
    leaves: Vec<Range<usize>>,
    leaf_size: usize,
}

impl HssPartition {
    pub fn from_leaves(leaves: Vec<Range<usize>>, leaf_size: usize) -> Result<Self> {
        if leaves.is_empty() || !leaves.len().is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "leaf count {} is not a power of two",
                leaves.len()
            )));
        }
        let mut next = 0;
        for r in &leaves {
            if r.start != next || r.is_empty() {
                return Err(Error::InvalidArgument("leaves must be nonempty and contiguous".into()));
            }
            next = r.end;
        }
        Ok(HssPartition { leaves, leaf_size })
    }

    pub fn leaves(&self) -> &[Range<usize>] {
        &self.leaves
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn order(&self) -> usize {
        self.leaves.last().map_or(0, |r| r.end)
    }

    /// Levels below the root.
    pub fn depth(&self) -> usize {
        self.leaves.len().trailing_zeros() as usize
    }

    pub fn leaf_size(&self) -> usize {
        self.leaf_size
    }

    pub fn min_leaf(&self) -> usize {
        self.leaves.iter().map(|r| r.len()).min().unwrap_or(0)
    }

    /// First index of every leaf after the first.
    pub fn boundaries(&self) -> impl Iterator<Item = usize> + '_ {
        self.leaves[1..].iter().map(|r| r.start)
    }

    /// Merge sibling leaves, removing one level.
    pub fn coarsen(&self) -> HssPartition {
        if self.leaves.len() == 1 {
            return self.clone();
        }
        let leaves = self.leaves.chunks(2).map(|p| p[0].start..p[1].end).collect();
        HssPartition {
            leaves,
            leaf_size: self.leaf_size * 2,
        }
    }
}

/// Gap between the poles left of `s` and the roots right of it, or the other
/// way round, whichever is closer: `min(mu_{s-1}, d_s - d_{s-1} + gamma_s)`.
pub fn boundary_distance(s: usize, d: &[f64], gamma: &[f64], mu: &[f64]) -> f64 {
    mu[s - 1].min((d[s] - d[s - 1]) + gamma[s])
}

/// Near-equal leaves, `2^L >= ceil(k / m)` of them. A boundary whose distance
/// is below [`CLUSTER_DISTANCE`] moves by at most [`MAX_BOUNDARY_SHIFT`]
/// rows to the widest nearby gap.
pub fn build_partition(k: usize, m: usize, d: &[f64], gamma: &[f64], mu: &[f64]) -> HssPartition {
    assert!(k >= 1 && m >= 1, "partition needs k >= 1 and m >= 1");
    // Never more leaves than rows.
    let most = 1usize << (usize::BITS - 1 - k.leading_zeros());
    let n_leaves = k.div_ceil(m).next_power_of_two().min(most);
    let base = k / n_leaves;
    let extra = k % n_leaves;
    let mut bounds: Vec<usize> = (1..n_leaves).map(|t| t * base + t.min(extra)).collect();

    for b in 0..bounds.len() {
        let s = bounds[b];
        let here = boundary_distance(s, d, gamma, mu);
        if here >= CLUSTER_DISTANCE {
            continue;
        }
        let lo_limit = if b == 0 { 1 } else { bounds[b - 1] + 1 };
        let hi_limit = if b + 1 == bounds.len() { k - 1 } else { bounds[b + 1] - 1 };
        let lo = s.saturating_sub(MAX_BOUNDARY_SHIFT).max(lo_limit);
        let hi = (s + MAX_BOUNDARY_SHIFT).min(hi_limit);
        let mut best = (s, here);
        for cand in lo..=hi {
            let dist = boundary_distance(cand, d, gamma, mu);
            let closer = cand.abs_diff(s) < best.0.abs_diff(s);
            if dist > best.1 || (dist == best.1 && closer) {
                best = (cand, dist);
            }
        }
        bounds[b] = best.0;
    }

    let mut leaves = Vec::with_capacity(n_leaves);
    let mut start = 0;
    for &e in bounds.iter().chain(std::iter::once(&k)) {
        leaves.push(start..e);
        start = e;
    }
    HssPartition { leaves, leaf_size: m }
}

/// Terms needed for a sum-of-exponentials approximation of `1/x` on
/// `[1, ratio]` to accuracy `eps`: `ceil(ln(16/eps) ln(8 ratio) / pi^2)`.
pub fn rank_bound(ratio: f64, eps: f64) -> usize {
    let r = (16.0 / eps).ln() * (8.0 * ratio).ln() / (std::f64::consts::PI * std::f64::consts::PI);
    r.ceil().max(1.0) as usize
}

/// Largest [`rank_bound`] over neighbouring leaves, clamped to `cap`; zero
/// for a single-leaf partition, which means the dense path.
pub fn estimate_rank(
    partition: &HssPartition,
    d: &[f64],
    gamma: &[f64],
    mu: &[f64],
    eps: f64,
    cap: usize,
) -> usize {
    if partition.n_leaves() < 2 {
        return 0;
    }
    let k = d.len();
    let span = (d[k - 1] - d[0]) + gamma[k - 1];
    partition
        .boundaries()
        .map(|s| {
            let dist = boundary_distance(s, d, gamma, mu);
            if dist > 0.0 {
                rank_bound(span / dist, eps).min(cap)
            } else {
                cap
            }
        })
        .max()
        .unwrap_or(0)
        .min(cap)
}

/// Coarsen until `samples` columns fit in every leaf, or one leaf is left.
pub fn fit_partition(mut partition: HssPartition, samples: usize) -> HssPartition {
    while partition.n_leaves() > 1 && samples > partition.min_leaf() {
        partition = partition.coarsen();
    }
    partition
}

#[derive(Debug, Clone)]
pub struct HssNode {
    pub level: usize,
    pub range: Range<usize>,
    pub children: Option<[usize; 2]>,
    pub parent: Option<usize>,
    /// Leaves only.
    pub d: Option<Mat>,
    /// Row and column interpolation factors; absent at the root.
    pub u: Option<Mat>,
    pub v: Option<Mat>,
    /// Selected global rows and columns.
    pub row_skel: Vec<usize>,
    pub col_skel: Vec<usize>,
    /// Positions of the selected rows within the rows `u` acts on.
    pub row_local: Vec<usize>,
    pub col_local: Vec<usize>,
    /// `A(row_skel, sibling col_skel)`; absent at the root.
    pub b: Option<Mat>,
    pub row_saturated: bool,
    pub col_saturated: bool,
}

impl HssNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    pub fn row_rank(&self) -> usize {
        self.row_skel.len()
    }

    pub fn col_rank(&self) -> usize {
        self.col_skel.len()
    }
}

/// Nodes in postorder, root last.
#[derive(Debug, Clone)]
pub struct HssTree {
    pub nodes: Vec<HssNode>,
    pub k: usize,
    pub depth: usize,
    /// Rank estimate the samples were sized for.
    pub rank_estimate: usize,
    pub oversample: usize,
    /// Some interpolative decomposition ran out of sample columns.
    pub saturated: bool,
    pub max_interp_entry: f64,
}

impl HssTree {
    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn leaves(&self) -> impl Iterator<Item = (usize, &HssNode)> {
        self.nodes.iter().enumerate().filter(|(_, n)| n.is_leaf())
    }

    /// Largest skeleton size over all nodes.
    pub fn max_rank(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| n.row_rank().max(n.col_rank()))
            .max()
            .unwrap_or(0)
    }

    pub fn sibling(&self, i: usize) -> Option<usize> {
        let p = self.nodes[i].parent?;
        let [a, b] = self.nodes[p].children?;
        Some(if a == i { b } else { a })
    }

    /// Structural checks; returns every violation found.
    pub fn audit(&self) -> Vec<String> {
        let mut bad = Vec::new();
        let n = self.nodes.len();
        if n == 0 {
            return vec!["empty tree".into()];
        }
        let root = &self.nodes[n - 1];
        if root.parent.is_some() || root.range != (0..self.k) {
            bad.push("root must be last, parentless and cover 0..k".into());
        }
        let leaf_count = self.nodes.iter().filter(|x| x.is_leaf()).count();
        if !leaf_count.is_power_of_two() || leaf_count != 1 << self.depth {
            bad.push(format!("{leaf_count} leaves for depth {}", self.depth));
        }
        let mut expect = 0;
        for (i, node) in self.nodes.iter().enumerate() {
            if node.is_leaf() {
                if node.range.start != expect || node.range.is_empty() {
                    bad.push(format!("leaf {i} range {:?} breaks coverage", node.range));
                }
                expect = node.range.end;
                if node.level != self.depth {
                    bad.push(format!("leaf {i} at level {}", node.level));
                }
                match &node.d {
                    Some(d) if d.shape() == (node.range.len(), node.range.len()) => {}
                    _ => bad.push(format!("leaf {i} has a missing or misshapen D")),
                }
            }
            if let Some([a, b]) = node.children {
                if !(a < b && b < i) {
                    bad.push(format!("node {i} children {a},{b} break postorder"));
                    continue;
                }
                let (ra, rb) = (&self.nodes[a].range, &self.nodes[b].range);
                if ra.start != node.range.start || ra.end != rb.start || rb.end != node.range.end {
                    bad.push(format!("node {i} range is not the union of its children"));
                }
                for c in [a, b] {
                    if self.nodes[c].parent != Some(i) || self.nodes[c].level != node.level + 1 {
                        bad.push(format!("child {c} does not point back to {i}"));
                    }
                }
            }
            if i + 1 == n {
                continue;
            }
            // Generators of a non-root node.
            let (Some(u), Some(v), Some(b)) = (&node.u, &node.v, &node.b) else {
                bad.push(format!("node {i} lacks U, V or B"));
                continue;
            };
            let (rows_in, cols_in): (Vec<usize>, Vec<usize>) = match node.children {
                None => (node.range.clone().collect(), node.range.clone().collect()),
                Some([a, c]) => (
                    [&self.nodes[a].row_skel[..], &self.nodes[c].row_skel[..]].concat(),
                    [&self.nodes[a].col_skel[..], &self.nodes[c].col_skel[..]].concat(),
                ),
            };
            if u.shape() != (rows_in.len(), node.row_rank()) || v.shape() != (cols_in.len(), node.col_rank()) {
                bad.push(format!("node {i} U/V shapes disagree with skeletons"));
                continue;
            }
            for (sel, local, mat, cands, what) in [
                (&node.row_skel, &node.row_local, u, &rows_in, "U"),
                (&node.col_skel, &node.col_local, v, &cols_in, "V"),
            ] {
                if local.len() != sel.len() || local.iter().zip(sel).any(|(&l, &g)| cands.get(l) != Some(&g)) {
                    bad.push(format!("node {i} {what} skeleton is not drawn from its candidates"));
                    continue;
                }
                let ident = mat.select_rows(local);
                if ident != Mat::identity(sel.len()) {
                    bad.push(format!("node {i} {what} lacks an identity on its skeleton"));
                }
                if sel.iter().any(|g| !node.range.contains(g)) {
                    bad.push(format!("node {i} {what} skeleton leaves its range"));
                }
            }
            if let Some(s) = self.sibling(i) {
                if b.shape() != (node.row_rank(), self.nodes[s].col_rank()) {
                    bad.push(format!("node {i} B shape {:?}", b.shape()));
                }
            }
        }
        if expect != self.k {
            bad.push(format!("leaves cover 0..{expect}, not 0..{}", self.k));
        }
        bad
    }

    /// One CSV row per node.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "node,level,start,end,leaf,row_rank,col_rank,row_saturated,col_saturated")?;
        for (i, n) in self.nodes.iter().enumerate() {
            writeln!(
                out,
                "{i},{},{},{},{},{},{},{},{}",
                n.level,
                n.range.start,
                n.range.end,
                n.is_leaf(),
                n.row_rank(),
                n.col_rank(),
                n.row_saturated,
                n.col_saturated
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_gaps(k: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let d: Vec<f64> = (0..k).map(|i| i as f64).collect();
        (d, vec![0.5; k], vec![0.5; k])
    }

    #[test]
    fn exact_division() {
        let (d, g, m) = uniform_gaps(800);
        let p = build_partition(800, 200, &d, &g, &m);
        assert_eq!(p.leaves(), &[0..200, 200..400, 400..600, 600..800]);
        assert_eq!(p.depth(), 2);
    }

    #[test]
    fn padding_to_power_of_two() {
        let (d, g, m) = uniform_gaps(1000);
        let p = build_partition(1000, 200, &d, &g, &m);
        assert_eq!(p.n_leaves(), 8);
        assert!(p.leaves().iter().all(|r| r.len() == 125));
        let p = build_partition(1001, 200, &d.iter().copied().chain([1000.0]).collect::<Vec<_>>(), &[g.clone(), vec![0.5]].concat(), &[m.clone(), vec![0.5]].concat());
        let sizes: Vec<usize> = p.leaves().iter().map(|r| r.len()).collect();
        assert_eq!(sizes.iter().sum::<usize>(), 1001);
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn small_orders_give_single_leaf() {
        let (d, g, m) = uniform_gaps(3);
        assert_eq!(build_partition(3, 200, &d, &g, &m).n_leaves(), 1);
        assert_eq!(estimate_rank(&build_partition(3, 200, &d, &g, &m), &d, &g, &m, 1e-16, 100), 0);
    }

    #[test]
    fn clustered_boundary_moves_to_widest_gap() {
        // Poles 0..400 with a tight cluster around the midpoint 200.
        let k = 400;
        let mut d: Vec<f64> = (0..k).map(|i| i as f64).collect();
        for i in 197..203 {
            d[i] = 197.0 + (i - 197) as f64 * 1e-12;
        }
        // Gaps: gamma_i = mu_i = half the distance to the next pole.
        let mut gamma = vec![0.0; k];
        let mut mu = vec![0.0; k];
        for i in 0..k {
            let next = if i + 1 < k { d[i + 1] } else { d[i] + 1.0 };
            gamma[i] = 0.5 * (next - d[i]);
            mu[i] = 0.5 * (next - d[i]);
        }
        let p = build_partition(k, 200, &d, &gamma, &mu);
        // The boundary at 200 sits inside the cluster; the widest gap within
        // +-5 is the one after the cluster, at 203.
        assert_eq!(p.leaves()[1].start, 203);
        let dist = boundary_distance(203, &d, &gamma, &mu);
        assert!(dist > CLUSTER_DISTANCE);
    }

    #[test]
    fn worked_rank_example() {
        // Natural logs: ln(1.6e14) ln(16000) / pi^2 = 32.03..., so the
        // ceiling is 33.
        assert_eq!(rank_bound(2.0e3, 1e-13), 33);
    }

    #[test]
    fn estimate_is_capped() {
        let (d, g, mut m) = uniform_gaps(400);
        let p = HssPartition::from_leaves(vec![0..200, 200..400], 200).unwrap();
        // span 399.5, distance min(mu_199, 1 + gamma_200) = 0.5
        assert_eq!(estimate_rank(&p, &d, &g, &m, 1e-16, 100), rank_bound(799.0, 1e-16));
        m[199] = 1e-300;
        assert_eq!(estimate_rank(&p, &d, &g, &m, 1e-16, 100), 100);
    }

    #[test]
    fn coarsen_merges_pairs() {
        let p = HssPartition::from_leaves(vec![0..3, 3..5, 5..9, 9..10], 3).unwrap();
        assert_eq!(p.coarsen().leaves(), &[0..5, 5..10]);
        assert!(HssPartition::from_leaves(vec![0..3, 3..5, 5..9], 3).is_err());
        assert!(HssPartition::from_leaves(vec![0..3, 4..5], 3).is_err());
    }
}
