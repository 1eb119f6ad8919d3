//! Net-forests: the net-tree hierarchy truncated at scale `t`.
//!
//! The roots are a greedy `(t, t)`-net of the input. Each root owns the points
//! assigned to it and carries its own compressed net-tree. All roots share one
//! level, and `Rel(u)` links nodes of similar scale that lie close together,
//! across trees as well as within them.
//!
//! Levels are integers with scale `TAU^level`. A node `v` covers its points
//! within `COVER_FACTOR * TAU^level(v)` and contains every point of its tree
//! within `PACK_FACTOR * TAU^level(parent(v))` of its representative.

mod check;
mod io;
pub(crate) mod io_helpers {
    pub(crate) use super::io::{field, num};
}
mod rel;
mod tree;

pub use check::{brute_rel, check_extract_net, check_forest, ForestCheck, NetCheck};
pub use io::{format_forest, parse_forest, read_forest};
#[cfg(test)]
pub(crate) use rel::rebuild_rel_scaled;
pub use rel::{augment_rel, build_root_rel};
pub use tree::build_cluster_tree;

use crate::error::{input, Result};
use crate::geometry::{dist, PointCloud};
use crate::lsh::{NearNeighbours, NeighbourStrategy};

pub const TAU: f64 = 11.0;
/// `2 TAU / (TAU - 1)`.
pub const COVER_FACTOR: f64 = 2.2;
/// `(TAU - 5) / (2 TAU (TAU - 1))`.
pub const PACK_FACTOR: f64 = 6.0 / 220.0;
/// Rel threshold in units of the node scale.
pub const REL_FACTOR: f64 = 14.0;
/// Root scale as a fraction of `t`: `(TAU - 1) / (2 TAU)`.
pub const ROOT_SCALE_FRACTION: f64 = 10.0 / 22.0;

/// `TAU^level`.
#[inline]
pub fn scale(level: i32) -> f64 {
    TAU.powi(level)
}

/// `floor(log_TAU((TAU - 1) / (2 TAU) * t))`, rounded up when within 1e-12
/// relative of an integer so that decimal inputs such as `t = 24.2` land on
/// the intended level.
pub fn root_level(t: f64) -> Result<i32> {
    if !(t > 0.0 && t.is_finite()) {
        return input("scale t must be positive and finite");
    }
    let x = ROOT_SCALE_FRACTION * t;
    let slack = x * (1.0 + 1e-12);
    let mut l = (x.ln() / TAU.ln()).floor() as i32;
    while scale(l + 1) <= slack {
        l += 1;
    }
    while scale(l) > slack {
        l -= 1;
    }
    Ok(l)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetNode {
    pub id: usize,
    pub rep: usize,
    pub level: i32,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub rel: Vec<usize>,
}

impl NetNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn is_root(&self) -> bool {
        self.parent.is_none()
    }
}

/// Greedy net: `netpoint[p]` is the net point assigned to `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetAssignment {
    pub netpoint: Vec<usize>,
}

/// Greedy `(t, t)`-net in ascending index order. Each new net point claims
/// every neighbour that is unassigned or strictly closer to it than to its
/// current net point, so ties stay with the earlier net point.
pub fn build_net(cloud: &PointCloud, t: f64, nn: &dyn NearNeighbours) -> Result<(NetAssignment, Vec<usize>)> {
    if !(t > 0.0) {
        return input("net radius must be positive");
    }
    if nn.len() != cloud.len() {
        return input("near-neighbour primitive indexes a different point set");
    }
    const UNSET: usize = usize::MAX;
    let mut netpoint = vec![UNSET; cloud.len()];
    let mut net = Vec::new();
    for p in 0..cloud.len() {
        if netpoint[p] != UNSET {
            continue;
        }
        netpoint[p] = p;
        net.push(p);
        for q in nn.near(p)? {
            let cur = netpoint[q];
            if cur == UNSET || cloud.dist(q, p) < cloud.dist(q, cur) {
                netpoint[q] = p;
            }
        }
    }
    Ok((NetAssignment { netpoint }, net))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetForest {
    n: usize,
    dim: usize,
    t: f64,
    root_level: i32,
    nodes: Vec<NetNode>,
    roots: Vec<usize>,
    leaf_of: Vec<usize>,
    tree_of: Vec<usize>,
}

impl NetForest {
    /// Net, per-cluster trees and Rel sets for `cloud` at scale `t`.
    pub fn build(cloud: &PointCloud, t: f64, strategy: &NeighbourStrategy) -> Result<Self> {
        use rayon::prelude::*;

        let level = root_level(t)?;
        let nn = strategy.build(cloud, t, 0)?;
        let (assign, net) = build_net(cloud, t, nn.as_ref())?;
        drop(nn);
        let mut slot = vec![usize::MAX; cloud.len()];
        for (i, &q) in net.iter().enumerate() {
            slot[q] = i;
        }
        let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); net.len()];
        for (p, &q) in assign.netpoint.iter().enumerate() {
            clusters[slot[q]].push(p);
        }
        let trees = net
            .par_iter()
            .zip(clusters.par_iter())
            .map(|(&rep, cluster)| build_cluster_tree(cloud, cluster, rep, level))
            .collect::<Result<Vec<_>>>()?;

        let mut nodes = Vec::with_capacity(trees.iter().map(Vec::len).sum());
        let mut roots = Vec::with_capacity(trees.len());
        for tree in trees {
            let base = nodes.len();
            roots.push(base);
            nodes.extend(tree.into_iter().map(|mut v| {
                v.id += base;
                v.parent = v.parent.map(|p| p + base);
                v.children.iter_mut().for_each(|c| *c += base);
                v
            }));
        }
        let mut forest = Self::from_nodes(cloud.len(), cloud.dim(), t, level, nodes)?;

        let net_cloud = cloud.subset(&net)?;
        let nn7 = strategy.build(&net_cloud, 7.0 * t, 1)?;
        let root_rel = build_root_rel(&net_cloud, t, nn7.as_ref())?;
        for (i, rel) in root_rel.into_iter().enumerate() {
            forest.nodes[roots[i]].rel = rel.into_iter().map(|j| roots[j]).collect();
        }
        augment_rel(&mut forest, cloud)?;
        Ok(forest)
    }

    /// Assemble a forest from an id-ordered node arena, checking that the
    /// parent and child links agree and that leaves are exactly the points.
    pub fn from_nodes(n: usize, dim: usize, t: f64, root_level: i32, nodes: Vec<NetNode>) -> Result<Self> {
        if !(t > 0.0) {
            return input("forest scale must be positive");
        }
        let mut leaf_of = vec![usize::MAX; n];
        let mut roots = Vec::new();
        for (i, v) in nodes.iter().enumerate() {
            if v.id != i {
                return input(format!("node {i} carries id {}", v.id));
            }
            if v.rep >= n {
                return input(format!("node {i} has representative {} out of range", v.rep));
            }
            match v.parent {
                None => {
                    if v.level != root_level {
                        return input(format!("root {i} is not at the root level"));
                    }
                    roots.push(i);
                }
                Some(p) => {
                    if p >= nodes.len() || !nodes[p].children.contains(&i) {
                        return input(format!("node {i} is not a child of its parent"));
                    }
                }
            }
            for &c in &v.children {
                if c >= nodes.len() || nodes[c].parent != Some(i) {
                    return input(format!("child {c} of node {i} does not point back"));
                }
            }
            if v.rel.iter().any(|&r| r >= nodes.len()) {
                return input(format!("node {i} has a Rel member out of range"));
            }
            if v.is_leaf() {
                if leaf_of[v.rep] != usize::MAX {
                    return input(format!("point {} has two leaves", v.rep));
                }
                leaf_of[v.rep] = i;
            }
        }
        if let Some(p) = leaf_of.iter().position(|&l| l == usize::MAX) {
            return input(format!("point {p} has no leaf"));
        }
        let mut tree_of = vec![usize::MAX; nodes.len()];
        let mut stack = roots.clone();
        for &r in &roots {
            tree_of[r] = r;
        }
        while let Some(v) = stack.pop() {
            for &c in &nodes[v].children {
                tree_of[c] = tree_of[v];
                stack.push(c);
            }
        }
        if tree_of.contains(&usize::MAX) {
            return input("node arena contains a cycle or unreachable node");
        }
        Ok(Self { n, dim, t, root_level, nodes, roots, leaf_of, tree_of })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn root_level(&self) -> i32 {
        self.root_level
    }

    pub fn nodes(&self) -> &[NetNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &NetNode {
        &self.nodes[id]
    }

    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    pub fn leaf_of(&self, p: usize) -> usize {
        self.leaf_of[p]
    }

    /// Root of the tree containing `id`.
    pub fn tree_of(&self, id: usize) -> usize {
        self.tree_of[id]
    }

    pub fn rel(&self, id: usize) -> &[usize] {
        &self.nodes[id].rel
    }

    pub(crate) fn set_rel(&mut self, id: usize, rel: Vec<usize>) {
        self.nodes[id].rel = rel;
    }

    /// Scale of a node: `TAU^level`, except roots, whose scale is
    /// `(TAU - 1) / (2 TAU) * t` so that their covering radius is exactly `t`.
    pub fn node_scale(&self, id: usize) -> f64 {
        let v = &self.nodes[id];
        if v.is_root() {
            ROOT_SCALE_FRACTION * self.t
        } else {
            scale(v.level)
        }
    }

    /// Guaranteed bound on the distance from the representative to any point
    /// of the node.
    pub fn cover_radius(&self, id: usize) -> f64 {
        if self.nodes[id].is_leaf() {
            0.0
        } else {
            COVER_FACTOR * self.node_scale(id)
        }
    }

    /// Guaranteed bound on the diameter of the node's point set.
    pub fn diam_bound(&self, id: usize) -> f64 {
        2.0 * self.cover_radius(id)
    }

    /// Rel threshold of a node.
    pub fn rel_radius(&self, id: usize) -> f64 {
        REL_FACTOR * self.node_scale(id)
    }

    /// Level of the parent, `i32::MAX` for roots.
    pub fn parent_level(&self, id: usize) -> i32 {
        self.nodes[id].parent.map_or(i32::MAX, |p| self.nodes[p].level)
    }

    /// Point set of a node in preorder of its leaves.
    pub fn points_of(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(v) = stack.pop() {
            let node = &self.nodes[v];
            if node.is_leaf() {
                out.push(node.rep);
            } else {
                stack.extend(node.children.iter().rev());
            }
        }
        out
    }

    /// Node ids of the subtree rooted at `id`, preorder.
    pub fn subtree(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(v) = stack.pop() {
            out.push(v);
            stack.extend(self.nodes[v].children.iter().rev());
        }
        out
    }

    /// Nodes `v` with `level(v) <= l < level(parent(v))`, where a leaf stands
    /// for its point at every level below its parent.
    pub fn cut(&self, l: i32) -> Result<Vec<usize>> {
        if l > self.root_level {
            return input(format!("level {l} is above the root level {}", self.root_level));
        }
        Ok((0..self.nodes.len())
            .filter(|&v| (self.nodes[v].level <= l || self.nodes[v].is_leaf()) && l < self.parent_level(v))
            .collect())
    }

    /// Representatives of [`NetForest::cut`]: a net of the input at scale
    /// `TAU^l`.
    pub fn extract_net(&self, l: i32) -> Result<Vec<usize>> {
        Ok(self.cut(l)?.into_iter().map(|v| self.nodes[v].rep).collect())
    }

    /// Distance between the representatives of two nodes.
    pub fn rep_dist(&self, cloud: &PointCloud, a: usize, b: usize) -> f64 {
        dist(cloud.point(self.nodes[a].rep), cloud.point(self.nodes[b].rep))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lsh::ExactNeighbours;

    fn line(xs: impl IntoIterator<Item = f64>) -> PointCloud {
        let rows: Vec<[f64; 1]> = xs.into_iter().map(|x| [x]).collect();
        PointCloud::from_rows(&rows).unwrap()
    }

    #[test]
    fn root_level_examples() {
        assert_eq!(root_level(2.2).unwrap(), 0);
        assert_eq!(root_level(24.2).unwrap(), 1);
        assert_eq!(root_level(1.0).unwrap(), -1);
        assert!(root_level(0.0).is_err());
        assert!(root_level(-3.0).is_err());
    }

    #[test]
    fn root_rel_threshold_fits_query_radius() {
        for i in 0..50 {
            let t = 10f64.powf(-6.0 + 12.0 * i as f64 / 49.0);
            let l = root_level(t).unwrap();
            assert!(REL_FACTOR * scale(l) <= 7.0 * t);
            assert!(REL_FACTOR * ROOT_SCALE_FRACTION * t <= 7.0 * t);
            assert!(scale(l) <= ROOT_SCALE_FRACTION * t * (1.0 + 1e-12));
            assert!(scale(l + 1) > ROOT_SCALE_FRACTION * t);
        }
    }

    #[test]
    fn greedy_net_on_a_line() {
        let c = line((0..=10).map(f64::from));
        let nn = ExactNeighbours::new(&c, 3.0);
        let (a, net) = build_net(&c, 3.0, &nn).unwrap();
        assert_eq!(net, vec![0, 4, 8]);
        assert_eq!(a.netpoint, vec![0, 0, 0, 4, 4, 4, 4, 8, 8, 8, 8]);
    }

    #[test]
    fn small_diameter_and_duplicates_give_one_net_point() {
        let c = line([0.5, 0.1, 0.9, 0.3]);
        let (a, net) = build_net(&c, 1.0, &ExactNeighbours::new(&c, 1.0)).unwrap();
        assert_eq!(net, vec![0]);
        assert!(a.netpoint.iter().all(|&q| q == 0));
        let c = line([2.0; 6]);
        let (a, net) = build_net(&c, 0.1, &ExactNeighbours::new(&c, 0.1)).unwrap();
        assert_eq!(net, vec![0]);
        assert!(a.netpoint.iter().all(|&q| q == 0));
    }

    #[test]
    fn build_rejects_bad_scale() {
        let c = line([0.0, 1.0]);
        assert!(NetForest::build(&c, 0.0, &NeighbourStrategy::Exact).is_err());
        assert!(NetForest::build(&c, f64::NAN, &NeighbourStrategy::Exact).is_err());
    }

    #[test]
    fn extract_net_ends() {
        let c = line([0.0, 0.05, 0.3, 1.0, 1.02, 5.0, 5.5]);
        let f = NetForest::build(&c, 1.0, &NeighbourStrategy::Exact).unwrap();
        let roots: Vec<usize> = f.roots().iter().map(|&r| f.node(r).rep).collect();
        assert_eq!(f.extract_net(f.root_level()).unwrap(), roots);
        let lowest = f.nodes().iter().map(|v| v.level).min().unwrap();
        let mut all = f.extract_net(lowest - 1).unwrap();
        all.sort_unstable();
        assert_eq!(all, (0..c.len()).collect::<Vec<_>>());
        assert!(f.extract_net(f.root_level() + 1).is_err());
    }
}
