//! Exhaustive invariant checks against brute force.

use super::{scale, NetForest, COVER_FACTOR, PACK_FACTOR};
use crate::geometry::{le_tol, PointCloud, REL_TOL};

/// Violation counts of one forest. Packing is checked against the points of
/// the node's own tree; `packing_global` counts the same test over all points
/// and is informational, since clusters split along nearest-net-point
/// boundaries.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ForestCheck {
    pub net_covering: usize,
    pub net_separation: usize,
    pub net_assignment: usize,
    pub partition: usize,
    pub structure: usize,
    pub covering: usize,
    pub packing: usize,
    pub packing_global: usize,
    pub rel_mismatch: usize,
    pub messages: Vec<String>,
}

impl ForestCheck {
    pub fn is_ok(&self) -> bool {
        self.net_covering
            + self.net_separation
            + self.net_assignment
            + self.partition
            + self.structure
            + self.covering
            + self.packing
            + self.rel_mismatch
            == 0
    }

    fn note(&mut self, msg: String) {
        if self.messages.len() < 20 {
            self.messages.push(msg);
        }
    }
}

/// Leaf-order interval of every node, so that `x in P_v` is a range test.
struct Ranges {
    pos: Vec<usize>,
    lo: Vec<usize>,
    hi: Vec<usize>,
}

impl Ranges {
    fn new(forest: &NetForest) -> Self {
        let m = forest.nodes().len();
        let (mut pos, mut lo, mut hi) = (vec![0; forest.n()], vec![0; m], vec![0; m]);
        let mut next = 0;
        for &r in forest.roots() {
            // Post-order pass: (node, expanded).
            let mut stack = vec![(r, false)];
            while let Some((v, expanded)) = stack.pop() {
                let node = forest.node(v);
                if node.is_leaf() {
                    pos[node.rep] = next;
                    lo[v] = next;
                    next += 1;
                    hi[v] = next;
                } else if expanded {
                    lo[v] = lo[node.children[0]];
                    hi[v] = hi[*node.children.last().expect("internal node")];
                } else {
                    stack.push((v, true));
                    stack.extend(node.children.iter().rev().map(|&c| (c, false)));
                }
            }
        }
        Self { pos, lo, hi }
    }

    fn contains(&self, v: usize, x: usize) -> bool {
        (self.lo[v]..self.hi[v]).contains(&self.pos[x])
    }
}

/// Structural, covering, packing and net checks; Rel is compared with
/// [`brute_rel`] when `with_rel` is set.
pub fn check_forest(cloud: &PointCloud, forest: &NetForest, with_rel: bool) -> ForestCheck {
    let mut out = ForestCheck::default();
    let t = forest.t();
    let roots = forest.roots();
    let ranges = Ranges::new(forest);

    // Roots: (t, t)-net, closest assignment, partition.
    let mut total = 0;
    for &r in roots {
        let rep = forest.node(r).rep;
        let pts = forest.points_of(r);
        total += pts.len();
        for &p in &pts {
            let d = cloud.dist(p, rep);
            if !le_tol(d, t) {
                out.net_covering += 1;
                out.note(format!("point {p} is {d} from its root rep {rep} (t = {t})"));
            }
            let best = roots.iter().map(|&s| cloud.dist(p, forest.node(s).rep)).fold(f64::INFINITY, f64::min);
            if !le_tol(d, best) {
                out.net_assignment += 1;
                out.note(format!("point {p} is not assigned to its closest root"));
            }
        }
    }
    for (i, &a) in roots.iter().enumerate() {
        for &b in &roots[i + 1..] {
            let d = forest.rep_dist(cloud, a, b);
            if !(d > t * (1.0 - REL_TOL)) {
                out.net_separation += 1;
                out.note(format!("roots {a} and {b} are {d} apart (t = {t})"));
            }
        }
    }
    if total != forest.n() || cloud.len() != forest.n() {
        out.partition += 1;
        out.note(format!("root point sets hold {total} points, expected {}", cloud.len()));
        return out;
    }

    for (id, v) in forest.nodes().iter().enumerate() {
        if let Some(p) = v.parent {
            let parent = forest.node(p);
            if v.level >= parent.level {
                out.structure += 1;
                out.note(format!("node {id} is not below its parent"));
            }
            if !v.is_leaf() && v.children.len() < 2 {
                out.structure += 1;
                out.note(format!("internal node {id} has a single child"));
            }
        }
        if !v.is_leaf() && !v.children.iter().any(|&c| forest.node(c).rep == v.rep) {
            out.structure += 1;
            out.note(format!("node {id} does not share its rep with a child"));
        }
        if v.is_leaf() {
            continue;
        }
        let bound = forest.cover_radius(id);
        for p in forest.points_of(id) {
            if !le_tol(cloud.dist(p, v.rep), bound) {
                out.covering += 1;
                out.note(format!("point {p} escapes the covering ball of node {id}"));
            }
        }
    }

    for (id, v) in forest.nodes().iter().enumerate() {
        let Some(p) = v.parent else { continue };
        let rho = PACK_FACTOR * scale(forest.node(p).level);
        let tree = forest.tree_of(id);
        for x in 0..cloud.len() {
            let d = cloud.dist(x, v.rep);
            if d >= rho * (1.0 - REL_TOL) || ranges.contains(id, x) || (d == 0.0 && v.is_leaf()) {
                continue;
            }
            if forest.tree_of(forest.leaf_of(x)) == tree {
                out.packing += 1;
                out.note(format!("point {x} lies in the packing ball of node {id} but not in its set"));
            } else {
                out.packing_global += 1;
            }
        }
    }

    if with_rel {
        let brute = brute_rel(cloud, forest);
        for (id, want) in brute.iter().enumerate() {
            if forest.rel(id) != want.as_slice() {
                out.rel_mismatch += 1;
                out.note(format!("Rel({id}) = {:?}, brute force gives {want:?}", forest.rel(id)));
            }
        }
    }
    out
}

/// `Rel(u)` for every node by scanning all pairs:
/// `level(v) <= level(u) < level(parent(v))` and rep distance within
/// [`NetForest::rel_radius`] of `u`. Leaves satisfy the lower bound at every
/// level.
pub fn brute_rel(cloud: &PointCloud, forest: &NetForest) -> Vec<Vec<usize>> {
    brute_rel_with(cloud, forest, |f, u| f.rel_radius(u))
}

pub(crate) fn brute_rel_with(
    cloud: &PointCloud,
    forest: &NetForest,
    radius: impl Fn(&NetForest, usize) -> f64,
) -> Vec<Vec<usize>> {
    let m = forest.nodes().len();
    (0..m)
        .map(|u| {
            let level = forest.node(u).level;
            let r = radius(forest, u);
            (0..m)
                .filter(|&v| {
                    (forest.node(v).level <= level || forest.node(v).is_leaf())
                        && level < forest.parent_level(v)
                        && forest.rep_dist(cloud, u, v) <= r
                })
                .collect()
        })
        .collect()
}

/// Covering and separation of an extracted net.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NetCheck {
    pub size: usize,
    pub covering: usize,
    /// Pairs from the same tree closer than the separation bound.
    pub separation: usize,
    /// Pairs from different trees closer than the separation bound.
    pub separation_global: usize,
}

impl NetCheck {
    pub fn is_ok(&self) -> bool {
        self.covering + self.separation == 0
    }
}

/// Checks [`NetForest::extract_net`] at level `l`: every point within
/// `COVER_FACTOR * TAU^l` of the net (`t` at the root level) and net points of
/// one tree at least `PACK_FACTOR * TAU^l` apart. Coincident points are
/// exempt from separation.
pub fn check_extract_net(cloud: &PointCloud, forest: &NetForest, l: i32) -> crate::Result<NetCheck> {
    let cut = forest.cut(l)?;
    let cover = if l == forest.root_level() { forest.t() } else { COVER_FACTOR * scale(l) };
    let sep = PACK_FACTOR * scale(l);
    let mut out = NetCheck { size: cut.len(), ..NetCheck::default() };
    for p in 0..cloud.len() {
        let best = cut.iter().map(|&v| cloud.dist(p, forest.node(v).rep)).fold(f64::INFINITY, f64::min);
        if !le_tol(best, cover) {
            out.covering += 1;
        }
    }
    for (i, &a) in cut.iter().enumerate() {
        for &b in &cut[i + 1..] {
            let d = forest.rep_dist(cloud, a, b);
            if d == 0.0 || d >= sep * (1.0 - REL_TOL) {
                continue;
            }
            if forest.tree_of(a) == forest.tree_of(b) {
                out.separation += 1;
            } else {
                out.separation_global += 1;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate, GenKind, GenParams};
    use crate::lsh::NeighbourStrategy;

    #[test]
    fn forests_pass_all_checks() {
        let cases = [
            GenParams::new(GenKind::Uniform, 200, 3, 1),
            GenParams::new(GenKind::Affine, 150, 6, 2).with_k(2),
            GenParams::new(GenKind::Clustered, 120, 4, 3).with_k(4).with_noise(0.05).with_spread(3.0),
        ];
        for p in cases {
            let c = generate(&p).unwrap();
            for t in [0.05, 0.2, 1.0] {
                let f = NetForest::build(&c, t, &NeighbourStrategy::Exact).unwrap();
                let r = check_forest(&c, &f, true);
                assert!(r.is_ok(), "{:?} t={t}: {r:?}", p.kind);
                let lowest = f.nodes().iter().map(|v| v.level).min().unwrap();
                for l in (lowest - 1)..=f.root_level() {
                    let n = check_extract_net(&c, &f, l).unwrap();
                    assert!(n.is_ok(), "{:?} t={t} l={l}: {n:?}", p.kind);
                }
            }
        }
    }

    #[test]
    fn detects_a_broken_rel_factor() {
        let c = generate(&GenParams::new(GenKind::Uniform, 150, 2, 5)).unwrap();
        let f = NetForest::build(&c, 0.3, &NeighbourStrategy::Exact).unwrap();
        let wrong = brute_rel_with(&c, &f, |f, u| f.rel_radius(u) * 13.0 / 14.0);
        let differs = wrong.iter().enumerate().any(|(u, w)| f.rel(u) != w.as_slice());
        assert!(differs);
    }

    #[test]
    fn detects_a_moved_point() {
        let c = generate(&GenParams::new(GenKind::Uniform, 60, 2, 6)).unwrap();
        let f = NetForest::build(&c, 0.2, &NeighbourStrategy::Exact).unwrap();
        let mut coords = c.coords().to_vec();
        coords[0] += 5.0;
        let moved = PointCloud::new(2, coords).unwrap();
        assert!(!check_forest(&moved, &f, false).is_ok());
    }
}
