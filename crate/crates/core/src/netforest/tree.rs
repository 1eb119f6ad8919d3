//! Compressed net-tree of one cluster, built bottom-up from nested greedy
//! nets.
//!
//! Layer 0 holds every point. Layer `i > 0` is a greedy net of layer `i - 1`
//! at radius `TAU^j`, `j = j_lo - 1 + i`, scanned with the root representative
//! first, and every layer point is attached to its nearest net point (ties to
//! the earliest). `TAU^j_lo` is below the closest distinct pair, so layer 1
//! only merges coincident points. Chains of single-child nodes are then
//! collapsed: an internal node takes the lowest level of its chain and a leaf
//! sits one level below its parent.
//!
//! Distances climb by at most `TAU^i` per layer, so a level-`j` node covers its
//! points within `1.1 TAU^j`. A point within `0.4 TAU^j` of a level-`j`
//! representative `q` reaches `q` by layer `j`: below that its ancestor stays
//! closer to `q` than half the net separation. This gives the packing bound.

use super::{scale, NetNode};
use crate::error::{input, Result};
use crate::geometry::PointCloud;

/// Tree over `cluster` rooted at `root_rep` on level `root_level`; node ids
/// are local, with the root at 0 and the rest in preorder.
pub fn build_cluster_tree(
    cloud: &PointCloud,
    cluster: &[usize],
    root_rep: usize,
    root_level: i32,
) -> Result<Vec<NetNode>> {
    if !cluster.contains(&root_rep) {
        return input("root representative is not in its cluster");
    }
    if cluster.len() == 1 {
        return Ok(vec![NetNode {
            id: 0,
            rep: root_rep,
            level: root_level,
            parent: None,
            children: vec![],
            rel: vec![],
        }]);
    }
    let mut order = Vec::with_capacity(cluster.len());
    order.push(root_rep);
    let mut rest: Vec<usize> = cluster.iter().copied().filter(|&p| p != root_rep).collect();
    rest.sort_unstable();
    order.extend(rest);

    let j_lo = match min_positive_distance(cloud, &order) {
        Some(d) => level_below(d).min(root_level),
        None => root_level,
    };
    let mut layers = vec![order];
    // parents[i][a]: index in layer i + 1 of the parent of layers[i][a].
    let mut parents: Vec<Vec<usize>> = Vec::new();
    for j in j_lo..root_level {
        let prev = layers.last().expect("layer 0 exists");
        let (net, up) = net_layer(cloud, prev, scale(j));
        parents.push(up);
        layers.push(net);
    }
    let top = layers.len() - 1;
    parents.push(vec![0; layers[top].len()]);
    layers.push(vec![root_rep]);

    let mut kids: Vec<Vec<Vec<usize>>> = layers.iter().map(|l| vec![Vec::new(); l.len()]).collect();
    for (i, up) in parents.iter().enumerate() {
        for (a, &p) in up.iter().enumerate() {
            kids[i + 1][p].push(a);
        }
    }
    let level_of = |i: usize| j_lo - 1 + i as i32;
    let root_layer = layers.len() - 1;
    debug_assert_eq!(level_of(root_layer), root_level);

    let mut nodes =
        vec![NetNode { id: 0, rep: root_rep, level: root_level, parent: None, children: vec![], rel: vec![] }];
    // Explicit stack of (layer, index, parent id); children pushed in reverse
    // so ids come out in preorder.
    let mut stack: Vec<(usize, usize, usize)> =
        kids[root_layer][0].iter().rev().map(|&a| (root_layer - 1, a, 0)).collect();
    while let Some((chain_top, a0, parent)) = stack.pop() {
        let (mut i, mut a) = (chain_top, a0);
        while i > 0 && kids[i][a].len() == 1 {
            a = kids[i][a][0];
            i -= 1;
        }
        let id = nodes.len();
        let level = if i == 0 { level_of(chain_top) } else { level_of(i) };
        nodes.push(NetNode { id, rep: layers[i][a], level, parent: Some(parent), children: vec![], rel: vec![] });
        nodes[parent].children.push(id);
        if i > 0 {
            stack.extend(kids[i][a].iter().rev().map(|&b| (i - 1, b, id)));
        }
    }
    Ok(nodes)
}

/// Largest `j` with `TAU^j < d`.
fn level_below(d: f64) -> i32 {
    let mut j = (d.ln() / super::TAU.ln()).ceil() as i32;
    while scale(j) >= d {
        j -= 1;
    }
    while scale(j + 1) < d {
        j += 1;
    }
    j
}

fn min_positive_distance(cloud: &PointCloud, ids: &[usize]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for (k, &a) in ids.iter().enumerate() {
        for &b in &ids[k + 1..] {
            let d = cloud.dist(a, b);
            if d > 0.0 && best.is_none_or(|m| d < m) {
                best = Some(d);
            }
        }
    }
    best
}

/// Greedy net of `prev` at radius `r` and the nearest-net-point parent of
/// every element of `prev`.
fn net_layer(cloud: &PointCloud, prev: &[usize], r: f64) -> (Vec<usize>, Vec<usize>) {
    let mut net: Vec<usize> = Vec::new();
    for &p in prev {
        if net.iter().all(|&q| cloud.dist(p, q) > r) {
            net.push(p);
        }
    }
    let up = prev
        .iter()
        .map(|&p| {
            let mut best = (0, f64::INFINITY);
            for (k, &q) in net.iter().enumerate() {
                let d = cloud.dist(p, q);
                if d < best.1 {
                    best = (k, d);
                }
            }
            best.0
        })
        .collect();
    (net, up)
}
