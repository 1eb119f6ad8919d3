use super::{NetForest, REL_FACTOR, ROOT_SCALE_FRACTION};
use crate::error::{input, Error, Result};
use crate::geometry::PointCloud;
use crate::lsh::NearNeighbours;

/// Rel sets of the roots, as indices into the net. `nn7` must index exactly
/// the net points at radius `7t`; the threshold `REL_FACTOR` times the root
/// scale is below `7t`, so no related pair is outside the query radius.
pub fn build_root_rel(net: &PointCloud, t: f64, nn7: &dyn NearNeighbours) -> Result<Vec<Vec<usize>>> {
    if nn7.len() != net.len() {
        return input("root Rel primitive must index the net points");
    }
    let threshold = REL_FACTOR * ROOT_SCALE_FRACTION * t;
    debug_assert!(threshold <= nn7.radius());
    (0..net.len())
        .map(|u| {
            let mut rel: Vec<usize> = nn7.near(u)?.into_iter().filter(|&v| net.dist(u, v) <= threshold).collect();
            if !rel.contains(&u) {
                rel.push(u);
            }
            rel.sort_unstable();
            Ok(rel)
        })
        .collect()
}

/// Rel sets of all non-root nodes, top-down. A leaf counts as lying on every
/// level below its parent. Candidates for `u` are found by
/// descending from the members of `Rel(parent(u))` while the level is above
/// `level(u)`, skipping subtrees that cannot reach the threshold.
pub fn augment_rel(forest: &mut NetForest, cloud: &PointCloud) -> Result<()> {
    augment_rel_with(forest, cloud, |f, u| f.rel_radius(u))
}

#[cfg(test)]
/// Recomputes every Rel set with `factor` in place of `REL_FACTOR`, roots by
/// brute force. Used to check that the suite detects a wrong threshold.
pub(crate) fn rebuild_rel_scaled(forest: &mut NetForest, cloud: &PointCloud, factor: f64) -> Result<()> {
    let roots = forest.roots().to_vec();
    for &u in &roots {
        let r = factor * forest.node_scale(u);
        let rel = roots.iter().copied().filter(|&v| forest.rep_dist(cloud, u, v) <= r).collect();
        forest.set_rel(u, rel);
    }
    augment_rel_with(forest, cloud, |f, u| factor * f.node_scale(u))
}

fn augment_rel_with(
    forest: &mut NetForest,
    cloud: &PointCloud,
    radius_of: impl Fn(&NetForest, usize) -> f64,
) -> Result<()> {
    if forest.roots().iter().any(|&r| forest.rel(r).is_empty()) {
        return Err(Error::State("root Rel sets have not been computed".into()));
    }
    if cloud.len() != forest.n() {
        return input("point cloud does not match the forest");
    }
    // Parents precede children in id order.
    let mut stack = Vec::new();
    for u in 0..forest.nodes().len() {
        let Some(p) = forest.node(u).parent else { continue };
        let level = forest.node(u).level;
        let radius = radius_of(forest, u);
        let mut rel = Vec::new();
        stack.clear();
        stack.extend_from_slice(forest.rel(p));
        while let Some(x) = stack.pop() {
            let d = forest.rep_dist(cloud, u, x);
            let node = forest.node(x);
            if node.level <= level || node.is_leaf() {
                if d <= radius {
                    rel.push(x);
                }
            } else if d <= radius + forest.cover_radius(x) {
                stack.extend_from_slice(&node.children);
            }
        }
        rel.sort_unstable();
        forest.set_rel(u, rel);
    }
    Ok(())
}
