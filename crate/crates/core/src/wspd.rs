//! t-restricted well-separated pair decompositions over a net-forest.
//!
//! Every pair of related roots (a root is related to itself) is refined by
//! repeatedly splitting the node with the larger diameter bound until
//! `max(diam_u, diam_v) <= eps * |rep_u - rep_v|`. Any two points within the
//! forest scale lie in related roots, so every such point pair ends up in
//! exactly one emitted pair or in a refinement of one.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{input, Error, Result};
use crate::geometry::{le_tol, PointCloud};
use crate::netforest::NetForest;

#[derive(Debug, Clone, PartialEq)]
pub struct Wspd {
    /// Unordered pairs stored as `(u, v)` with `u < v`, sorted.
    pub pairs: Vec<(usize, usize)>,
    pub epsilon: f64,
    pub t: f64,
}

pub(crate) fn check_epsilon(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return input(format!("epsilon must lie in (0, 1), got {eps}"));
    }
    Ok(())
}

/// WSPD with separation `epsilon`, restricted to the forest scale.
pub fn gen_wspd(cloud: &PointCloud, forest: &NetForest, epsilon: f64) -> Result<Wspd> {
    check_epsilon(epsilon)?;
    Ok(Wspd { pairs: separated_pairs(cloud, forest, epsilon)?, epsilon, t: forest.t() })
}

/// The pair set of [`gen_wspd`] for any separation `sep > 0`.
pub(crate) fn separated_pairs(cloud: &PointCloud, forest: &NetForest, sep: f64) -> Result<Vec<(usize, usize)>> {
    if cloud.len() != forest.n() {
        return input("point cloud does not match the forest");
    }
    let starts: Vec<(usize, usize)> = forest
        .roots()
        .iter()
        .flat_map(|&u| forest.rel(u).iter().filter(move |&&v| v >= u).map(move |&v| (u, v)))
        .collect();
    let mut pairs: Vec<(usize, usize)> =
        starts.par_iter().flat_map_iter(|&(u, v)| refine(cloud, forest, sep, u, v)).collect();
    pairs.sort_unstable();
    pairs.dedup();
    Ok(pairs)
}

fn refine(cloud: &PointCloud, forest: &NetForest, sep: f64, u: usize, v: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut stack = vec![(u, v)];
    while let Some((a, b)) = stack.pop() {
        if a == b {
            let kids = &forest.node(a).children;
            for (i, &x) in kids.iter().enumerate() {
                for &y in &kids[i..] {
                    stack.push((x, y));
                }
            }
            continue;
        }
        let (da, db) = (forest.diam_bound(a), forest.diam_bound(b));
        if da.max(db) <= sep * forest.rep_dist(cloud, a, b) {
            out.push((a.min(b), a.max(b)));
            continue;
        }
        let split_a = da > db || (da == db && a < b);
        let (big, other) = if split_a { (a, b) } else { (b, a) };
        for &c in &forest.node(big).children {
            stack.push((c, other));
        }
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WspdReport {
    /// Pairs whose exact diameters break the separation inequality.
    pub separation: Vec<(usize, usize)>,
    /// Point pairs within `t` that no emitted pair covers.
    pub coverage: Vec<(usize, usize)>,
    pub pairs_checked: usize,
    pub point_pairs_checked: usize,
}

impl WspdReport {
    pub fn is_ok(&self) -> bool {
        self.separation.is_empty() && self.coverage.is_empty()
    }
}

/// Exact diameter of a point set.
pub fn exact_diameter(cloud: &PointCloud, pts: &[usize]) -> f64 {
    let mut d = 0.0f64;
    for (i, &a) in pts.iter().enumerate() {
        for &b in &pts[i + 1..] {
            d = d.max(cloud.dist(a, b));
        }
    }
    d
}

/// Separation under exact diameters and coverage of every point pair within
/// `t`. Quadratic in `n`.
pub fn verify_wspd(
    cloud: &PointCloud,
    forest: &NetForest,
    pairs: &[(usize, usize)],
    epsilon: f64,
    t: f64,
) -> WspdReport {
    let n = cloud.len();
    let mut report = WspdReport { pairs_checked: pairs.len(), ..WspdReport::default() };
    let mut diam: HashMap<usize, f64> = HashMap::new();
    let mut points: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut covered = vec![false; n * n];
    for &(u, v) in pairs {
        for w in [u, v] {
            points.entry(w).or_insert_with(|| forest.points_of(w));
        }
        let du = *diam.entry(u).or_insert_with(|| exact_diameter(cloud, &points[&u]));
        let dv = *diam.entry(v).or_insert_with(|| exact_diameter(cloud, &points[&v]));
        if !le_tol(du.max(dv), epsilon * forest.rep_dist(cloud, u, v)) {
            report.separation.push((u, v));
        }
        for &p in &points[&u] {
            for &q in &points[&v] {
                covered[p * n + q] = true;
                covered[q * n + p] = true;
            }
        }
    }
    for p in 0..n {
        for q in p + 1..n {
            if cloud.dist(p, q) <= t {
                report.point_pairs_checked += 1;
                if !covered[p * n + q] {
                    report.coverage.push((p, q));
                }
            }
        }
    }
    report
}

pub fn format_wspd(w: &Wspd) -> String {
    let mut out = format!("wspd v1 epsilon={} t={}\n", w.epsilon, w.t);
    for (u, v) in &w.pairs {
        let _ = writeln!(out, "pair {u} {v}");
    }
    out
}

pub fn parse_wspd(text: &str) -> Result<Wspd> {
    use crate::netforest::io_helpers::{field, num};
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let (_, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty wspd file".into() })?;
    let mut tok = header.split(' ');
    if tok.next() != Some("wspd") || tok.next() != Some("v1") {
        return Err(Error::Parse { line: 1, msg: "expected `wspd v1` header".into() });
    }
    let epsilon = num(1, field(1, tok.next(), "epsilon")?, "epsilon")?;
    let t = num(1, field(1, tok.next(), "t")?, "t")?;
    let mut pairs = Vec::new();
    for (ln, line) in lines {
        if line.is_empty() {
            continue;
        }
        let tok: Vec<&str> = line.split(' ').collect();
        if tok.len() != 3 || tok[0] != "pair" {
            return Err(Error::Parse { line: ln, msg: "expected `pair <u> <v>`".into() });
        }
        pairs.push((num(ln, tok[1], "node id")?, num(ln, tok[2], "node id")?));
    }
    Ok(Wspd { pairs, epsilon, t })
}

pub fn read_wspd(path: &Path) -> Result<Wspd> {
    parse_wspd(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate, GenKind, GenParams};
    use crate::lsh::NeighbourStrategy;

    fn forest(c: &PointCloud, t: f64) -> NetForest {
        NetForest::build(c, t, &NeighbourStrategy::Exact).unwrap()
    }

    #[test]
    fn two_tight_clusters() {
        // At t = 20 the root sits on level 0 and points 0.1 apart stay
        // separate below it, so cross pairs are between leaves.
        let c = PointCloud::from_rows(&[[0.0], [0.1], [10.0], [10.1]]).unwrap();
        let f = forest(&c, 20.0);
        let w = gen_wspd(&c, &f, 0.5).unwrap();
        let r = verify_wspd(&c, &f, &w.pairs, 0.5, 20.0);
        assert!(r.is_ok(), "{r:?}");
        assert_eq!(r.point_pairs_checked, 6);
        // Tighter clusters merge on level -1 and one pair covers all four
        // cross point pairs.
        let c = PointCloud::from_rows(&[[0.0], [0.01], [10.0], [10.01]]).unwrap();
        let f = forest(&c, 20.0);
        let w = gen_wspd(&c, &f, 0.5).unwrap();
        assert!(verify_wspd(&c, &f, &w.pairs, 0.5, 20.0).is_ok());
        let cross = w.pairs.iter().filter(|&&(u, v)| {
            let (pu, pv) = (f.points_of(u), f.points_of(v));
            pu.len() == 2 && pv.len() == 2
        });
        assert_eq!(cross.count(), 1);
    }

    #[test]
    fn single_point_and_far_singletons() {
        let c = PointCloud::from_rows(&[[1.0, 1.0]]).unwrap();
        assert!(gen_wspd(&c, &forest(&c, 1.0), 0.5).unwrap().pairs.is_empty());
        let c = PointCloud::from_rows(&[[0.0], [100.0], [250.0]]).unwrap();
        let f = forest(&c, 1.0);
        assert!(gen_wspd(&c, &f, 0.5).unwrap().pairs.is_empty());
    }

    #[test]
    fn rejects_bad_epsilon() {
        let c = PointCloud::from_rows(&[[0.0], [1.0]]).unwrap();
        let f = forest(&c, 1.0);
        assert!(gen_wspd(&c, &f, 0.0).is_err());
        assert!(gen_wspd(&c, &f, 1.0).is_err());
    }

    #[test]
    fn random_clouds_verify() {
        for seed in 0..4 {
            let c = generate(&GenParams::new(GenKind::Uniform, 200, 2, seed)).unwrap();
            for (t, eps) in [(0.1, 0.5), (0.3, 0.25), (2.0, 0.9)] {
                let f = forest(&c, t);
                let w = gen_wspd(&c, &f, eps).unwrap();
                let r = verify_wspd(&c, &f, &w.pairs, eps, t);
                assert!(r.is_ok(), "seed {seed} t {t}: {:?}", (r.separation.len(), r.coverage.len()));
            }
        }
    }

    #[test]
    fn verifier_flags_broken_input() {
        let c = generate(&GenParams::new(GenKind::Uniform, 60, 2, 3)).unwrap();
        let f = forest(&c, 0.4);
        let mut w = gen_wspd(&c, &f, 0.5).unwrap();
        let root_pair = (f.roots()[0], f.leaf_of(c.len() - 1));
        assert!(!verify_wspd(&c, &f, &[root_pair], 0.5, 0.4).separation.is_empty() || f.roots().len() > 1);
        let closest = (0..w.pairs.len())
            .min_by(|&a, &b| {
                let d = |i: usize| f.rep_dist(&c, w.pairs[i].0, w.pairs[i].1);
                d(a).total_cmp(&d(b))
            })
            .unwrap();
        w.pairs.remove(closest);
        assert!(!verify_wspd(&c, &f, &w.pairs, 0.5, 0.4).coverage.is_empty());
    }

    #[test]
    fn format_round_trip() {
        let c = generate(&GenParams::new(GenKind::Uniform, 50, 3, 9)).unwrap();
        let w = gen_wspd(&c, &forest(&c, 0.3), 0.3).unwrap();
        let text = format_wspd(&w);
        assert_eq!(parse_wspd(&text).unwrap(), w);
        assert!(parse_wspd("wspd v1 epsilon=0.5\n").is_err());
        assert!(parse_wspd("wspd v1 epsilon=0.5 t=1\npair 1\n").is_err());
    }
}
