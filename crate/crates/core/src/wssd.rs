//! t-restricted well-separated simplicial decompositions.
//!
//! Tier 1 is a WSPD of a forest built at scale `2t`. Tier `j + 1` extends
//! every tuple of tier `j` by one node: the new vertex of a simplex of radius
//! at most `t` lies within `2t + cover(v_i)` of every representative of the
//! tuple, so the candidates are the nodes of that region found below the Rel
//! set of a suitable ancestor, refined until their diameter bound is at most
//! `sep * D`, where `D` is the largest representative distance in the tuple.
//!
//! A tuple whose node diameters are all at most `sep * D` with
//! `sep = eps / (2 (1 + eps))` is well separated: for every ball `B` through
//! one point of each node, the union of the node sets lies in `(1 + eps) B`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{input, Error, Result};
use crate::geometry::{dist, exact_meb, le_tol, Ball, PointCloud};
use crate::netforest::{scale, NetForest};
use crate::wspd::separated_pairs;

/// Default relative accuracy of [`approx_meb`].
pub const DEFAULT_DELTA_MEB: f64 = 0.05;

/// Enclosing ball at most `1 + delta_meb` times the minimum one.
///
/// Starts at the first point and moves the center towards the current
/// farthest point with step `1 / (i + 1)` for `ceil(1 / delta_meb^2)` rounds;
/// the smallest enclosing radius seen is kept.
pub fn approx_meb(points: &[&[f64]], delta_meb: f64) -> Result<Ball> {
    let Some(first) = points.first() else {
        return input("enclosing ball of an empty set");
    };
    if !(delta_meb > 0.0 && delta_meb <= 0.5) {
        return input("delta_meb must lie in (0, 1/2]");
    }
    if points.iter().any(|p| p.len() != first.len()) {
        return input("dimension mismatch in enclosing-ball input");
    }
    let farthest = |c: &[f64]| {
        points.iter().enumerate().map(|(i, p)| (i, dist(c, p))).fold((0, -1.0), |a, b| if b.1 > a.1 { b } else { a })
    };
    let rounds = (1.0 / (delta_meb * delta_meb)).ceil() as usize;
    let mut c = first.to_vec();
    let (mut far, mut r) = farthest(&c);
    let mut best = Ball { center: c.clone(), radius: r };
    for i in 1..=rounds {
        if r == 0.0 {
            break;
        }
        let step = 1.0 / (i as f64 + 1.0);
        for (ci, fi) in c.iter_mut().zip(points[far]) {
            *ci += step * (fi - *ci);
        }
        (far, r) = farthest(&c);
        if r < best.radius {
            best = Ball { center: c.clone(), radius: r };
        }
    }
    Ok(best)
}

pub fn approx_meb_of(cloud: &PointCloud, ids: &[usize], delta_meb: f64) -> Result<Ball> {
    let pts: Vec<&[f64]> = ids.iter().map(|&i| cloud.point(i)).collect();
    approx_meb(&pts, delta_meb)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WsTuple {
    /// Node ids in ascending order; a node may repeat.
    pub nodes: Vec<usize>,
    /// Approximate enclosing ball of the node representatives.
    pub meb: Ball,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Wssd {
    /// `tiers[j - 1]` holds the tuples of `j + 1` nodes.
    pub tiers: Vec<Vec<WsTuple>>,
    pub epsilon: f64,
    pub k: usize,
    pub t: f64,
}

/// Separation used for every tier: `eps / (2 (1 + eps))`.
pub fn tuple_separation(epsilon: f64) -> f64 {
    epsilon / (2.0 * (1.0 + epsilon))
}

fn tuple_meb(cloud: &PointCloud, forest: &NetForest, nodes: &[usize]) -> Ball {
    let reps: Vec<usize> = nodes.iter().map(|&v| forest.node(v).rep).collect();
    approx_meb_of(cloud, &reps, DEFAULT_DELTA_MEB).expect("tuples are nonempty")
}

/// WSSD up to dimension `k` covering simplices of radius at most `t`, where
/// `forest` is built at scale `2t`.
pub fn gen_wssd(cloud: &PointCloud, forest: &NetForest, epsilon: f64, k: usize) -> Result<Wssd> {
    // epsilon = 1 is admitted for the Čech pipeline.
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return input(format!("epsilon must lie in (0, 1], got {epsilon}"));
    }
    if k == 0 {
        return input("k must be at least 1");
    }
    let t = forest.t() / 2.0;
    let sep = tuple_separation(epsilon);
    let mut tier: Vec<Vec<usize>> = separated_pairs(cloud, forest, sep)?.into_iter().map(|(u, v)| vec![u, v]).collect();
    let mut tiers = Vec::with_capacity(k);
    for _ in 1..k {
        let mut next: Vec<Vec<usize>> = tier.par_iter().flat_map_iter(|g| lift(cloud, forest, g, t, sep)).collect();
        next.sort_unstable();
        next.dedup();
        tiers.push(tier);
        tier = next;
    }
    tiers.push(tier);
    let tiers = tiers
        .into_iter()
        .map(|tier| {
            tier.into_par_iter().map(|nodes| WsTuple { meb: tuple_meb(cloud, forest, &nodes), nodes }).collect()
        })
        .collect();
    Ok(Wssd { tiers, epsilon, k, t })
}

/// Slack of the Rel threshold over the covering diameter: `14 - 2 * 2.2`.
const REL_REACH: f64 = 9.6;

fn lift(cloud: &PointCloud, forest: &NetForest, gamma: &[usize], t: f64, sep: f64) -> Vec<Vec<usize>> {
    let reps: Vec<&[f64]> = gamma.iter().map(|&v| cloud.point(forest.node(v).rep)).collect();
    let mut span = 0.0f64;
    for (i, a) in reps.iter().enumerate() {
        for b in &reps[i + 1..] {
            span = span.max(dist(a, b));
        }
    }
    let threshold = sep * span;
    let reach: Vec<f64> = gamma.iter().map(|&v| 2.0 * t + forest.cover_radius(v)).collect();
    let pivot = (0..gamma.len()).min_by(|&a, &b| reach[a].total_cmp(&reach[b])).expect("tuples are nonempty");

    let mut anchor = gamma[pivot];
    while let Some(p) = forest.node(anchor).parent {
        if REL_REACH * scale(forest.node(anchor).level) >= reach[pivot] {
            break;
        }
        anchor = p;
    }

    let mut out = Vec::new();
    let mut stack: Vec<usize> = forest.rel(anchor).to_vec();
    while let Some(x) = stack.pop() {
        let rx = cloud.point(forest.node(x).rep);
        let cover = forest.cover_radius(x);
        if reps.iter().zip(&reach).any(|(r, &reach)| dist(rx, r) > (reach + cover) * (1.0 + 1e-9)) {
            continue;
        }
        if forest.diam_bound(x) <= threshold {
            let mut nodes = gamma.to_vec();
            nodes.push(x);
            nodes.sort_unstable();
            if may_fit(cloud, forest, &nodes, t) {
                out.push(nodes);
            }
        } else {
            stack.extend_from_slice(&forest.node(x).children);
        }
    }
    out
}

/// False when every transversal of `nodes` has enclosing radius above `t`.
fn may_fit(cloud: &PointCloud, forest: &NetForest, nodes: &[usize], t: f64) -> bool {
    let limit = t * (1.0 + 1e-9);
    let mut pair_bound = 0.0f64;
    for (i, &a) in nodes.iter().enumerate() {
        for &b in &nodes[i + 1..] {
            let gap = forest.rep_dist(cloud, a, b) - forest.diam_bound(a) / 2.0 - forest.diam_bound(b) / 2.0;
            pair_bound = pair_bound.max(gap / 2.0);
        }
    }
    if pair_bound > limit {
        return false;
    }
    let meb = tuple_meb(cloud, forest, nodes);
    let max_cover = nodes.iter().map(|&v| forest.cover_radius(v)).fold(0.0, f64::max);
    meb.radius / (1.0 + DEFAULT_DELTA_MEB) - max_cover <= limit
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WssdReport {
    /// Uncovered simplices of exact radius at most `t` (first 100).
    pub coverage: Vec<Vec<usize>>,
    pub coverage_violations: usize,
    pub simplices_checked: usize,
    /// `(tier, tuple)` indices failing the transversal enclosing-ball test.
    pub separation: Vec<(usize, usize)>,
    pub transversals_checked: usize,
}

impl WssdReport {
    pub fn is_ok(&self) -> bool {
        self.coverage_violations == 0 && self.separation.is_empty()
    }
}

/// Exhaustive coverage of every simplex with at most `k + 1` vertices and
/// exact enclosing radius at most `t`, and separation of every tuple against
/// the exact enclosing ball of each of its transversals.
pub fn verify_wssd(cloud: &PointCloud, forest: &NetForest, wssd: &Wssd) -> WssdReport {
    let mut report = WssdReport::default();
    let n = cloud.len();
    let ancestors: Vec<Vec<usize>> = (0..n)
        .map(|p| {
            let mut chain = vec![forest.leaf_of(p)];
            while let Some(q) = forest.node(*chain.last().expect("nonempty")).parent {
                chain.push(q);
            }
            chain
        })
        .collect();
    let t = wssd.t;

    for (j, tier) in wssd.tiers.iter().enumerate() {
        let size = j + 2;
        let mut by_node: HashMap<usize, Vec<usize>> = HashMap::new();
        for (i, tuple) in tier.iter().enumerate() {
            for &v in &tuple.nodes {
                let list = by_node.entry(v).or_default();
                if list.last() != Some(&i) {
                    list.push(i);
                }
            }
        }
        for_each_close_subset(cloud, size, 2.0 * t, &mut |s| {
            let meb = exact_meb(&s.iter().map(|&p| cloud.point(p)).collect::<Vec<_>>()).expect("nonempty");
            if !le_tol(meb.radius, t) {
                return;
            }
            report.simplices_checked += 1;
            let covered = ancestors[s[0]]
                .iter()
                .filter_map(|a| by_node.get(a))
                .flatten()
                .any(|&i| matches(&tier[i].nodes, s, &ancestors));
            if !covered {
                report.coverage_violations += 1;
                if report.coverage.len() < 100 {
                    report.coverage.push(s.to_vec());
                }
            }
        });
    }

    for (j, tier) in wssd.tiers.iter().enumerate() {
        for (i, tuple) in tier.iter().enumerate() {
            let sets: Vec<Vec<usize>> = tuple.nodes.iter().map(|&v| forest.points_of(v)).collect();
            let (ok, count) = transversals_separated(cloud, &sets, wssd.epsilon);
            report.transversals_checked += count;
            if !ok {
                report.separation.push((j, i));
            }
        }
    }
    report
}

/// Whether the vertices of `s` can be matched one-to-one with tuple
/// positions whose node contains them.
fn matches(nodes: &[usize], s: &[usize], ancestors: &[Vec<usize>]) -> bool {
    fn go(nodes: &[usize], s: &[usize], anc: &[Vec<usize>], used: &mut [bool], i: usize) -> bool {
        if i == s.len() {
            return true;
        }
        for (pos, v) in nodes.iter().enumerate() {
            if !used[pos] && anc[s[i]].contains(v) {
                used[pos] = true;
                if go(nodes, s, anc, used, i + 1) {
                    return true;
                }
                used[pos] = false;
            }
        }
        false
    }
    nodes.len() == s.len() && go(nodes, s, ancestors, &mut vec![false; nodes.len()], 0)
}

/// Visits every `size`-subset of points with all pairwise distances at most
/// `limit`, ascending.
pub(crate) fn for_each_close_subset(cloud: &PointCloud, size: usize, limit: f64, f: &mut dyn FnMut(&[usize])) {
    fn rec(cloud: &PointCloud, size: usize, limit: f64, buf: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if buf.len() == size {
            f(buf);
            return;
        }
        let start = buf.last().map_or(0, |&x| x + 1);
        for p in start..cloud.len() {
            if buf.iter().all(|&q| le_tol(cloud.dist(p, q), limit)) {
                buf.push(p);
                rec(cloud, size, limit, buf, f);
                buf.pop();
            }
        }
    }
    rec(cloud, size, limit, &mut Vec::with_capacity(size), f);
}

/// Checks every transversal of `sets`; returns whether all pass and how many
/// were checked.
fn transversals_separated(cloud: &PointCloud, sets: &[Vec<usize>], epsilon: f64) -> (bool, usize) {
    let mut pick = vec![0usize; sets.len()];
    let mut count = 0;
    loop {
        let pts: Vec<&[f64]> = pick.iter().zip(sets).map(|(&i, s)| cloud.point(s[i])).collect();
        let meb = exact_meb(&pts).expect("nonempty");
        count += 1;
        let bound = (1.0 + epsilon) * meb.radius;
        let inside = sets.iter().flatten().all(|&p| le_tol(dist(&meb.center, cloud.point(p)), bound));
        if !inside {
            return (false, count);
        }
        let mut i = 0;
        loop {
            if i == sets.len() {
                return (true, count);
            }
            pick[i] += 1;
            if pick[i] < sets[i].len() {
                break;
            }
            pick[i] = 0;
            i += 1;
        }
    }
}

pub fn format_wssd(w: &Wssd) -> String {
    let mut out = format!("wssd v1 epsilon={} k={} t={}\n", w.epsilon, w.k, w.t);
    for (j, tier) in w.tiers.iter().enumerate() {
        for tuple in tier {
            let _ = write!(out, "tuple {}", j + 1);
            for v in &tuple.nodes {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
    }
    out
}

/// Parses a WSSD file; enclosing balls are recomputed from `forest`.
pub fn parse_wssd(text: &str, cloud: &PointCloud, forest: &NetForest) -> Result<Wssd> {
    use crate::netforest::io_helpers::{field, num};
    let perr = |line: usize, msg: &str| Error::Parse { line, msg: msg.into() };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let (_, header) = lines.next().ok_or_else(|| perr(1, "empty wssd file"))?;
    let mut tok = header.split(' ');
    if tok.next() != Some("wssd") || tok.next() != Some("v1") {
        return Err(perr(1, "expected `wssd v1` header"));
    }
    let epsilon = num(1, field(1, tok.next(), "epsilon")?, "epsilon")?;
    let k: usize = num(1, field(1, tok.next(), "k")?, "k")?;
    let t = num(1, field(1, tok.next(), "t")?, "t")?;
    let mut tiers = vec![Vec::new(); k];
    for (ln, line) in lines {
        if line.is_empty() {
            continue;
        }
        let tok: Vec<&str> = line.split(' ').collect();
        if tok.len() < 3 || tok[0] != "tuple" {
            return Err(perr(ln, "expected `tuple <j> <ids>`"));
        }
        let j: usize = num(ln, tok[1], "tier")?;
        if j == 0 || j > k || tok.len() != j + 3 {
            return Err(perr(ln, "tuple size does not match its tier"));
        }
        let nodes = tok[2..].iter().map(|s| num(ln, s, "node id")).collect::<Result<Vec<usize>>>()?;
        if nodes.iter().any(|&v| v >= forest.nodes().len()) {
            return Err(perr(ln, "node id out of range"));
        }
        tiers[j - 1].push(WsTuple { meb: tuple_meb(cloud, forest, &nodes), nodes });
    }
    Ok(Wssd { tiers, epsilon, k, t })
}

pub fn read_wssd(path: &Path, cloud: &PointCloud, forest: &NetForest) -> Result<Wssd> {
    parse_wssd(&std::fs::read_to_string(path)?, cloud, forest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{exact_meb_of, generate, GenKind, GenParams};
    use crate::lsh::NeighbourStrategy;
    use crate::wspd::verify_wspd;
    use proptest::prelude::*;

    fn setup(c: &PointCloud, t: f64) -> NetForest {
        NetForest::build(c, 2.0 * t, &NeighbourStrategy::Exact).unwrap()
    }

    #[test]
    fn approx_meb_small_cases() {
        let b = approx_meb(&[&[3.0, 4.0]], 0.05).unwrap();
        assert_eq!(b.radius, 0.0);
        let b = approx_meb(&[&[-1.0, 0.0], &[1.0, 0.0]], 0.05).unwrap();
        assert!(b.radius <= 1.05 && b.contains(&[-1.0, 0.0]) && b.contains(&[1.0, 0.0]));
        assert!(approx_meb(&[], 0.05).is_err());
        assert!(approx_meb(&[&[0.0]], 0.0).is_err());
        assert!(approx_meb(&[&[0.0]], 0.6).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn approx_meb_within_factor(seed in any::<u64>(), d in 2usize..8) {
            let c = generate(&GenParams::new(GenKind::Uniform, 10, d, seed)).unwrap();
            let ids: Vec<usize> = (0..10).collect();
            let exact = exact_meb_of(&c, &ids).unwrap();
            let approx = approx_meb_of(&c, &ids, 0.05).unwrap();
            prop_assert!(approx.radius <= 1.05 * exact.radius * (1.0 + 1e-9));
            prop_assert!(approx.radius >= exact.radius * (1.0 - 1e-9));
            for p in c.iter() {
                prop_assert!(approx.contains(p));
            }
        }
    }

    #[test]
    fn equilateral_triangle_is_covered() {
        let h = 3f64.sqrt() / 2.0;
        let c = PointCloud::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.5, h]]).unwrap();
        let f = setup(&c, 1.0);
        let w = gen_wssd(&c, &f, 0.5, 2).unwrap();
        let r = verify_wssd(&c, &f, &w);
        assert!(r.is_ok(), "{r:?}");
        assert_eq!(r.simplices_checked, 3 + 1);
    }

    #[test]
    fn two_points_higher_tiers() {
        let c = PointCloud::from_rows(&[[0.0], [0.4]]).unwrap();
        let f = setup(&c, 1.0);
        let w = gen_wssd(&c, &f, 0.5, 3).unwrap();
        assert_eq!(w.tiers.len(), 3);
        assert!(verify_wssd(&c, &f, &w).is_ok());
        assert!(w.tiers[1].iter().all(|g| g.nodes.windows(2).any(|p| p[0] == p[1])));
    }

    #[test]
    fn random_clouds_verify() {
        for seed in 0..3 {
            let c = generate(&GenParams::new(GenKind::Uniform, 30, 2, seed)).unwrap();
            for (t, eps) in [(0.2, 0.5), (0.35, 0.9)] {
                let f = setup(&c, t);
                let w = gen_wssd(&c, &f, eps, 2).unwrap();
                let r = verify_wssd(&c, &f, &w);
                assert!(r.is_ok(), "seed {seed} t {t}: {:?}", (r.coverage_violations, r.separation.len()));
            }
        }
    }

    #[test]
    fn first_tier_matches_wspd_coverage() {
        let c = generate(&GenParams::new(GenKind::Uniform, 40, 2, 4)).unwrap();
        let t = 0.25;
        let f = setup(&c, t);
        let w = gen_wssd(&c, &f, 0.5, 1).unwrap();
        let pairs: Vec<(usize, usize)> = w.tiers[0].iter().map(|g| (g.nodes[0], g.nodes[1])).collect();
        let wspd = verify_wspd(&c, &f, &pairs, tuple_separation(0.5), 2.0 * t);
        let wssd = verify_wssd(&c, &f, &w);
        assert!(wspd.is_ok() && wssd.is_ok());
        let close = (0..c.len()).flat_map(|p| (p + 1..c.len()).map(move |q| (p, q)));
        assert_eq!(wssd.simplices_checked, close.filter(|&(p, q)| c.dist(p, q) <= 2.0 * t).count());
    }

    #[test]
    fn fabricated_bad_tuple_is_flagged() {
        let c = PointCloud::from_rows(&[[0.0, 0.0], [1.0, 0.0], [5.0, 5.0], [9.0, 9.0], [5.0, 9.0]]).unwrap();
        let f = setup(&c, 20.0);
        let root = f.roots()[0];
        let nodes = vec![f.leaf_of(0), f.leaf_of(1), root];
        let bad = Wssd {
            tiers: vec![vec![], vec![WsTuple { meb: tuple_meb(&c, &f, &nodes), nodes }]],
            epsilon: 0.5,
            k: 2,
            t: 20.0,
        };
        assert!(!verify_wssd(&c, &f, &bad).separation.is_empty());
    }

    #[test]
    fn dropping_a_tuple_breaks_coverage() {
        let c = generate(&GenParams::new(GenKind::Uniform, 20, 2, 5)).unwrap();
        let f = setup(&c, 0.3);
        let mut w = gen_wssd(&c, &f, 0.5, 2).unwrap();
        let leafy = w.tiers[1].iter().position(|g| g.nodes.iter().all(|&v| f.node(v).is_leaf()));
        if let Some(i) = leafy {
            let g = w.tiers[1].remove(i);
            let pts: Vec<usize> = g.nodes.iter().map(|&v| f.node(v).rep).collect();
            let distinct = pts.windows(2).all(|p| p[0] != p[1]);
            let fits = exact_meb_of(&c, &pts).unwrap().radius <= 0.3;
            let r = verify_wssd(&c, &f, &w);
            if distinct && fits {
                assert!(r.coverage_violations > 0);
            }
        }
    }

    #[test]
    fn format_round_trip() {
        let c = generate(&GenParams::new(GenKind::Uniform, 25, 2, 6)).unwrap();
        let f = setup(&c, 0.3);
        let w = gen_wssd(&c, &f, 0.5, 3).unwrap();
        let text = format_wssd(&w);
        let back = parse_wssd(&text, &c, &f).unwrap();
        assert_eq!(back, w);
        assert!(parse_wssd("wssd v1 epsilon=0.5 k=1 t=1\ntuple 2 0 1 2\n", &c, &f).is_err());
    }
}
