//! Approximate truncated Čech filtration.
//!
//! At scale `alpha` every point is replaced by the representative of its cell
//! on level `h(alpha)`, the largest level whose covering radius is at most
//! `eps / 7 * alpha`. Each WSSD tuple is mapped to the cells below its nodes;
//! a representative simplex enters the slice when its approximate enclosing
//! radius is at most `(1 + eps / 2) * alpha`.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{input, Error, Result};
use crate::geometry::{exact_meb, le_tol, PointCloud};
use crate::netforest::{scale, NetForest, COVER_FACTOR};
use crate::wssd::{approx_meb_of, for_each_close_subset, Wssd};

/// Largest `h` with `COVER_FACTOR * TAU^h <= eps / 7 * alpha`.
pub fn coarsening_level(alpha: f64, epsilon: f64) -> Result<i32> {
    if !(alpha > 0.0 && alpha.is_finite()) || !(epsilon > 0.0) {
        return input("alpha and epsilon must be positive");
    }
    let budget = epsilon / 7.0 * alpha;
    let mut h = ((budget / COVER_FACTOR).ln() / crate::netforest::TAU.ln()).floor() as i32;
    while COVER_FACTOR * scale(h) > budget {
        h -= 1;
    }
    while COVER_FACTOR * scale(h + 1) <= budget {
        h += 1;
    }
    Ok(h)
}

/// Ancestor `v` of the leaf of `p` with `level(v) < h <= level(parent(v))`,
/// leaves counting as below every level.
pub fn vcell(forest: &NetForest, p: usize, h: i32) -> Result<usize> {
    if h >= forest.root_level() {
        return input(format!("cell level {h} is not below the root level {}", forest.root_level()));
    }
    if p >= forest.n() {
        return input(format!("point {p} out of range"));
    }
    let mut v = forest.leaf_of(p);
    while forest.parent_level(v) < h {
        v = forest.node(v).parent.expect("roots sit above every cell level");
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiltrationSlice {
    pub alpha: f64,
    pub h: i32,
    /// Representative point of every input point.
    pub vertex_map: Vec<usize>,
    /// Sorted representative vertex sets, vertices first.
    pub simplices: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiltrationOutput {
    pub slices: Vec<FiltrationSlice>,
    pub epsilon: f64,
    pub t: f64,
}

/// `alpha_min * (1 + eps / 7)^i` below `t`, then `t`, with `alpha_min` half
/// the closest distinct pair.
pub fn default_grid(cloud: &PointCloud, epsilon: f64, t: f64) -> Vec<f64> {
    let Some(d) = cloud.min_positive_distance() else {
        return vec![t];
    };
    let ratio = 1.0 + epsilon / 7.0;
    let mut grid = Vec::new();
    let mut a = d / 2.0;
    while a < t {
        grid.push(a);
        a *= ratio;
    }
    grid.push(t);
    grid
}

/// One slice per grid value. `forest` must be the forest the WSSD was built
/// on.
pub fn build_filtration(cloud: &PointCloud, forest: &NetForest, wssd: &Wssd, grid: &[f64]) -> Result<FiltrationOutput> {
    let (eps, t) = (wssd.epsilon, wssd.t);
    if cloud.len() != forest.n() {
        return input("point cloud does not match the forest");
    }
    if grid.is_empty() {
        return input("empty scale grid");
    }
    if grid.iter().any(|&a| !(a > 0.0 && le_tol(a, t))) {
        return input(format!("grid values must lie in (0, {t}]"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return input("grid must be strictly increasing");
    }
    let slices = grid.par_iter().map(|&alpha| build_slice(cloud, forest, wssd, alpha)).collect::<Result<Vec<_>>>()?;
    Ok(FiltrationOutput { slices, epsilon: eps, t })
}

fn build_slice(cloud: &PointCloud, forest: &NetForest, wssd: &Wssd, alpha: f64) -> Result<FiltrationSlice> {
    let eps = wssd.epsilon;
    let h = coarsening_level(alpha, eps)?;
    if h >= forest.root_level() {
        return Err(Error::State(format!("cell level {h} reaches the root level at alpha {alpha}")));
    }
    let cell_of: Vec<usize> = (0..cloud.len()).map(|p| vcell(forest, p, h)).collect::<Result<_>>()?;
    let vertex_map: Vec<usize> = cell_of.iter().map(|&c| forest.node(c).rep).collect();
    let theta = (1.0 + eps / 2.0) * alpha;
    let delta_meb = eps / 14.0;

    let cells_below = |v: usize| -> Vec<usize> {
        let c = cell_of[forest.node(v).rep];
        let mut x = Some(v);
        while let Some(y) = x {
            if y == c {
                return vec![forest.node(c).rep];
            }
            x = forest.node(y).parent;
        }
        let mut reps: Vec<usize> = forest.points_of(v).into_iter().map(|p| vertex_map[p]).collect();
        reps.sort_unstable();
        reps.dedup();
        reps
    };

    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut simplices: Vec<Vec<usize>> = Vec::new();
    let mut verts: Vec<usize> = vertex_map.clone();
    verts.sort_unstable();
    verts.dedup();
    for &v in &verts {
        seen.insert(vec![v]);
        simplices.push(vec![v]);
    }
    for tier in &wssd.tiers {
        for tuple in tier {
            let options: Vec<Vec<usize>> = tuple.nodes.iter().map(|&v| cells_below(v)).collect();
            let mut pick = vec![0usize; options.len()];
            loop {
                let mut s: Vec<usize> = pick.iter().zip(&options).map(|(&i, o)| o[i]).collect();
                s.sort_unstable();
                s.dedup();
                if !seen.contains(&s) {
                    let r = approx_meb_of(cloud, &s, delta_meb)?.radius;
                    if r <= theta {
                        simplices.push(s.clone());
                    }
                    seen.insert(s);
                }
                let mut i = 0;
                while i < pick.len() {
                    pick[i] += 1;
                    if pick[i] < options[i].len() {
                        break;
                    }
                    pick[i] = 0;
                    i += 1;
                }
                if i == pick.len() {
                    break;
                }
            }
        }
    }
    simplices.sort_unstable_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(FiltrationSlice { alpha, h, vertex_map, simplices })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SandwichReport {
    /// `(slice, simplex)`: exact Čech simplices whose image is missing.
    pub lower: Vec<(usize, Vec<usize>)>,
    /// `(slice, simplex)`: slice simplices with radius above `(1 + eps) alpha`.
    pub upper: Vec<(usize, Vec<usize>)>,
    /// Slice simplices using a vertex outside the image of the vertex map.
    pub stray_vertices: usize,
    pub cech_simplices_checked: usize,
}

impl SandwichReport {
    pub fn is_ok(&self) -> bool {
        self.lower.is_empty() && self.upper.is_empty() && self.stray_vertices == 0
    }
}

/// Both containments per slice for simplices of up to `k + 1` vertices:
/// every exact Čech simplex at `alpha` maps into the slice, and every slice
/// simplex has exact enclosing radius at most `(1 + eps) alpha`.
pub fn verify_sandwich(cloud: &PointCloud, output: &FiltrationOutput, k: usize) -> SandwichReport {
    let mut report = SandwichReport::default();
    for (si, slice) in output.slices.iter().enumerate() {
        let present: HashSet<&[usize]> = slice.simplices.iter().map(Vec::as_slice).collect();
        let image: HashSet<usize> = slice.vertex_map.iter().copied().collect();
        for size in 1..=k + 1 {
            for_each_close_subset(cloud, size, 2.0 * slice.alpha, &mut |s| {
                let pts: Vec<&[f64]> = s.iter().map(|&p| cloud.point(p)).collect();
                if !le_tol(exact_meb(&pts).expect("nonempty").radius, slice.alpha) {
                    return;
                }
                report.cech_simplices_checked += 1;
                let mut img: Vec<usize> = s.iter().map(|&p| slice.vertex_map[p]).collect();
                img.sort_unstable();
                img.dedup();
                if !present.contains(img.as_slice()) {
                    report.lower.push((si, s.to_vec()));
                }
            });
        }
        let bound = (1.0 + output.epsilon) * slice.alpha;
        for s in &slice.simplices {
            if s.iter().any(|v| !image.contains(v)) {
                report.stray_vertices += 1;
            }
            let pts: Vec<&[f64]> = s.iter().map(|&p| cloud.point(p)).collect();
            if !le_tol(exact_meb(&pts).expect("nonempty").radius, bound) {
                report.upper.push((si, s.clone()));
            }
        }
    }
    report
}

pub fn format_filtration(out: &FiltrationOutput) -> String {
    let mut s = format!("cechapprox v1 epsilon={} t={}\n", out.epsilon, out.t);
    for slice in &out.slices {
        let _ = writeln!(s, "slice alpha={} h={}", slice.alpha, slice.h);
        for (p, r) in slice.vertex_map.iter().enumerate() {
            let _ = writeln!(s, "vmap {p} {r}");
        }
        for simplex in &slice.simplices {
            let _ = write!(s, "simplex {}", simplex.len() - 1);
            for v in simplex {
                let _ = write!(s, " {v}");
            }
            s.push('\n');
        }
    }
    s
}

pub fn parse_filtration(text: &str) -> Result<FiltrationOutput> {
    use crate::netforest::io_helpers::{field, num};
    let perr = |line: usize, msg: &str| Error::Parse { line, msg: msg.into() };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let (_, header) = lines.next().ok_or_else(|| perr(1, "empty filtration file"))?;
    let mut tok = header.split(' ');
    if tok.next() != Some("cechapprox") || tok.next() != Some("v1") {
        return Err(perr(1, "expected `cechapprox v1` header"));
    }
    let epsilon = num(1, field(1, tok.next(), "epsilon")?, "epsilon")?;
    let t = num(1, field(1, tok.next(), "t")?, "t")?;
    let mut slices: Vec<FiltrationSlice> = Vec::new();
    for (ln, line) in lines {
        if line.is_empty() {
            continue;
        }
        let tok: Vec<&str> = line.split(' ').collect();
        match tok[0] {
            "slice" if tok.len() == 3 => slices.push(FiltrationSlice {
                alpha: num(ln, field(ln, Some(tok[1]), "alpha")?, "alpha")?,
                h: num(ln, field(ln, Some(tok[2]), "h")?, "h")?,
                vertex_map: Vec::new(),
                simplices: Vec::new(),
            }),
            "vmap" if tok.len() == 3 => {
                let slice = slices.last_mut().ok_or_else(|| perr(ln, "vmap before slice"))?;
                let p: usize = num(ln, tok[1], "point")?;
                if p != slice.vertex_map.len() {
                    return Err(perr(ln, "vmap lines must list points in order"));
                }
                slice.vertex_map.push(num(ln, tok[2], "representative")?);
            }
            "simplex" if tok.len() >= 3 => {
                let slice = slices.last_mut().ok_or_else(|| perr(ln, "simplex before slice"))?;
                let j: usize = num(ln, tok[1], "dimension")?;
                if tok.len() != j + 3 {
                    return Err(perr(ln, "simplex size does not match its dimension"));
                }
                slice.simplices.push(tok[2..].iter().map(|s| num(ln, s, "vertex")).collect::<Result<_>>()?);
            }
            _ => return Err(perr(ln, "unrecognised line")),
        }
    }
    Ok(FiltrationOutput { slices, epsilon, t })
}

pub fn read_filtration(path: &Path) -> Result<FiltrationOutput> {
    parse_filtration(&std::fs::read_to_string(path)?)
}
