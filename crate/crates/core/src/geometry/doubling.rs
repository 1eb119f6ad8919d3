use super::{le_tol, PointCloud};
use crate::error::{input, Result};

/// Largest cloud the exhaustive doubling oracle accepts.
pub const MAX_ORACLE_POINTS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DoublingConstant {
    /// lambda_t: worst-case number of half-radius discrete balls needed.
    pub lambda: usize,
    /// ceil(log2 lambda_t).
    pub dimension: u32,
}

/// Exact t-restricted doubling constant by exhaustive set cover.
///
/// For every point `p` and every radius `r <= t` drawn from the distances of
/// `p` to the other points (plus `t` itself), the discrete ball `B(p, r)` must
/// be covered by discrete balls of radius `r / 2` centered at points of the
/// cloud. Between consecutive distances the ball's content is fixed and the
/// half-radius balls only grow, so those radii are the worst cases.
pub fn brute_restricted_doubling(cloud: &PointCloud, t: f64) -> Result<DoublingConstant> {
    if !(t > 0.0) {
        return input("scale t must be positive");
    }
    let n = cloud.len();
    if n > MAX_ORACLE_POINTS {
        return input(format!("doubling oracle limited to {MAX_ORACLE_POINTS} points, got {n}"));
    }
    let mut lambda = 1usize;
    for p in 0..n {
        let mut radii: Vec<f64> = (0..n).map(|q| cloud.dist(p, q)).filter(|&d| d > 0.0 && d <= t).collect();
        radii.push(t);
        radii.sort_by(f64::total_cmp);
        radii.dedup();
        for r in radii {
            let ball: Vec<usize> = (0..n).filter(|&q| le_tol(cloud.dist(p, q), r)).collect();
            if ball.len() <= lambda {
                continue;
            }
            let sets: Vec<u32> = (0..n)
                .map(|c| {
                    ball.iter()
                        .enumerate()
                        .filter(|(_, &q)| le_tol(cloud.dist(c, q), r / 2.0))
                        .fold(0u32, |m, (bit, _)| m | (1 << bit))
                })
                .filter(|&m| m != 0)
                .collect();
            let need = min_cover(ball.len(), &sets);
            lambda = lambda.max(need);
        }
    }
    let dimension = (lambda as f64).log2().ceil() as u32;
    Ok(DoublingConstant { lambda, dimension })
}

/// Minimum number of `sets` whose union is the full universe of `m` bits.
fn min_cover(m: usize, sets: &[u32]) -> usize {
    let full: u32 = if m == 32 { u32::MAX } else { (1u32 << m) - 1 };
    let mut depth = 1;
    loop {
        if cover_within(full, 0, depth, sets) {
            return depth;
        }
        depth += 1;
    }
}

fn cover_within(full: u32, covered: u32, budget: usize, sets: &[u32]) -> bool {
    if covered == full {
        return true;
    }
    if budget == 0 {
        return false;
    }
    let missing = full & !covered;
    let bit = missing.trailing_zeros();
    sets.iter().filter(|&&s| s & (1 << bit) != 0).any(|&s| cover_within(full, covered | s, budget - 1, sets))
}
