use nalgebra::{DMatrix, DVector};

use super::{dist, le_tol, PointCloud};
use crate::error::{input, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) {
            return input("ball radius must be nonnegative");
        }
        Ok(Self { center, radius })
    }

    /// Containment with the oracle tolerance.
    pub fn contains(&self, p: &[f64]) -> bool {
        le_tol(dist(&self.center, p), self.radius)
    }

    /// Same center, radius multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Ball {
        Ball { center: self.center.clone(), radius: self.radius * factor }
    }
}

/// Minimum enclosing ball by exhaustive search over support sets of at most
/// `d + 1` points. Exponential; meant for oracle-scale inputs (about 20 points).
///
/// The MEB is the circumscribed ball of its support set, centered in the
/// affine hull of that set. Every candidate center is scored by its true
/// enclosing radius over all points, so the minimum over candidates is the MEB.
pub fn exact_meb(points: &[&[f64]]) -> Result<Ball> {
    let Some(first) = points.first() else {
        return input("minimum enclosing ball of an empty set");
    };
    let dim = first.len();
    if points.iter().any(|p| p.len() != dim) {
        return input("dimension mismatch in enclosing-ball input");
    }
    let n = points.len();
    let max_support = n.min(dim + 1);
    let mut best = Ball { center: first.to_vec(), radius: enclosing_radius(first, points) };
    let mut subset = Vec::with_capacity(max_support);
    for size in 2..=max_support {
        for_each_combination(n, size, &mut subset, &mut |s| {
            if let Some(c) = circumcenter(points, s) {
                let r = enclosing_radius(&c, points);
                if r < best.radius {
                    best = Ball { center: c, radius: r };
                }
            }
        });
    }
    Ok(best)
}

/// [`exact_meb`] of a set of cloud indices.
pub fn exact_meb_of(cloud: &PointCloud, ids: &[usize]) -> Result<Ball> {
    let pts: Vec<&[f64]> = ids.iter().map(|&i| cloud.point(i)).collect();
    exact_meb(&pts)
}

fn enclosing_radius(c: &[f64], points: &[&[f64]]) -> f64 {
    points.iter().map(|p| dist(c, p)).fold(0.0, f64::max)
}

/// Center of the ball through the chosen points lying in their affine hull.
fn circumcenter(points: &[&[f64]], s: &[usize]) -> Option<Vec<f64>> {
    let p0 = points[s[0]];
    let m = s.len() - 1;
    let edges: Vec<Vec<f64>> = s[1..].iter().map(|&i| points[i].iter().zip(p0).map(|(a, b)| a - b).collect()).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let gram = DMatrix::from_fn(m, m, |i, j| dot(&edges[i], &edges[j]));
    let rhs = DVector::from_fn(m, |i, _| 0.5 * dot(&edges[i], &edges[i]));
    let lambda = gram.lu().solve(&rhs)?;
    if lambda.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let mut c = p0.to_vec();
    for (e, l) in edges.iter().zip(lambda.iter()) {
        for (ci, ei) in c.iter_mut().zip(e) {
            *ci += l * ei;
        }
    }
    Some(c)
}

pub(crate) fn for_each_combination(n: usize, k: usize, buf: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, buf: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if buf.len() == k {
            f(buf);
            return;
        }
        let need = k - buf.len();
        for i in start..=n - need {
            buf.push(i);
            rec(i + 1, n, k, buf, f);
            buf.pop();
        }
    }
    buf.clear();
    if k <= n {
        rec(0, n, k, buf, f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn singleton_and_pair() {
        let b = exact_meb(&[&[1.0, 2.0]]).unwrap();
        assert_eq!(b.radius, 0.0);
        assert_eq!(b.center, vec![1.0, 2.0]);
        let b = exact_meb(&[&[0.0, 0.0], &[2.0, 0.0]]).unwrap();
        assert!((b.radius - 1.0).abs() < 1e-12);
        assert!((b.center[0] - 1.0).abs() < 1e-12 && b.center[1].abs() < 1e-12);
        assert!(exact_meb(&[]).is_err());
    }

    #[test]
    fn equilateral_triangle() {
        let h = 3f64.sqrt() / 2.0;
        let b = exact_meb(&[&[0.0, 0.0], &[1.0, 0.0], &[0.5, h]]).unwrap();
        assert!((b.radius - 1.0 / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn obtuse_triangle_uses_longest_edge() {
        let b = exact_meb(&[&[0.0, 0.0], &[4.0, 0.0], &[2.0, 0.5]]).unwrap();
        assert!((b.radius - 2.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_and_duplicate_points() {
        let b = exact_meb(&[&[0.0, 0.0], &[1.0, 1.0], &[3.0, 3.0], &[1.0, 1.0]]).unwrap();
        assert!((b.radius - 18f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn regular_tetrahedron() {
        let pts: [&[f64]; 4] = [&[1.0, 1.0, 1.0], &[1.0, -1.0, -1.0], &[-1.0, 1.0, -1.0], &[-1.0, -1.0, 1.0]];
        let b = exact_meb(&pts).unwrap();
        assert!((b.radius - 3f64.sqrt()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn encloses_and_bounded_by_diameter(
            raw in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 3), 1..8)
        ) {
            let pts: Vec<&[f64]> = raw.iter().map(|p| p.as_slice()).collect();
            let b = exact_meb(&pts).unwrap();
            let mut diam = 0.0f64;
            for p in &pts {
                prop_assert!(b.contains(p));
                for q in &pts {
                    diam = diam.max(dist(p, q));
                }
            }
            prop_assert!(le_tol(b.radius, diam));
            prop_assert!(le_tol(diam / 2.0, b.radius));
        }
    }
}
