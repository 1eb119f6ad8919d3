//! Point clouds, Euclidean distance and the brute-force ground truth used to
//! check every other module.

mod doubling;
mod generate;
mod io;
mod meb;

pub use doubling::{brute_restricted_doubling, DoublingConstant};
pub use generate::{generate, GenKind, GenParams};
pub use io::{parse_points, read_points, write_points};
pub use meb::{exact_meb, exact_meb_of, Ball};

use crate::error::{input, Result};

/// Relative tolerance used by every oracle comparison.
pub const REL_TOL: f64 = 1e-9;

/// `a <= b` up to [`REL_TOL`] relative slack.
#[inline]
pub fn le_tol(a: f64, b: f64) -> bool {
    a <= b + REL_TOL * b.abs().max(a.abs()) + 1e-300
}

/// Finite set of points in R^d, stored row-major. Point ids are row indices.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return input("dimension must be positive");
        }
        if coords.is_empty() {
            return input("point cloud must contain at least one point");
        }
        if !coords.len().is_multiple_of(dim) {
            return input(format!("{} coordinates do not split into points of dimension {dim}", coords.len()));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return input(format!("non-finite coordinate in point {}", i / dim));
        }
        Ok(Self { dim, coords })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return input("point cloud must contain at least one point");
        };
        let dim = first.as_ref().len();
        let mut coords = Vec::with_capacity(dim * rows.len());
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dim {
                return input(format!("point {i} has {} coordinates, expected {dim}", r.len()));
            }
            coords.extend_from_slice(r);
        }
        Self::new(dim, coords)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    /// Always false; a cloud holds at least one point.
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    /// Distance between points `i` and `j` of the cloud.
    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        dist(self.point(i), self.point(j))
    }

    /// New cloud made of the listed points, in the listed order.
    pub fn subset(&self, ids: &[usize]) -> Result<Self> {
        let mut coords = Vec::with_capacity(ids.len() * self.dim);
        for &i in ids {
            if i >= self.len() {
                return input(format!("point index {i} out of range"));
            }
            coords.extend_from_slice(self.point(i));
        }
        Self::new(self.dim, coords)
    }

    /// Cloud translated by `offset`.
    pub fn translated(&self, offset: &[f64]) -> Result<Self> {
        if offset.len() != self.dim {
            return input("offset dimension mismatch");
        }
        let coords =
            self.coords.chunks_exact(self.dim).flat_map(|p| p.iter().zip(offset).map(|(a, b)| a + b)).collect();
        Self::new(self.dim, coords)
    }

    pub fn diameter(&self) -> f64 {
        let n = self.len();
        let mut best = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                best = best.max(self.dist(i, j));
            }
        }
        best
    }

    /// Smallest distance between two distinct indices, `None` for a single point.
    pub fn closest_pair_distance(&self) -> Option<f64> {
        let n = self.len();
        let mut best: Option<f64> = None;
        for i in 0..n {
            for j in i + 1..n {
                let d = self.dist(i, j);
                best = Some(best.map_or(d, |b| b.min(d)));
            }
        }
        best
    }

    /// Smallest strictly positive pairwise distance.
    pub fn min_positive_distance(&self) -> Option<f64> {
        let n = self.len();
        let mut best: Option<f64> = None;
        for i in 0..n {
            for j in i + 1..n {
                let d = self.dist(i, j);
                if d > 0.0 {
                    best = Some(best.map_or(d, |b| b.min(d)));
                }
            }
        }
        best
    }

    /// Median over points of the distance to the nearest other point.
    pub fn median_nn_distance(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let mut nn: Vec<f64> =
            (0..n).map(|i| (0..n).filter(|&j| j != i).map(|j| self.dist(i, j)).fold(f64::INFINITY, f64::min)).collect();
        nn.sort_by(f64::total_cmp);
        nn[n / 2]
    }
}

/// Euclidean distance; panics in debug builds on dimension mismatch.
#[inline]
pub fn dist(p: &[f64], q: &[f64]) -> f64 {
    dist_sq(p, q).sqrt()
}

#[inline]
pub fn dist_sq(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Checked Euclidean distance.
pub fn distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return input(format!("dimension mismatch: {} vs {}", p.len(), q.len()));
    }
    Ok(dist(p, q))
}

/// Exact near-neighbour query: every index within distance `r` of point `q`,
/// `q` included, ascending.
pub fn brute_near_neighbours(cloud: &PointCloud, q: usize, r: f64) -> Result<Vec<usize>> {
    if q >= cloud.len() {
        return input(format!("query index {q} out of range"));
    }
    if !(r >= 0.0) {
        return input("radius must be nonnegative");
    }
    let p = cloud.point(q);
    Ok((0..cloud.len()).filter(|&i| dist(p, cloud.point(i)) <= r).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn distance_examples() {
        assert_eq!(distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(distance(&[1.5, -2.0], &[1.5, -2.0]).unwrap(), 0.0);
        assert_eq!(distance(&[1.0; 9], &[0.0; 9]).unwrap(), 3.0);
        assert!(distance(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn cloud_validation() {
        assert!(PointCloud::new(2, vec![]).is_err());
        assert!(PointCloud::new(2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(PointCloud::new(1, vec![f64::NAN]).is_err());
        assert!(PointCloud::new(1, vec![f64::INFINITY]).is_err());
        assert!(PointCloud::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        let c = PointCloud::from_rows(&[[0.0, 1.0], [2.0, 3.0]]).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.point(1), &[2.0, 3.0]);
    }

    #[test]
    fn near_neighbours_on_a_line() {
        let c = PointCloud::from_rows(&[[0.0], [1.0], [2.0], [10.0]]).unwrap();
        assert_eq!(brute_near_neighbours(&c, 0, 2.5).unwrap(), vec![0, 1, 2]);
        assert_eq!(brute_near_neighbours(&c, 3, 0.0).unwrap(), vec![3]);
        assert!(brute_near_neighbours(&c, 4, 1.0).is_err());
        assert!(brute_near_neighbours(&c, 0, -1.0).is_err());
    }

    #[test]
    fn zero_radius_returns_coincident_points() {
        let c = PointCloud::from_rows(&[[1.0, 1.0], [0.0, 0.0], [1.0, 1.0]]).unwrap();
        assert_eq!(brute_near_neighbours(&c, 0, 0.0).unwrap(), vec![0, 2]);
    }

    proptest! {
        #[test]
        fn triangle_inequality(
            a in prop::collection::vec(-1e3f64..1e3, 4),
            b in prop::collection::vec(-1e3f64..1e3, 4),
            c in prop::collection::vec(-1e3f64..1e3, 4),
        ) {
            let ab = dist(&a, &b);
            let bc = dist(&b, &c);
            let ac = dist(&a, &c);
            prop_assert!(le_tol(ac, ab + bc));
            prop_assert_eq!(ab, dist(&b, &a));
        }
    }
}
