//! All-near-neighbour queries by p-stable locality-sensitive hashing.
//!
//! A base hash is `h(x) = floor((a . x + b) / w)` with `a` standard Gaussian
//! and `b` uniform in `[0, w)`. `k` base hashes are concatenated into one
//! table key and `l` independent tables are built. With
//! `k = ceil(-log_{p2} n)` and `l = ceil(2 n^rho ln(n / sqrt(delta)))`, every
//! pair within `r` shares a bucket in some table with probability at least
//! `1 - delta`, simultaneously for all pairs. Candidates are always filtered by
//! their true distance, so reported neighbours are never false positives.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use statrs::function::erf::erfc;

use crate::error::{input, Result};
use crate::geometry::{brute_near_neighbours, dist, PointCloud};
use crate::rng::{derive_seed, rng_for};

/// Default failure probability of the all-pairs guarantee.
pub const DEFAULT_DELTA: f64 = 0.1;
/// Default quality exponent.
pub const DEFAULT_RHO: f64 = 0.5;

/// Probability that two points at distance `c` land in the same bucket of one
/// base hash of width `w`.
pub fn collision_probability(c: f64, w: f64) -> f64 {
    if c <= 0.0 {
        return 1.0;
    }
    let x = w / c;
    let phi_neg = 0.5 * erfc(x / std::f64::consts::SQRT_2);
    let tail = 2.0 / ((2.0 * std::f64::consts::PI).sqrt() * x) * (1.0 - (-x * x / 2.0).exp());
    (1.0 - 2.0 * phi_neg - tail).clamp(0.0, 1.0)
}

/// Concatenation length `ceil(-log_{p2} n)`, at least 1.
pub fn amplification_length(n: usize, p2: f64) -> usize {
    let k = ((n as f64).ln() / -p2.ln()).ceil();
    (k as usize).max(1)
}

/// Number of tables `ceil(2 n^rho ln(n / sqrt(delta)))`, at least 1.
pub fn table_count(n: usize, rho: f64, delta: f64) -> usize {
    let n = n as f64;
    let l = (2.0 * n.powf(rho) * (n / delta.sqrt()).ln()).ceil();
    (l as usize).max(1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LshParams {
    pub n: usize,
    /// Report radius.
    pub r1: f64,
    /// Far radius, `r1 / rho`.
    pub r2: f64,
    pub rho: f64,
    pub delta: f64,
    pub k: usize,
    pub l: usize,
    /// Bucket width of the base hash.
    pub w: f64,
    pub p1: f64,
    pub p2: f64,
}

impl LshParams {
    /// `log p1 / log p2` of the chosen base hash.
    pub fn effective_rho(&self) -> f64 {
        self.p1.ln() / self.p2.ln()
    }
}

/// Parameters for `n` points and report radius `r`.
///
/// The bucket width is `w = omega * r`, with `omega` chosen on a log grid to
/// minimise `log p1 / log p2` at the distance ratio `1 / rho`.
pub fn derive_params(n: usize, r: f64, rho: f64, delta: f64) -> Result<LshParams> {
    if n < 2 {
        return input("LSH parameters need n >= 2");
    }
    if !(r > 0.0 && r.is_finite()) {
        return input("LSH radius must be positive and finite");
    }
    if !(rho > 0.0 && rho < 1.0) {
        return input("rho must lie in (0, 1)");
    }
    if !(delta > 0.0 && delta < 1.0) {
        return input("delta must lie in (0, 1)");
    }
    let c = 1.0 / rho;
    let omega = best_width_ratio(c);
    let w = omega * r;
    let p1 = collision_probability(1.0, omega);
    let p2 = collision_probability(c, omega);
    Ok(LshParams {
        n,
        r1: r,
        r2: r / rho,
        rho,
        delta,
        k: amplification_length(n, p2),
        l: table_count(n, rho, delta),
        w,
        p1,
        p2,
    })
}

fn best_width_ratio(c: f64) -> f64 {
    const STEPS: usize = 600;
    let (lo, hi) = (0.25f64.ln(), 64f64.ln());
    (0..=STEPS)
        .map(|i| (lo + (hi - lo) * i as f64 / STEPS as f64).exp())
        .map(|omega| {
            let q = collision_probability(1.0, omega).ln() / collision_probability(c, omega).ln();
            (omega, q)
        })
        .filter(|(_, q)| q.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(omega, _)| omega)
        .unwrap_or(4.0)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryReport {
    /// Indexed points within `r1` of the query, ascending.
    pub neighbours: Vec<usize>,
    /// Total occupancy of the `l` buckets of the query, duplicates counted.
    pub candidates_scanned: usize,
}

#[derive(Debug, Clone)]
struct Table {
    /// Full k-tuple keys; the map compares them exactly.
    lookup: HashMap<Box<[i64]>, u32>,
    buckets: Vec<Vec<u32>>,
    /// Bucket of every indexed point.
    of_point: Vec<u32>,
    directions: Vec<f64>,
    offsets: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LshIndex {
    params: LshParams,
    seed: u64,
    cloud: PointCloud,
    tables: Vec<Table>,
}

impl LshIndex {
    /// Hash every point of `cloud` into `l` tables. Table `j` draws its hash
    /// functions from sub-stream `j` of `seed`, so builds are reproducible and
    /// tables can be built in parallel.
    pub fn build(cloud: &PointCloud, params: LshParams, seed: u64) -> Result<Self> {
        if params.k == 0 || params.l == 0 || !(params.w > 0.0) {
            return input("LSH parameters need k, l >= 1 and w > 0");
        }
        let tables = (0..params.l).into_par_iter().map(|j| build_table(cloud, &params, seed, j as u64)).collect();
        Ok(Self { params, seed, cloud: cloud.clone(), tables })
    }

    pub fn params(&self) -> &LshParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.cloud.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cloud.is_empty()
    }

    /// Number of (point, table) entries stored.
    pub fn stored_entries(&self) -> usize {
        self.tables.iter().map(|t| t.buckets.iter().map(Vec::len).sum::<usize>()).sum()
    }

    pub fn occupied_buckets(&self, table: usize) -> usize {
        self.tables[table].buckets.len()
    }

    /// Bucket ids of point `i`, one per table.
    pub fn buckets_of(&self, i: usize) -> Vec<u32> {
        self.tables.iter().map(|t| t.of_point[i]).collect()
    }

    /// Near neighbours of indexed point `q` at the report radius.
    pub fn query(&self, q: usize) -> Result<QueryReport> {
        if q >= self.cloud.len() {
            return input(format!("point {q} is not indexed ({} points)", self.cloud.len()));
        }
        let mut cand = Vec::new();
        for t in &self.tables {
            cand.extend_from_slice(&t.buckets[t.of_point[q] as usize]);
        }
        Ok(self.filter(self.cloud.point(q), cand))
    }

    /// Near neighbours of an arbitrary point.
    pub fn query_point(&self, x: &[f64]) -> Result<QueryReport> {
        if x.len() != self.cloud.dim() {
            return input("query dimension mismatch");
        }
        let mut cand = Vec::new();
        let mut key = vec![0i64; self.params.k];
        for t in &self.tables {
            hash_into(x, &t.directions, &t.offsets, self.params.w, &mut key);
            if let Some(&b) = t.lookup.get(key.as_slice()) {
                cand.extend_from_slice(&t.buckets[b as usize]);
            }
        }
        Ok(self.filter(x, cand))
    }

    fn filter(&self, x: &[f64], mut cand: Vec<u32>) -> QueryReport {
        let candidates_scanned = cand.len();
        cand.sort_unstable();
        cand.dedup();
        let neighbours =
            cand.into_iter().map(|i| i as usize).filter(|&i| dist(x, self.cloud.point(i)) <= self.params.r1).collect();
        QueryReport { neighbours, candidates_scanned }
    }
}

fn hash_into(x: &[f64], directions: &[f64], offsets: &[f64], w: f64, key: &mut [i64]) {
    let d = x.len();
    for (i, slot) in key.iter_mut().enumerate() {
        let a = &directions[i * d..(i + 1) * d];
        let proj: f64 = a.iter().zip(x).map(|(u, v)| u * v).sum();
        *slot = ((proj + offsets[i]) / w).floor() as i64;
    }
}

fn build_table(cloud: &PointCloud, params: &LshParams, seed: u64, j: u64) -> Table {
    let d = cloud.dim();
    let mut rng = rng_for(seed, j);
    let directions: Vec<f64> = (0..params.k * d).map(|_| rng.sample(StandardNormal)).collect();
    let offsets: Vec<f64> = (0..params.k).map(|_| rng.random_range(0.0..params.w)).collect();
    let mut lookup: HashMap<Box<[i64]>, u32> = HashMap::new();
    let mut buckets: Vec<Vec<u32>> = Vec::new();
    let mut of_point = Vec::with_capacity(cloud.len());
    let mut key = vec![0i64; params.k];
    for (i, x) in cloud.iter().enumerate() {
        hash_into(x, &directions, &offsets, params.w, &mut key);
        let b = match lookup.get(key.as_slice()) {
            Some(&b) => b,
            None => {
                let b = buckets.len() as u32;
                lookup.insert(key.clone().into_boxed_slice(), b);
                buckets.push(Vec::new());
                b
            }
        };
        buckets[b as usize].push(i as u32);
        of_point.push(b);
    }
    Table { lookup, buckets, of_point, directions, offsets }
}

/// Fixed-radius near-neighbour primitive over an indexed point set. Indices
/// are local to the set the primitive was built on.
pub trait NearNeighbours: Send + Sync {
    fn radius(&self) -> f64;
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// All indexed points within `radius()` of indexed point `q`, ascending.
    fn near(&self, q: usize) -> Result<Vec<usize>>;
}

impl NearNeighbours for LshIndex {
    fn radius(&self) -> f64 {
        self.params.r1
    }

    fn len(&self) -> usize {
        self.cloud.len()
    }

    fn near(&self, q: usize) -> Result<Vec<usize>> {
        Ok(self.query(q)?.neighbours)
    }
}

/// Linear-scan primitive; exact, used to separate structural bugs from
/// hashing misses.
#[derive(Debug, Clone)]
pub struct ExactNeighbours {
    cloud: PointCloud,
    radius: f64,
}

impl ExactNeighbours {
    pub fn new(cloud: &PointCloud, radius: f64) -> Self {
        Self { cloud: cloud.clone(), radius }
    }
}

impl NearNeighbours for ExactNeighbours {
    fn radius(&self) -> f64 {
        self.radius
    }

    fn len(&self) -> usize {
        self.cloud.len()
    }

    fn near(&self, q: usize) -> Result<Vec<usize>> {
        brute_near_neighbours(&self.cloud, q, self.radius)
    }
}

/// How a pipeline obtains its near-neighbour primitives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NeighbourStrategy {
    Exact,
    Lsh { rho: f64, delta: f64, seed: u64 },
}

impl NeighbourStrategy {
    pub fn lsh(seed: u64) -> Self {
        Self::Lsh { rho: DEFAULT_RHO, delta: DEFAULT_DELTA, seed }
    }

    /// Primitive at radius `r` over `cloud`; `stream` separates the hash draws
    /// of different primitives built from one seed.
    pub fn build(&self, cloud: &PointCloud, r: f64, stream: u64) -> Result<Box<dyn NearNeighbours>> {
        match *self {
            Self::Exact => Ok(Box::new(ExactNeighbours::new(cloud, r))),
            Self::Lsh { rho, delta, seed } => {
                let params = derive_params(cloud.len().max(2), r, rho, delta)?;
                Ok(Box::new(LshIndex::build(cloud, params, derive_seed(seed, stream))?))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate, GenKind, GenParams};
    use proptest::prelude::*;

    /// Independent route: integrate the density of |a.(p-q)| ~ c|N(0,1)|
    /// against the probability (1 - s/w) that an offset draw does not split
    /// the pair. Composite Simpson rule.
    fn collision_by_quadrature(c: f64, w: f64) -> f64 {
        let steps = 20_000;
        let h = w / steps as f64;
        let f = |s: f64| {
            let x = s / c;
            (1.0 / c) * 2.0 / (2.0 * std::f64::consts::PI).sqrt() * (-x * x / 2.0).exp() * (1.0 - s / w)
        };
        let mut acc = f(0.0) + f(w);
        for i in 1..steps {
            let s = i as f64 * h;
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(s);
        }
        acc * h / 3.0
    }

    #[test]
    fn collision_probability_matches_quadrature() {
        let q = collision_by_quadrature(1.0, 4.0);
        let p = collision_probability(1.0, 4.0);
        assert!((p - q).abs() < 1e-6, "{p} vs {q}");
        for (c, w) in [(0.5, 1.0), (2.0, 4.0), (3.0, 1.5), (0.1, 10.0)] {
            assert!((collision_probability(c, w) - collision_by_quadrature(c, w)).abs() < 1e-6);
        }
    }

    #[test]
    fn collision_probability_limits_and_monotonicity() {
        assert_eq!(collision_probability(0.0, 4.0), 1.0);
        let mut prev = 1.0;
        for i in 1..400 {
            let c = 0.05 * i as f64;
            let p = collision_probability(c, 4.0);
            assert!(p < prev, "not decreasing at c={c}");
            assert!(p > 0.0);
            prev = p;
        }
        assert!(collision_probability(1e6, 4.0) < 1e-5);
    }

    #[test]
    fn table_and_key_formulas() {
        assert_eq!(table_count(1000, 0.5, 0.01), 583);
        assert_eq!(amplification_length(1000, 0.1), 3);
        let p = derive_params(2, 1.0, 0.5, 0.1).unwrap();
        assert!(p.k >= 1 && p.l >= 1);
    }

    #[test]
    fn derived_params_are_consistent() {
        for rho in [0.25, 0.5, 0.75] {
            let p = derive_params(1000, 2.0, rho, 0.1).unwrap();
            assert_eq!(p.r1, 2.0);
            assert!((p.r2 - 2.0 / rho).abs() < 1e-12);
            assert!(p.r1 <= p.r2 && p.p2 <= p.p1);
            assert!(p.effective_rho() <= rho, "rho={rho} effective={}", p.effective_rho());
            assert_eq!(p.k, amplification_length(1000, p.p2));
            assert_eq!(p.l, table_count(1000, rho, 0.1));
        }
    }

    #[test]
    fn rejects_out_of_range_params() {
        assert!(derive_params(1, 1.0, 0.5, 0.1).is_err());
        assert!(derive_params(10, 0.0, 0.5, 0.1).is_err());
        assert!(derive_params(10, 1.0, 1.0, 0.1).is_err());
        assert!(derive_params(10, 1.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn single_point_and_duplicates() {
        let c = PointCloud::from_rows(&[[1.0, 2.0]]).unwrap();
        let idx = LshIndex::build(&c, derive_params(2, 1.0, 0.5, 0.1).unwrap(), 3).unwrap();
        for t in 0..idx.params().l {
            assert_eq!(idx.occupied_buckets(t), 1);
        }
        let c = PointCloud::from_rows(&[[1.0, 2.0], [5.0, 5.0], [1.0, 2.0]]).unwrap();
        let idx = LshIndex::build(&c, derive_params(3, 1.0, 0.5, 0.1).unwrap(), 3).unwrap();
        assert_eq!(idx.buckets_of(0), idx.buckets_of(2));
        assert_eq!(idx.query(0).unwrap().neighbours, vec![0, 2]);
    }

    #[test]
    fn stores_n_times_l_entries() {
        let c = generate(&GenParams::new(GenKind::Uniform, 500, 4, 1)).unwrap();
        let p = derive_params(500, 0.1, 0.5, 0.1).unwrap();
        let l = p.l;
        let idx = LshIndex::build(&c, p, 9).unwrap();
        assert_eq!(idx.stored_entries(), 500 * l);
    }

    #[test]
    fn isolated_query_returns_itself() {
        let mut rows = vec![vec![0.0, 0.0]];
        for i in 0..20 {
            rows.push(vec![10.0 + i as f64 * 0.01, 3.0]);
        }
        let c = PointCloud::from_rows(&rows).unwrap();
        let idx = LshIndex::build(&c, derive_params(c.len(), 1.0, 0.5, 0.1).unwrap(), 5).unwrap();
        assert_eq!(idx.query(0).unwrap().neighbours, vec![0]);
        assert!(idx.query(c.len()).is_err());
    }

    #[test]
    fn same_seed_same_reports() {
        let c = generate(&GenParams::new(GenKind::Uniform, 200, 3, 4)).unwrap();
        let p = derive_params(200, 0.15, 0.5, 0.1).unwrap();
        let a = LshIndex::build(&c, p.clone(), 77).unwrap();
        let b = LshIndex::build(&c, p, 77).unwrap();
        for q in 0..c.len() {
            assert_eq!(a.query(q).unwrap(), b.query(q).unwrap());
        }
    }

    #[test]
    fn query_point_agrees_with_indexed_query() {
        let c = generate(&GenParams::new(GenKind::Uniform, 150, 3, 8)).unwrap();
        let idx = LshIndex::build(&c, derive_params(150, 0.2, 0.5, 0.1).unwrap(), 1).unwrap();
        for q in 0..c.len() {
            assert_eq!(idx.query(q).unwrap(), idx.query_point(c.point(q)).unwrap());
        }
    }

    #[test]
    fn strategy_builds_both_primitives() {
        let c = generate(&GenParams::new(GenKind::Uniform, 80, 2, 3)).unwrap();
        let exact = NeighbourStrategy::Exact.build(&c, 0.2, 0).unwrap();
        let lsh = NeighbourStrategy::lsh(4).build(&c, 0.2, 0).unwrap();
        assert_eq!(exact.len(), 80);
        for q in 0..c.len() {
            let truth = exact.near(q).unwrap();
            let got = lsh.near(q).unwrap();
            assert!(got.iter().all(|i| truth.contains(i)));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn query_is_sound(seed in any::<u64>(), r in 0.05f64..0.5) {
            let c = generate(&GenParams::new(GenKind::Uniform, 120, 3, seed)).unwrap();
            let idx = LshIndex::build(&c, derive_params(120, r, 0.5, 0.1).unwrap(), seed).unwrap();
            for q in 0..c.len() {
                let rep = idx.query(q).unwrap();
                let truth = brute_near_neighbours(&c, q, r).unwrap();
                prop_assert!(rep.neighbours.iter().all(|i| truth.binary_search(i).is_ok()));
                prop_assert!(rep.neighbours.contains(&q));
                prop_assert!(rep.neighbours.len() <= rep.candidates_scanned);
            }
        }
    }
}
