use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::PointCloud;
use crate::error::{input, Result};
use crate::rng::rng_for;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenKind {
    /// Uniform sample of a unit k-cube embedded in a random k-flat of R^d.
    Affine,
    /// Points on the sphere of radius `radius` with radial noise.
    Sphere,
    /// Vertices of a random polyline with fixed edge length `spacing`,
    /// confined to the unit ball.
    Curve,
    /// `k` Gaussian blobs of standard deviation `noise`, centers `spread` apart.
    Clustered,
    /// Uniform sample of the cube `[0, radius)^d`.
    Uniform,
}

impl std::str::FromStr for GenKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "affine" => Self::Affine,
            "sphere" => Self::Sphere,
            "curve" => Self::Curve,
            "clustered" => Self::Clustered,
            "uniform" => Self::Uniform,
            other => return input(format!("unknown generator kind `{other}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub kind: GenKind,
    pub n: usize,
    pub d: usize,
    /// Flat dimension (affine) or number of clusters (clustered).
    pub k: usize,
    pub radius: f64,
    pub noise: f64,
    pub spacing: f64,
    pub spread: f64,
    pub seed: u64,
}

impl GenParams {
    pub fn new(kind: GenKind, n: usize, d: usize, seed: u64) -> Self {
        Self { kind, n, d, k: 2, radius: 1.0, noise: 0.0, spacing: 0.05, spread: 10.0, seed }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_radius(mut self, r: f64) -> Self {
        self.radius = r;
        self
    }

    pub fn with_noise(mut self, noise: f64) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_spacing(mut self, s: f64) -> Self {
        self.spacing = s;
        self
    }

    pub fn with_spread(mut self, s: f64) -> Self {
        self.spread = s;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return input("generator needs n >= 1 and d >= 1");
        }
        if !(self.noise >= 0.0) || !self.noise.is_finite() {
            return input("noise must be a finite nonnegative number");
        }
        match self.kind {
            GenKind::Affine if self.k == 0 || self.k > self.d => {
                input(format!("affine flat dimension k={} must lie in 1..={}", self.k, self.d))
            }
            GenKind::Clustered if self.k == 0 => input("clustered data needs k >= 1 clusters"),
            GenKind::Clustered if !(self.spread > 0.0) => input("cluster spread must be positive"),
            GenKind::Sphere | GenKind::Uniform if !(self.radius > 0.0) => input("radius must be positive"),
            GenKind::Curve if !(self.spacing > 0.0 && self.spacing < 1.0) => input("curve spacing must lie in (0, 1)"),
            _ => Ok(()),
        }
    }
}

/// Deterministic synthetic point cloud.
pub fn generate(params: &GenParams) -> Result<PointCloud> {
    params.validate()?;
    let mut rng = rng_for(params.seed, 0x0067_656e);
    let (n, d) = (params.n, params.d);
    let mut coords = Vec::with_capacity(n * d);
    match params.kind {
        GenKind::Affine => {
            let basis = orthonormal_basis(&mut rng, params.k, d);
            let offset: Vec<f64> = gaussian_vec(&mut rng, d);
            for _ in 0..n {
                let mut p = offset.clone();
                for b in &basis {
                    let c: f64 = rng.random();
                    for (x, bi) in p.iter_mut().zip(b) {
                        *x += c * bi;
                    }
                }
                p.iter_mut().for_each(|x| *x += params.noise * rng.sample::<f64, _>(StandardNormal));
                coords.extend(p);
            }
        }
        GenKind::Sphere => {
            for _ in 0..n {
                let u = unit_vec(&mut rng, d);
                let r = params.radius + params.noise * rng.random_range(-1.0..=1.0);
                coords.extend(u.iter().map(|x| x * r));
            }
        }
        GenKind::Curve => coords = curve(&mut rng, n, d, params.spacing),
        GenKind::Clustered => {
            let axes = orthonormal_basis(&mut rng, params.k.min(d), d);
            let centers: Vec<Vec<f64>> = (0..params.k)
                .map(|j| {
                    let axis = &axes[j % axes.len()];
                    let step = (j / axes.len() + 1) as f64;
                    axis.iter().map(|a| a * params.spread * step).collect()
                })
                .collect();
            for i in 0..n {
                let c = &centers[i % params.k];
                coords.extend(c.iter().map(|x| x + params.noise * rng.sample::<f64, _>(StandardNormal)));
            }
        }
        GenKind::Uniform => {
            for _ in 0..n * d {
                coords.push(params.radius * rng.random::<f64>());
            }
        }
    }
    PointCloud::new(d, coords)
}

/// Samples `spacing` apart along a polyline whose straight runs are
/// `CURVE_RUN` samples long. Turns are at most 60 degrees, or 90 degrees when
/// steering away from the unit sphere, so short chords only occur at corners.
fn curve<R: Rng>(rng: &mut R, n: usize, d: usize, spacing: f64) -> Vec<f64> {
    const CURVE_RUN: usize = 8;
    let run = spacing * CURVE_RUN as f64;
    let mut coords = Vec::with_capacity(n * d);
    let mut pos = vec![0.0; d];
    let mut dir = unit_vec(rng, d);
    let step =
        |pos: &[f64], dir: &[f64], len: f64| -> Vec<f64> { pos.iter().zip(dir).map(|(p, u)| p + len * u).collect() };
    let inside = |p: &[f64]| p.iter().map(|x| x * x).sum::<f64>() <= 1.0;
    let mut i = 0;
    while i < n {
        coords.extend_from_slice(&pos);
        i += 1;
        if i % CURVE_RUN != 0 {
            let next = step(&pos, &dir, spacing);
            if inside(&next) {
                pos = next;
                continue;
            }
        }
        dir = turn(rng, &pos, &dir, run, &inside);
        pos = step(&pos, &dir, spacing);
    }
    coords
}

fn turn<R: Rng>(rng: &mut R, pos: &[f64], dir: &[f64], run: f64, inside: &dyn Fn(&[f64]) -> bool) -> Vec<f64> {
    let d = dir.len();
    let end = |u: &[f64]| pos.iter().zip(u).map(|(p, x)| p + run * x).collect::<Vec<f64>>();
    if d == 1 {
        return if inside(&end(dir)) { dir.to_vec() } else { vec![-dir[0]] };
    }
    let max_tan = 3f64.sqrt();
    for _ in 0..32 {
        let mut g = gaussian_vec(rng, d);
        let proj: f64 = g.iter().zip(dir).map(|(a, b)| a * b).sum();
        g.iter_mut().zip(dir).for_each(|(x, u)| *x -= proj * u);
        normalize(&mut g);
        let amount = max_tan * rng.random::<f64>();
        let mut cand: Vec<f64> = dir.iter().zip(&g).map(|(u, x)| u + amount * x).collect();
        normalize(&mut cand);
        if inside(&end(&cand)) {
            return cand;
        }
    }
    // Steer perpendicular to the current direction, towards the origin.
    let norm = pos.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        let out: f64 = pos.iter().zip(dir).map(|(p, u)| p * u).sum::<f64>() / norm;
        let mut w: Vec<f64> = pos.iter().zip(dir).map(|(p, u)| -p / norm + out * u).collect();
        normalize(&mut w);
        if w.iter().any(|x| *x != 0.0) && inside(&end(&w)) {
            return w;
        }
        return pos.iter().map(|p| -p / norm).collect();
    }
    dir.to_vec()
}

fn gaussian_vec<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

fn unit_vec<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let mut v = gaussian_vec(rng, d);
        if v.iter().any(|x| *x != 0.0) {
            normalize(&mut v);
            return v;
        }
    }
}

/// `k` orthonormal vectors in R^d by Gram-Schmidt on Gaussian draws.
fn orthonormal_basis<R: Rng>(rng: &mut R, k: usize, d: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    while basis.len() < k {
        let mut v = gaussian_vec(rng, d);
        for b in &basis {
            let proj: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    basis
}
