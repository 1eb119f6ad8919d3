//! Property registry: every module invariant checked against its brute-force
//! oracle on generated instances.
//!
//! Each report names the generator parameters and seed of its instance, so a
//! failure can be replayed with `gen-data` and the individual commands.

use rayon::prelude::*;

use crate::cech::{build_filtration, coarsening_level, default_grid, verify_sandwich};
use crate::dimension::estimate_dim;
use crate::geometry::{
    brute_near_neighbours, brute_restricted_doubling, exact_meb, generate, le_tol, GenKind, GenParams, PointCloud,
};
use crate::lsh::{collision_probability, derive_params, LshIndex, NeighbourStrategy, DEFAULT_DELTA};
use crate::netforest::{brute_rel, check_extract_net, check_forest, format_forest, parse_forest, NetForest};
use crate::rng::{derive_seed, rng_for};
use crate::wspd::{format_wspd, gen_wspd, parse_wspd, verify_wspd};
use crate::wssd::{approx_meb, gen_wssd, verify_wssd, DEFAULT_DELTA_MEB};
use crate::Result;

/// Instance size class. Tiny instances (n <= 15) admit the exhaustive
/// doubling oracle, small ones (n <= 60) the WSSD and Čech checks, medium
/// ones (n <= 2000) the LSH statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, clap::ValueEnum)]
pub enum Scale {
    Tiny,
    Small,
    Medium,
}

impl Scale {
    fn structure_n(self) -> usize {
        match self {
            Scale::Tiny => 12,
            Scale::Small => 50,
            Scale::Medium => 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyReport {
    pub id: &'static str,
    /// Replayable instance descriptor.
    pub instance: String,
    pub passed: bool,
    pub detail: String,
}

pub struct Property {
    pub id: &'static str,
    /// Smallest scale at which the property runs.
    pub min_scale: Scale,
    check: fn(&Context) -> Vec<Outcome>,
}

struct Outcome {
    instance: String,
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(instance: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { instance: instance.to_string(), passed, detail: detail.into() }
    }

    fn count(instance: &str, violations: usize, what: &str) -> Self {
        Self::new(instance, violations == 0, format!("{violations} {what}"))
    }

    fn error(instance: &str, e: crate::Error) -> Self {
        Self::new(instance, false, format!("error: {e}"))
    }
}

struct Case {
    desc: String,
    cloud: PointCloud,
    t: f64,
    forest: NetForest,
}

struct Context {
    seed: u64,
    cases: Vec<Case>,
}

fn describe(p: &GenParams, t: f64) -> String {
    format!(
        "kind={:?} n={} d={} k={} noise={} spacing={} spread={} seed={} t={t}",
        p.kind, p.n, p.d, p.k, p.noise, p.spacing, p.spread, p.seed
    )
    .to_lowercase()
}

fn corpus_params(n: usize, seed: u64) -> Vec<GenParams> {
    vec![
        GenParams::new(GenKind::Uniform, n, 2, derive_seed(seed, 1)),
        GenParams::new(GenKind::Affine, n, 5, derive_seed(seed, 2)).with_k(2),
        GenParams::new(GenKind::Curve, n, 3, derive_seed(seed, 3)).with_spacing(0.05),
        GenParams::new(GenKind::Clustered, n, 3, derive_seed(seed, 4)).with_k(3).with_noise(0.05).with_spread(4.0),
        GenParams::new(GenKind::Sphere, n, 3, derive_seed(seed, 5)).with_noise(0.02),
    ]
}

fn make_case(p: GenParams, t_factor: f64) -> Result<Case> {
    let cloud = generate(&p)?;
    let t = t_factor * cloud.median_nn_distance().max(1e-6);
    let forest = NetForest::build(&cloud, t, &NeighbourStrategy::Exact)?;
    Ok(Case { desc: describe(&p, t), cloud, t, forest })
}

fn build_context(scale: Scale, seed: u64) -> Result<Context> {
    let n = scale.structure_n();
    let cases = corpus_params(n, seed)
        .into_par_iter()
        .enumerate()
        .map(|(i, p)| make_case(p, if i % 2 == 0 { 3.0 } else { 8.0 }))
        .collect::<Result<Vec<_>>>()?;
    Ok(Context { seed, cases })
}

/// Cases small enough for the WSSD and Čech oracles.
fn small_cases(ctx: &Context, n: usize) -> Result<Vec<(String, PointCloud, f64)>> {
    corpus_params(n, derive_seed(ctx.seed, 77))
        .into_iter()
        .map(|p| {
            let cloud = generate(&p)?;
            let t = 4.0 * cloud.median_nn_distance().max(1e-6);
            Ok((describe(&p, t), cloud, t))
        })
        .collect()
}

fn per_case(ctx: &Context, f: impl Fn(&Case) -> Outcome + Sync + Send) -> Vec<Outcome> {
    ctx.cases.par_iter().map(f).collect()
}

pub static REGISTRY: &[Property] = &[
    Property { id: "geometry.meb_oracle", min_scale: Scale::Tiny, check: geometry_meb },
    Property { id: "geometry.doubling_monotone", min_scale: Scale::Tiny, check: geometry_doubling },
    Property { id: "lsh.collision_probability", min_scale: Scale::Tiny, check: lsh_collision },
    Property { id: "lsh.soundness", min_scale: Scale::Tiny, check: lsh_soundness },
    Property { id: "lsh.completeness", min_scale: Scale::Medium, check: lsh_completeness },
    Property { id: "lsh.bucket_bound", min_scale: Scale::Medium, check: lsh_buckets },
    Property { id: "netforest.net", min_scale: Scale::Tiny, check: forest_net },
    Property { id: "netforest.partition", min_scale: Scale::Tiny, check: forest_partition },
    Property { id: "netforest.covering", min_scale: Scale::Tiny, check: forest_covering },
    Property { id: "netforest.packing", min_scale: Scale::Tiny, check: forest_packing },
    Property { id: "netforest.rel_equivalence", min_scale: Scale::Tiny, check: forest_rel },
    Property { id: "netforest.root_rel", min_scale: Scale::Tiny, check: forest_root_rel },
    Property { id: "netforest.extract_net", min_scale: Scale::Tiny, check: forest_extract },
    Property { id: "netforest.round_trip", min_scale: Scale::Tiny, check: forest_round_trip },
    Property { id: "netforest.determinism", min_scale: Scale::Tiny, check: forest_determinism },
    Property { id: "wspd.separation", min_scale: Scale::Tiny, check: wspd_separation },
    Property { id: "wspd.coverage", min_scale: Scale::Tiny, check: wspd_coverage },
    Property { id: "wspd.round_trip", min_scale: Scale::Tiny, check: wspd_round_trip },
    Property { id: "wspd.linear_size", min_scale: Scale::Medium, check: wspd_linear },
    Property { id: "wssd.approx_meb", min_scale: Scale::Tiny, check: wssd_meb },
    Property { id: "wssd.coverage", min_scale: Scale::Small, check: wssd_coverage },
    Property { id: "wssd.separation", min_scale: Scale::Small, check: wssd_separation },
    Property { id: "cech.level_below_root", min_scale: Scale::Tiny, check: cech_level },
    Property { id: "cech.sandwich", min_scale: Scale::Small, check: cech_sandwich },
    Property { id: "dimension.below_closest_pair", min_scale: Scale::Tiny, check: dim_zero },
    Property { id: "dimension.band", min_scale: Scale::Tiny, check: dim_band },
    Property { id: "dimension.translation", min_scale: Scale::Tiny, check: dim_translation },
];

/// Runs every property whose minimum scale is at most `scale`, in registry
/// order.
pub fn run_suite(scale: Scale, seed: u64) -> Result<Vec<PropertyReport>> {
    let ctx = build_context(scale, seed)?;
    let reports = REGISTRY
        .par_iter()
        .filter(|p| p.min_scale <= scale)
        .map(|p| {
            (p.check)(&ctx)
                .into_iter()
                .map(|o| PropertyReport { id: p.id, instance: o.instance, passed: o.passed, detail: o.detail })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>();
    Ok(reports.into_iter().flatten().collect())
}

/// One tab-separated line per report: id, status, instance, detail.
pub fn format_reports(reports: &[PropertyReport]) -> String {
    let mut out = String::from("id\tstatus\tinstance\tdetail\n");
    for r in reports {
        let status = if r.passed { "pass" } else { "FAIL" };
        out.push_str(&format!("{}\t{status}\t{}\t{}\n", r.id, r.instance, r.detail));
    }
    out
}

fn geometry_meb(ctx: &Context) -> Vec<Outcome> {
    per_case(ctx, |c| {
        let pts: Vec<&[f64]> = c.cloud.iter().take(12).collect();
        let ball = match exact_meb(&pts) {
            Ok(b) => b,
            Err(e) => return Outcome::error(&c.desc, e),
        };
        let d = c.cloud.dim() as f64;
        let diam = c.cloud.subset(&(0..pts.len()).collect::<Vec<_>>()).map(|s| s.diameter()).unwrap_or(0.0);
        // Jung's bound and the trivial lower bound.
        let jung = diam * (d / (2.0 * (d + 1.0))).sqrt();
        let ok = pts.iter().all(|p| ball.contains(p)) && le_tol(diam / 2.0, ball.radius) && le_tol(ball.radius, jung);
        Outcome::new(&c.desc, ok, format!("radius={} diam={diam}", ball.radius))
    })
}

fn geometry_doubling(ctx: &Context) -> Vec<Outcome> {
    per_case(ctx, |c| {
        let m = c.cloud.len().min(15);
        let sub = c.cloud.subset(&(0..m).collect::<Vec<_>>()).expect("valid ids");
        let diam = sub.diameter().max(1e-9);
        let mut prev = 0;
        let mut lambdas = Vec::new();
        for i in 1..=8 {
            let t = diam * i as f64 / 8.0;
            match brute_restricted_doubling(&sub, t) {
                Ok(dc) => {
                    lambdas.push(dc.lambda);
                    if dc.lambda < prev {
                        return Outcome::new(&c.desc, false, format!("lambda decreased: {lambdas:?}"));
                    }
                    prev = dc.lambda;
                }
                Err(e) => return Outcome::error(&c.desc, e),
            }
        }
        let below = sub.min_positive_distance().map(|d| d / 2.0).unwrap_or(1.0);
        let base = brute_restricted_doubling(&sub, below).map(|dc| dc.lambda).unwrap_or(0);
        Outcome::new(&c.desc, base == 1, format!("lambda={lambdas:?} below_closest={base}"))
    })
}

/// Simpson integration of the collision density of |a.(p-q)| ~ c |N(0,1)|.
fn collision_quadrature(c: f64, w: f64) -> f64 {
    let steps = 4000;
    let h = w / steps as f64;
    let f = |u: f64| {
        let density = (2.0 / std::f64::consts::PI).sqrt() / c * (-(u * u) / (2.0 * c * c)).exp();
        density * (1.0 - u / w)
    };
    let mut s = f(0.0) + f(w);
    for i in 1..steps {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn lsh_collision(ctx: &Context) -> Vec<Outcome> {
    let mut rng = rng_for(ctx.seed, 11);
    (0..10)
        .map(|i| {
            use rand::Rng;
            let c: f64 = rng.random_range(0.1..5.0);
            let w: f64 = rng.random_range(0.5..8.0);
            let (a, b) = (collision_probability(c, w), collision_quadrature(c, w));
            Outcome::new(
                &format!("c={c} w={w} draw={i} seed={}", ctx.seed),
                (a - b).abs() <= 1e-6,
                format!("closed={a} quad={b}"),
            )
        })
        .collect()
}

fn lsh_soundness(ctx: &Context) -> Vec<Outcome> {
    per_case(ctx, |c| {
        let params = match derive_params(c.cloud.len().max(2), c.t, 0.5, DEFAULT_DELTA) {
            Ok(p) => p,
            Err(e) => return Outcome::error(&c.desc, e),
        };
        let index = match LshIndex::build(&c.cloud, params, ctx.seed) {
            Ok(i) => i,
            Err(e) => return Outcome::error(&c.desc, e),
        };
        let bad = (0..c.cloud.len())
            .map(|q| {
                let rep = index.query(q).expect("valid id");
                rep.neighbours.iter().filter(|&&p| c.cloud.dist(p, q) > c.t).count()
                    + usize::from(rep.neighbours.windows(2).any(|w| w[0] >= w[1]))
            })
            .sum();
        Outcome::count(&format!("{} lsh_seed={}", c.desc, ctx.seed), bad, "reports beyond r or unsorted")
    })
}

/// Fraction of `builds` independent indices whose output equals the exact
/// answer for every query point.
pub fn completeness_fraction(cloud: &PointCloud, r: f64, builds: u64, seed: u64) -> Result<f64> {
    let truth: Vec<Vec<usize>> = (0..cloud.len()).map(|q| brute_near_neighbours(cloud, q, r)).collect::<Result<_>>()?;
    let params = derive_params(cloud.len(), r, 0.5, DEFAULT_DELTA)?;
    let mut exact = 0;
    for b in 0..builds {
        let index = LshIndex::build(cloud, params.clone(), derive_seed(seed, b))?;
        let all = (0..cloud.len()).into_par_iter().all(|q| index.query(q).expect("valid id").neighbours == truth[q]);
        exact += usize::from(all);
    }
    Ok(exact as f64 / builds as f64)
}

/// Distance below which the given fraction of all pairs lies.
pub fn pair_percentile(cloud: &PointCloud, fraction: f64) -> f64 {
    let n = cloud.len();
    let mut d: Vec<f64> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| cloud.dist(i, j)).collect();
    d.sort_by(f64::total_cmp);
    d[((d.len() as f64 * fraction) as usize).min(d.len() - 1)]
}

fn lsh_completeness(ctx: &Context) -> Vec<Outcome> {
    let p = GenParams::new(GenKind::Uniform, 2000, 8, derive_seed(ctx.seed, 21));
    let cloud = match generate(&p) {
        Ok(c) => c,
        Err(e) => return vec![Outcome::error("uniform", e)],
    };
    let r = pair_percentile(&cloud, 0.01);
    let desc = describe(&p, r);
    match completeness_fraction(&cloud, r, 20, ctx.seed) {
        Ok(f) => {
            let (lo, hi) = wilson_band(f, 20);
            vec![Outcome::new(
                &desc,
                f >= 1.0 - DEFAULT_DELTA - 0.05,
                format!("exact_builds_fraction={f:.3} band95=[{lo:.3},{hi:.3}]"),
            )]
        }
        Err(e) => vec![Outcome::error(&desc, e)],
    }
}

/// 95% Wilson score interval of a binomial proportion.
pub fn wilson_band(p: f64, trials: usize) -> (f64, f64) {
    let (z, m) = (1.96f64, trials as f64);
    let denom = 1.0 + z * z / m;
    let center = (p + z * z / (2.0 * m)) / denom;
    let half = z * (p * (1.0 - p) / m + z * z / (4.0 * m * m)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Mean candidates scanned per query and the bound `1.5 l (C + 1)`, where `C`
/// is the largest number of other points within `r / rho` of a query.
pub fn bucket_statistics(cloud: &PointCloud, r: f64, rho: f64, seed: u64) -> Result<(f64, f64)> {
    let params = derive_params(cloud.len(), r, rho, DEFAULT_DELTA)?;
    let c_max = (0..cloud.len())
        .into_par_iter()
        .map(|q| brute_near_neighbours(cloud, q, params.r2).map(|v| v.len() - 1))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .max()
        .unwrap_or(0);
    let index = LshIndex::build(cloud, params.clone(), seed)?;
    let scanned: usize =
        (0..cloud.len()).into_par_iter().map(|q| index.query(q).expect("valid id").candidates_scanned).sum();
    Ok((scanned as f64 / cloud.len() as f64, 1.5 * params.l as f64 * (c_max as f64 + 1.0)))
}

fn lsh_buckets(ctx: &Context) -> Vec<Outcome> {
    let p = GenParams::new(GenKind::Clustered, 2000, 6, derive_seed(ctx.seed, 22)).with_k(8).with_noise(0.3);
    let cloud = match generate(&p) {
        Ok(c) => c,
        Err(e) => return vec![Outcome::error("clustered", e)],
    };
    let r = cloud.median_nn_distance();
    let desc = describe(&p, r);
    match bucket_statistics(&cloud, r, 0.5, ctx.seed) {
        Ok((mean, bound)) => vec![Outcome::new(&desc, mean <= bound, format!("mean={mean:.1} bound={bound:.1}"))],
        Err(e) => vec![Outcome::error(&desc, e)],
    }
}

fn forest_net(ctx: &Context) -> Vec<Outcome> {
    per_case(ctx, |c| {
        let chk = check_forest(&c.cloud, &c.forest, false);
        let bad = chk.net_covering + chk.net_separation + chk.net_assignment;
        Outcome::new(
            &c.desc,
            bad == 0,
            format!(
                "covering={} separation={} assignment={}",
                chk.net_covering, chk.net_separation, chk.net_assignment
            ),
        )
    })
}

fn forest_partition(ctx: &Context) -> Vec<Outcome> {
    per_case(ctx, |c| {
        let chk = check_forest(&c.cloud, &c.forest, false);
        Outcome::new(
            &c.desc,
            chk.partition + chk.structure == 0,
            format!("partition={} structure={}", chk.partition, chk.structure),
        )
    })
}

fn forest_covering(ctx: &Context) -> Vec<Outcome> {
    per_case(ctx, |c| Outcome::count(&c.desc, check_forest(&c.cloud, &c.forest, false).covering, "covering violations"))
}

fn forest_packing(ctx: &Context) -> Vec<Outcome> {
    per_case(ctx, |c| {
        let chk = check_forest(&c.cloud, &c.forest, false);
        Outcome::new(&c.desc, chk.packing == 0, format!("packing={} cross_tree={}", chk.packing, chk.packing_global))
    })
}

/// Nodes whose stored Rel set differs from the brute-force one.
pub fn rel_mismatches(cloud: &PointCloud, forest: &NetForest) -> usize {
    let brute = brute_rel(cloud, forest);
    (0..forest.nodes().len()).filter(|&u| forest.rel(u) != brute[u].as_slice()).count()
}

fn forest_rel(ctx: &Context) -> Vec<Outcome> {
    per_case(ctx, |c| Outcome::count(&c.desc, rel_mismatches(&c.cloud, &c.forest), "Rel mismatches"))
}

fn forest_root_rel(ctx: &Context) -> Vec<Outcome> {
    per_case(ctx, |c| {
        let f = &c.forest;
        let bad = f
            .roots()
            .iter()
            .filter(|&&r| {
                let rel = f.rel(r);
                !rel.contains(&r) || rel.iter().any(|&v| !f.node(v).is_root() || f.rep_dist(&c.cloud, r, v) > 7.0 * c.t)
            })
            .count();
        Outcome::count(&c.desc, bad, "roots with Rel outside the 7t root net")
    })
}

fn forest_extract(ctx: &Context) -> Vec<Outcome> {
    per_case(ctx, |c| {
        let f = &c.forest;
        let lo = f.nodes().iter().map(|v| v.level).min().unwrap_or(0) - 1;
        let mut bad = Vec::new();
        for l in lo..=f.root_level() {
            match check_extract_net(&c.cloud, f, l) {
                Ok(chk) if chk.is_ok() => {}
                Ok(chk) => bad.push(format!("l={l}:{chk:?}")),
                Err(e) => return Outcome::error(&c.desc, e),
            }
        }
        let mut roots = f.roots().to_vec();
        roots.sort_unstable();
        let ends = f
            .cut(f.root_level())
            .map(|mut v| {
                v.sort_unstable();
                v == roots
            })
            .unwrap_or(false)
            && f.extract_net(lo).map(|v| v.len() == c.cloud.len()).unwrap_or(false);
        Outcome::new(
            &c.desc,
            bad.is_empty() && ends,
            format!("levels={}..={} ends_ok={ends} {}", lo, f.root_level(), bad.join(";")),
        )
    })
}

fn forest_round_trip(ctx: &Context) -> Vec<Outcome> {
    per_case(ctx, |c| {
        let text = format_forest(&c.forest);
        let ok = parse_forest(&text).map(|g| format_forest(&g) == text && g == c.forest).unwrap_or(false);
        Outcome::new(&c.desc, ok, "format/parse")
    })
}

fn forest_determinism(ctx: &Context) -> Vec<Outcome> {
    per_case(ctx, |c| {
        let s = NeighbourStrategy::lsh(ctx.seed);
        let a = NetForest::build(&c.cloud, c.t, &s).map(|f| format_forest(&f));
        let b = NetForest::build(&c.cloud, c.t, &s).map(|f| format_forest(&f));
        let ok = matches!((&a, &b), (Ok(x), Ok(y)) if x == y);
        Outcome::new(&format!("{} lsh_seed={}", c.desc, ctx.seed), ok, "two LSH builds with one seed")
    })
}

const WSPD_EPS: [f64; 2] = [0.25, 0.75];

fn wspd_outcomes(
    ctx: &Context,
    pick: fn(&crate::wspd::WspdReport) -> String,
    ok: fn(&crate::wspd::WspdReport) -> bool,
) -> Vec<Outcome> {
    ctx.cases
        .par_iter()
        .flat_map_iter(|c| {
            WSPD_EPS.iter().map(move |&eps| {
                let desc = format!("{} eps={eps}", c.desc);
                match gen_wspd(&c.cloud, &c.forest, eps) {
                    Ok(w) => {
                        let rep = verify_wspd(&c.cloud, &c.forest, &w.pairs, eps, c.t);
                        Outcome::new(&desc, ok(&rep), pick(&rep))
                    }
                    Err(e) => Outcome::error(&desc, e),
                }
            })
        })
        .collect()
}

fn wspd_separation(ctx: &Context) -> Vec<Outcome> {
    wspd_outcomes(
        ctx,
        |r| format!("{} of {} pairs not separated", r.separation.len(), r.pairs_checked),
        |r| r.separation.is_empty(),
    )
}

fn wspd_coverage(ctx: &Context) -> Vec<Outcome> {
    wspd_outcomes(
        ctx,
        |r| format!("{} of {} point pairs uncovered", r.coverage.len(), r.point_pairs_checked),
        |r| r.coverage.is_empty(),
    )
}

fn wspd_round_trip(ctx: &Context) -> Vec<Outcome> {
    per_case(ctx, |c| match gen_wspd(&c.cloud, &c.forest, 0.5) {
        Ok(w) => {
            let text = format_wspd(&w);
            let ok = parse_wspd(&text).map(|v| v == w).unwrap_or(false);
            Outcome::new(&c.desc, ok, format!("{} pairs", w.pairs.len()))
        }
        Err(e) => Outcome::error(&c.desc, e),
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let m = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}

/// WSPD size for affine 2-flat samples of each size, with `t` a fixed
/// multiple of the median nearest-neighbour distance.
pub fn wspd_sizes(sizes: &[usize], seed: u64) -> Result<Vec<usize>> {
    sizes
        .par_iter()
        .map(|&n| {
            let cloud = generate(&GenParams::new(GenKind::Affine, n, 4, seed).with_k(2))?;
            let t = 3.0 * cloud.median_nn_distance();
            let forest = NetForest::build(&cloud, t, &NeighbourStrategy::Exact)?;
            Ok(gen_wspd(&cloud, &forest, 0.5)?.pairs.len())
        })
        .collect()
}

fn wspd_linear(ctx: &Context) -> Vec<Outcome> {
    let sizes = [250, 500, 1000, 2000];
    let desc = format!("kind=affine d=4 k=2 n={sizes:?} seed={} t=3*median_nn eps=0.5", derive_seed(ctx.seed, 31));
    match wspd_sizes(&sizes, derive_seed(ctx.seed, 31)) {
        Ok(pairs) => {
            let xs: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
            let ys: Vec<f64> = pairs.iter().map(|&p| p as f64).collect();
            let slope = log_slope(&xs, &ys);
            vec![Outcome::new(&desc, (slope - 1.0).abs() <= 0.2, format!("pairs={pairs:?} slope={slope:.3}"))]
        }
        Err(e) => vec![Outcome::error(&desc, e)],
    }
}

fn wssd_meb(ctx: &Context) -> Vec<Outcome> {
    use rand::Rng;
    let mut rng = rng_for(ctx.seed, 41);
    let mut worst = 0.0f64;
    let mut bad = 0;
    for _ in 0..30 {
        let d = [2usize, 5, 10][rng.random_range(0..3)];
        let m = rng.random_range(1..=12);
        let pts: Vec<Vec<f64>> = (0..m).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let refs: Vec<&[f64]> = pts.iter().map(Vec::as_slice).collect();
        let exact = exact_meb(&refs).expect("nonempty").radius;
        let approx = approx_meb(&refs, DEFAULT_DELTA_MEB).expect("valid input");
        if !refs.iter().all(|p| approx.contains(p)) || !le_tol(approx.radius, (1.0 + DEFAULT_DELTA_MEB) * exact) {
            bad += 1;
        }
        if exact > 0.0 {
            worst = worst.max(approx.radius / exact);
        }
    }
    vec![Outcome::new(
        &format!("random sets seed={}", ctx.seed),
        bad == 0,
        format!("{bad} failures worst_ratio={worst:.4}"),
    )]
}

fn wssd_outcomes(ctx: &Context, coverage: bool) -> Vec<Outcome> {
    let cases = match small_cases(ctx, 20) {
        Ok(c) => c,
        Err(e) => return vec![Outcome::error("small corpus", e)],
    };
    let mut runs = Vec::new();
    for (desc, cloud, t) in cases {
        for (k, eps) in [(2usize, 0.5), (3, 1.0)] {
            runs.push((format!("{desc} k={k} eps={eps}"), cloud.clone(), t, k, eps));
        }
    }
    runs.into_par_iter()
        .map(|(desc, cloud, t, k, eps)| {
            let run = || -> Result<crate::wssd::WssdReport> {
                let forest = NetForest::build(&cloud, 2.0 * t, &NeighbourStrategy::Exact)?;
                let w = gen_wssd(&cloud, &forest, eps, k)?;
                Ok(verify_wssd(&cloud, &forest, &w))
            };
            match run() {
                Ok(r) if coverage => Outcome::new(
                    &desc,
                    r.coverage_violations == 0,
                    format!("{} of {} simplices uncovered", r.coverage_violations, r.simplices_checked),
                ),
                Ok(r) => Outcome::new(
                    &desc,
                    r.separation.is_empty(),
                    format!("{} tuples not separated, {} transversals", r.separation.len(), r.transversals_checked),
                ),
                Err(e) => Outcome::error(&desc, e),
            }
        })
        .collect()
}

fn wssd_coverage(ctx: &Context) -> Vec<Outcome> {
    wssd_outcomes(ctx, true)
}

fn wssd_separation(ctx: &Context) -> Vec<Outcome> {
    wssd_outcomes(ctx, false)
}

fn cech_level(ctx: &Context) -> Vec<Outcome> {
    per_case(ctx, |c| {
        let forest2 = match NetForest::build(&c.cloud, 2.0 * c.t, &NeighbourStrategy::Exact) {
            Ok(f) => f,
            Err(e) => return Outcome::error(&c.desc, e),
        };
        let mut bad = 0;
        for eps in [0.25, 0.5, 1.0] {
            for alpha in default_grid(&c.cloud, eps, c.t) {
                match coarsening_level(alpha, eps) {
                    Ok(h) if h < forest2.root_level() => {}
                    _ => bad += 1,
                }
            }
        }
        Outcome::count(&c.desc, bad, "grid values with h(alpha) >= root level of the 2t forest")
    })
}

fn cech_sandwich(ctx: &Context) -> Vec<Outcome> {
    let cases = match small_cases(ctx, 16) {
        Ok(c) => c,
        Err(e) => return vec![Outcome::error("small corpus", e)],
    };
    let mut runs = Vec::new();
    for (desc, cloud, t) in cases {
        for eps in [0.5, 1.0] {
            runs.push((format!("{desc} k=2 eps={eps}"), cloud.clone(), t, eps));
        }
    }
    runs.into_par_iter()
        .map(|(desc, cloud, t, eps)| {
            let run = || -> Result<crate::cech::SandwichReport> {
                let forest = NetForest::build(&cloud, 2.0 * t, &NeighbourStrategy::Exact)?;
                let w = gen_wssd(&cloud, &forest, eps, 2)?;
                let out = build_filtration(&cloud, &forest, &w, &default_grid(&cloud, eps, t))?;
                Ok(verify_sandwich(&cloud, &out, 2))
            };
            match run() {
                Ok(r) => Outcome::new(
                    &desc,
                    r.is_ok(),
                    format!(
                        "lower={} upper={} stray={} checked={}",
                        r.lower.len(),
                        r.upper.len(),
                        r.stray_vertices,
                        r.cech_simplices_checked
                    ),
                ),
                Err(e) => Outcome::error(&desc, e),
            }
        })
        .collect()
}

fn dim_zero(ctx: &Context) -> Vec<Outcome> {
    per_case(ctx, |c| {
        let Some(cp) = c.cloud.min_positive_distance() else {
            return Outcome::new(&c.desc, true, "no distinct pair");
        };
        let run = || -> Result<f64> {
            let f = NetForest::build(&c.cloud, cp / 2.0, &NeighbourStrategy::Exact)?;
            Ok(estimate_dim(&f)?.estimate)
        };
        match run() {
            Ok(e) => Outcome::new(&c.desc, e == 0.0, format!("estimate={e} at t={}", cp / 2.0)),
            Err(e) => Outcome::error(&c.desc, e),
        }
    })
}

/// Forest estimate and exhaustive `log2 lambda_t` on one cloud of at most
/// 24 points.
pub fn dimension_pair(cloud: &PointCloud, t: f64) -> Result<(f64, f64)> {
    let f = NetForest::build(cloud, t, &NeighbourStrategy::Exact)?;
    let est = estimate_dim(&f)?.estimate;
    let brute = (brute_restricted_doubling(cloud, t)?.lambda as f64).log2();
    Ok((est, brute))
}

fn dim_band(ctx: &Context) -> Vec<Outcome> {
    let params = [
        GenParams::new(GenKind::Affine, 12, 3, derive_seed(ctx.seed, 51)).with_k(1),
        GenParams::new(GenKind::Affine, 12, 3, derive_seed(ctx.seed, 52)).with_k(2),
        GenParams::new(GenKind::Curve, 12, 2, derive_seed(ctx.seed, 53)).with_spacing(0.1),
    ];
    params
        .par_iter()
        .flat_map_iter(|p| {
            let cloud = generate(p).expect("valid generator parameters");
            let diam = cloud.diameter();
            [0.25, 0.5, 1.0].into_iter().map(move |frac| {
                let t = frac * diam.max(1e-9);
                let desc = describe(p, t);
                match dimension_pair(&cloud, t) {
                    Ok((est, brute)) => {
                        Outcome::new(&desc, (est - brute).abs() <= 2.0, format!("estimate={est:.3} brute={brute:.3}"))
                    }
                    Err(e) => Outcome::error(&desc, e),
                }
            })
        })
        .collect()
}

fn dim_translation(ctx: &Context) -> Vec<Outcome> {
    per_case(ctx, |c| {
        // Curve samples are equally spaced, so nearest-point ties are not generic.
        if c.desc.starts_with("kind=curve") {
            return Outcome::new(&c.desc, true, "skipped: non-generic distances");
        }
        let offset = vec![3.25; c.cloud.dim()];
        let run = || -> Result<(f64, f64)> {
            let moved = c.cloud.translated(&offset)?;
            let f = NetForest::build(&moved, c.t, &NeighbourStrategy::Exact)?;
            Ok((estimate_dim(&c.forest)?.estimate, estimate_dim(&f)?.estimate))
        };
        match run() {
            Ok((a, b)) => Outcome::new(&c.desc, a == b, format!("original={a} translated={b}")),
            Err(e) => Outcome::error(&c.desc, e),
        }
    })
}
