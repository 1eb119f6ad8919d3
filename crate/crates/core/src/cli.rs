//! Command-line front end. [`run`] parses arguments, executes one command and
//! returns the process exit code: 0 on success, 1 on invalid input or a
//! failed verification, 2 on a usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::cech::{build_filtration, default_grid, format_filtration, verify_sandwich};
use crate::dimension::{estimate_dim, format_dim};
use crate::geometry::{brute_near_neighbours, generate, read_points, write_points, GenKind, GenParams, PointCloud};
use crate::lsh::{derive_params, LshIndex, NeighbourStrategy, DEFAULT_DELTA, DEFAULT_RHO};
use crate::netforest::{check_forest, format_forest, read_forest, NetForest};
use crate::suite::{format_reports, run_suite, Scale};
use crate::wspd::{format_wspd, gen_wspd, verify_wspd};
use crate::wssd::{format_wssd, gen_wssd, verify_wssd};
use crate::{Error, Result};

/// Largest inputs the exhaustive verifiers accept.
const VERIFY_FOREST_MAX: usize = 5000;
const VERIFY_WSPD_MAX: usize = 5000;
const VERIFY_WSSD_MAX: usize = 200;
const VERIFY_CECH_MAX: usize = 100;

#[derive(Debug, Parser)]
#[command(name = "localdim", version, about = "Scale-restricted net-forests and decompositions of point clouds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic point file.
    GenData(GenArgs),
    /// Build a net-forest at scale t.
    BuildForest(PipelineArgs),
    /// t-restricted well-separated pair decomposition.
    Wspd(PipelineArgs),
    /// t-restricted well-separated simplicial decomposition (forest at 2t).
    Wssd(PipelineArgs),
    /// Approximate truncated Čech filtration (forest at 2t).
    Cech(PipelineArgs),
    /// Restricted doubling dimension estimate.
    DimEstimate(PipelineArgs),
    /// LSH sweep over n and rho, as tab-separated rows.
    Bench(BenchArgs),
    /// Oracle property suite, as tab-separated rows.
    RunSuite(SuiteArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_parser = parse_kind)]
    pub kind: GenKind,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    /// Flat dimension (affine) or cluster count (clustered).
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 0.05)]
    pub spacing: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 10.0)]
    pub spread: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Point file.
    #[arg(long)]
    pub input: PathBuf,
    /// Previously built forest; its scale must match the command.
    #[arg(long)]
    pub forest: Option<PathBuf>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = DEFAULT_RHO)]
    pub rho: f64,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,
    /// Required unless --exact-nn is given.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Exact near-neighbour queries instead of LSH.
    #[arg(long)]
    pub exact_nn: bool,
    /// Run the brute-force verifier and exit 1 on violations.
    #[arg(long)]
    pub verify: bool,
    /// Comma-separated scales for `cech`; default is a geometric grid up to t.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_parser = parse_kind, default_value = "affine")]
    pub kind: GenKind,
    #[arg(long, value_delimiter = ',', default_value = "500,1000,2000")]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 8)]
    pub d: usize,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    #[arg(long, default_value_t = 10.0)]
    pub spread: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub rho: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,
    /// Query radius as a multiple of the median nearest-neighbour distance.
    #[arg(long, default_value_t = 2.0)]
    pub t: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SuiteArgs {
    #[arg(long, value_enum, default_value = "tiny")]
    pub scale: Scale,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn parse_kind(s: &str) -> std::result::Result<GenKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Usage(String),
    Invalid(Error),
    Verify(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Invalid(e)
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Runs the command line `args` (program name first) and returns the exit
/// code. Artifacts go to `--output` or `out`; diagnostics go to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::GenData(a) => gen_data(&a, out),
        Command::BuildForest(a) => build_forest(&a, out, err),
        Command::Wspd(a) => wspd(&a, out, err),
        Command::Wssd(a) => wssd(&a, out, err),
        Command::Cech(a) => cech(&a, out, err),
        Command::DimEstimate(a) => dim_estimate(&a, out),
        Command::Bench(a) => bench(&a, out),
        Command::RunSuite(a) => suite(&a, out, err),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
        Err(Failure::Invalid(e)) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
        Err(Failure::Verify(msg)) => {
            let _ = writeln!(err, "verification failed: {msg}");
            1
        }
    }
}

fn emit(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn gen_data(a: &GenArgs, out: &mut dyn Write) -> CmdResult {
    let params = GenParams::new(a.kind, a.n, a.d, a.seed)
        .with_k(a.k)
        .with_spacing(a.spacing)
        .with_noise(a.noise)
        .with_radius(a.radius)
        .with_spread(a.spread);
    let cloud = generate(&params)?;
    emit(a.output.as_deref(), &write_points(&cloud), out)?;
    Ok(())
}

fn strategy(a: &PipelineArgs) -> std::result::Result<NeighbourStrategy, Failure> {
    if a.exact_nn {
        return Ok(NeighbourStrategy::Exact);
    }
    let seed = a.seed.ok_or_else(|| Failure::Usage("--seed is required unless --exact-nn is given".into()))?;
    Ok(NeighbourStrategy::Lsh { rho: a.rho, delta: a.delta, seed })
}

/// Loads the points and obtains a forest at `factor * t`, from `--forest` or
/// by building one. Returns the cloud, the forest and `t`.
fn load(a: &PipelineArgs, factor: f64) -> std::result::Result<(PointCloud, NetForest, f64), Failure> {
    let cloud = read_points(&a.input)?;
    match &a.forest {
        Some(path) => {
            let forest = read_forest(path)?;
            if forest.n() != cloud.len() || forest.dim() != cloud.dim() {
                return Err(Error::Input("forest does not match the point file".into()).into());
            }
            let t = forest.t() / factor;
            if let Some(flag) = a.t {
                if (flag - t).abs() > 1e-12 * t.abs().max(flag.abs()) {
                    return Err(Error::Input(format!(
                        "forest scale {} does not match --t {flag} (expected {})",
                        forest.t(),
                        factor * flag
                    ))
                    .into());
                }
            }
            Ok((cloud, forest, t))
        }
        None => {
            let t = a.t.ok_or_else(|| Failure::Usage("--t is required when no --forest is given".into()))?;
            let strategy = strategy(a)?;
            let forest = NetForest::build(&cloud, factor * t, &strategy)?;
            Ok((cloud, forest, t))
        }
    }
}

fn too_large(err: &mut dyn Write, n: usize, limit: usize) -> bool {
    if n > limit {
        let _ = writeln!(err, "verification skipped: n={n} exceeds the oracle limit {limit}");
        return true;
    }
    false
}

fn build_forest(a: &PipelineArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let (cloud, forest, _) = load(a, 1.0)?;
    emit(a.output.as_deref(), &format_forest(&forest), out)?;
    if a.verify && !too_large(err, cloud.len(), VERIFY_FOREST_MAX) {
        let chk = check_forest(&cloud, &forest, true);
        let _ = writeln!(err, "{chk:?}");
        if !chk.is_ok() {
            return Err(Failure::Verify(chk.messages.join("; ")));
        }
    }
    Ok(())
}

fn wspd(a: &PipelineArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let (cloud, forest, t) = load(a, 1.0)?;
    let w = gen_wspd(&cloud, &forest, a.epsilon)?;
    emit(a.output.as_deref(), &format_wspd(&w), out)?;
    if a.verify && !too_large(err, cloud.len(), VERIFY_WSPD_MAX) {
        let r = verify_wspd(&cloud, &forest, &w.pairs, a.epsilon, t);
        let _ = writeln!(
            err,
            "wspd pairs={} separation_violations={} coverage_violations={}",
            w.pairs.len(),
            r.separation.len(),
            r.coverage.len()
        );
        if !r.is_ok() {
            return Err(Failure::Verify(format!("{:?} {:?}", r.separation, r.coverage)));
        }
    }
    Ok(())
}

fn wssd(a: &PipelineArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let (cloud, forest, _) = load(a, 2.0)?;
    let w = gen_wssd(&cloud, &forest, a.epsilon, a.k)?;
    emit(a.output.as_deref(), &format_wssd(&w), out)?;
    if a.verify && !too_large(err, cloud.len(), VERIFY_WSSD_MAX) {
        let r = verify_wssd(&cloud, &forest, &w);
        let _ = writeln!(
            err,
            "wssd simplices_checked={} coverage_violations={} separation_violations={}",
            r.simplices_checked,
            r.coverage_violations,
            r.separation.len()
        );
        if !r.is_ok() {
            return Err(Failure::Verify(format!("{:?} {:?}", r.coverage, r.separation)));
        }
    }
    Ok(())
}

fn cech(a: &PipelineArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let (cloud, forest, t) = load(a, 2.0)?;
    let w = gen_wssd(&cloud, &forest, a.epsilon, a.k)?;
    let grid = a.grid.clone().unwrap_or_else(|| default_grid(&cloud, a.epsilon, t));
    let filtration = build_filtration(&cloud, &forest, &w, &grid)?;
    emit(a.output.as_deref(), &format_filtration(&filtration), out)?;
    if a.verify && !too_large(err, cloud.len(), VERIFY_CECH_MAX) {
        let r = verify_sandwich(&cloud, &filtration, a.k);
        let _ = writeln!(
            err,
            "cech slices={} checked={} lower={} upper={} stray={}",
            filtration.slices.len(),
            r.cech_simplices_checked,
            r.lower.len(),
            r.upper.len(),
            r.stray_vertices
        );
        if !r.is_ok() {
            return Err(Failure::Verify(format!("lower {:?} upper {:?}", r.lower, r.upper)));
        }
    }
    Ok(())
}

fn dim_estimate(a: &PipelineArgs, out: &mut dyn Write) -> CmdResult {
    let (_, forest, _) = load(a, 1.0)?;
    emit(a.output.as_deref(), &format_dim(&estimate_dim(&forest)?), out)?;
    Ok(())
}

fn bench(a: &BenchArgs, out: &mut dyn Write) -> CmdResult {
    let mut text = String::from("n\trho\tr\tbuild_ms\tmean_query_us\tmean_candidates\trecall\n");
    for &n in &a.n {
        let params = GenParams::new(a.kind, n, a.d, a.seed).with_k(a.k).with_noise(a.noise).with_spread(a.spread);
        let cloud = generate(&params)?;
        let r = a.t * cloud.median_nn_distance();
        let truth: Vec<Vec<usize>> =
            (0..cloud.len()).map(|q| brute_near_neighbours(&cloud, q, r)).collect::<Result<_>>()?;
        for &rho in &a.rho {
            let lsh = derive_params(cloud.len().max(2), r, rho, a.delta)?;
            let start = Instant::now();
            let index = LshIndex::build(&cloud, lsh, a.seed)?;
            let build_ms = start.elapsed().as_secs_f64() * 1e3;
            let (mut found, mut total, mut scanned) = (0usize, 0usize, 0usize);
            let start = Instant::now();
            for (q, want) in truth.iter().enumerate() {
                let rep = index.query(q)?;
                scanned += rep.candidates_scanned;
                found += want.iter().filter(|p| rep.neighbours.binary_search(p).is_ok()).count();
                total += want.len();
            }
            let query_us = start.elapsed().as_secs_f64() * 1e6 / n as f64;
            let recall = if total == 0 { 1.0 } else { found as f64 / total as f64 };
            text.push_str(&format!(
                "{n}\t{rho}\t{r}\t{build_ms:.3}\t{query_us:.3}\t{:.3}\t{recall:.6}\n",
                scanned as f64 / n as f64
            ));
        }
    }
    emit(a.output.as_deref(), &text, out)?;
    Ok(())
}

fn suite(a: &SuiteArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let reports = run_suite(a.scale, a.seed)?;
    emit(a.output.as_deref(), &format_reports(&reports), out)?;
    let failed = reports.iter().filter(|r| !r.passed).count();
    let _ = writeln!(err, "{} reports, {failed} failed", reports.len());
    if failed > 0 {
        return Err(Failure::Verify(format!("{failed} properties failed")));
    }
    Ok(())
}
