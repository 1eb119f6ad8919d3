use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use localdim::geometry::{generate, parse_points, write_points, GenKind, GenParams};
use localdim::netforest::{check_forest, format_forest, parse_forest};
use tempfile::TempDir;

fn localdim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_localdim")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_cloud(dir: &TempDir, name: &str, params: &GenParams) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, write_points(&generate(params).unwrap())).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_data_writes_requested_shape() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("a.pts");
    let o = localdim(&[
        "gen-data",
        "--kind",
        "affine",
        "--k",
        "2",
        "--d",
        "16",
        "--n",
        "500",
        "--seed",
        "1",
        "--output",
        s(&out),
    ]);
    assert!(o.status.success());
    let cloud = parse_points(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!((cloud.len(), cloud.dim()), (500, 16));
}

#[test]
fn gen_data_without_seed_is_a_usage_error() {
    let o = localdim(&["gen-data", "--kind", "affine", "--d", "3", "--n", "10"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn curve_file_replays_the_generator() {
    let o = localdim(&["gen-data", "--kind", "curve", "--spacing", "0.01", "--d", "2", "--n", "200", "--seed", "9"]);
    assert!(o.status.success());
    let expected = generate(&GenParams::new(GenKind::Curve, 200, 2, 9).with_spacing(0.01)).unwrap();
    assert_eq!(stdout(&o), write_points(&expected));
}

#[test]
fn lsh_forest_verifies_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let params = GenParams::new(GenKind::Affine, 1000, 6, 3).with_k(2);
    let input = write_cloud(&dir, "a.pts", &params);
    let t = 5.0 * generate(&params).unwrap().median_nn_distance();
    let t = t.to_string();
    let run = || localdim(&["build-forest", "--input", s(&input), "--t", &t, "--seed", "7", "--verify"]);
    let (a, b) = (run(), run());
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let forest = parse_forest(&stdout(&a)).unwrap();
    assert_eq!(format_forest(&forest), stdout(&a));
}

#[test]
fn lsh_forest_requires_seed() {
    let dir = TempDir::new().unwrap();
    let input = write_cloud(&dir, "a.pts", &GenParams::new(GenKind::Uniform, 20, 2, 1));
    let o = localdim(&["build-forest", "--input", s(&input), "--t", "0.3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exact_forest_is_repeatable_and_large_t_gives_one_root() {
    let dir = TempDir::new().unwrap();
    let input = write_cloud(&dir, "u.pts", &GenParams::new(GenKind::Uniform, 100, 3, 2));
    let a = localdim(&["build-forest", "--input", s(&input), "--t", "10", "--exact-nn"]);
    let b = localdim(&["build-forest", "--input", s(&input), "--t", "10", "--exact-nn"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(parse_forest(&stdout(&a)).unwrap().roots().len(), 1);
}

#[test]
fn pipelines_verify() {
    let dir = TempDir::new().unwrap();
    let p300 = write_cloud(&dir, "p300.pts", &GenParams::new(GenKind::Uniform, 300, 2, 4));
    let p40 = write_cloud(
        &dir,
        "p40.pts",
        &GenParams::new(GenKind::Clustered, 40, 3, 5).with_k(3).with_noise(0.1).with_spread(1.0),
    );
    let p20 = write_cloud(&dir, "p20.pts", &GenParams::new(GenKind::Uniform, 20, 2, 6));
    let cases: [&[&str]; 3] = [
        &["wspd", "--input", s(&p300), "--epsilon", "0.5", "--t", "2", "--seed", "1", "--verify"],
        &["wssd", "--input", s(&p40), "--k", "2", "--epsilon", "0.5", "--t", "0.5", "--seed", "1", "--verify"],
        &["cech", "--input", s(&p20), "--epsilon", "0.5", "--t", "0.3", "--seed", "1", "--verify"],
    ];
    for args in cases {
        let o = localdim(args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stdout.is_empty());
    }
}

#[test]
fn forest_scale_must_match_command() {
    let dir = TempDir::new().unwrap();
    let input = write_cloud(&dir, "u.pts", &GenParams::new(GenKind::Uniform, 30, 2, 8));
    let forest = dir.path().join("f.txt");
    let o = localdim(&["build-forest", "--input", s(&input), "--t", "0.4", "--exact-nn", "--output", s(&forest)]);
    assert!(o.status.success());
    let ok = localdim(&["wspd", "--input", s(&input), "--forest", s(&forest), "--t", "0.4", "--verify"]);
    assert!(ok.status.success());
    let bad = localdim(&["wspd", "--input", s(&input), "--forest", s(&forest), "--t", "0.5"]);
    assert_eq!(bad.status.code(), Some(1));
    // wssd expects a forest at 2t.
    let wssd = localdim(&["wssd", "--input", s(&input), "--forest", s(&forest), "--t", "0.2", "--verify"]);
    assert!(wssd.status.success(), "{}", String::from_utf8_lossy(&wssd.stderr));
}

#[test]
fn dim_estimate_line() {
    let dir = TempDir::new().unwrap();
    let input = write_cloud(&dir, "c.pts", &GenParams::new(GenKind::Affine, 50, 3, 1).with_k(1));
    let o = localdim(&["dim-estimate", "--input", s(&input), "--t", "0.2", "--exact-nn"]);
    assert!(o.status.success());
    let line = stdout(&o);
    assert!(line.starts_with("dim-estimate t=0.2 x="), "{line}");
    assert!(line.contains(" log2x="));
}

#[test]
fn missing_input_file_is_a_validation_error() {
    let o = localdim(&["build-forest", "--input", "/nonexistent/points", "--t", "1", "--exact-nn"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
}

fn bench_rows(args: &[&str]) -> Vec<Vec<String>> {
    let o = localdim(args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "n\trho\tr\tbuild_ms\tmean_query_us\tmean_candidates\trecall");
    lines.map(|l| l.split('\t').map(str::to_string).collect()).collect()
}

#[test]
fn bench_recall_and_candidate_trend() {
    let rows = bench_rows(&["bench", "--n", "500,1000,2000", "--rho", "0.5", "--seed", "3"]);
    assert_eq!(rows.len(), 3);
    for r in &rows {
        let recall: f64 = r[6].parse().unwrap();
        assert!(recall >= 0.85, "{r:?}");
    }
    let rows = bench_rows(&[
        "bench",
        "--kind",
        "clustered",
        "--k",
        "4",
        "--noise",
        "0.2",
        "--spread",
        "3",
        "--n",
        "1000",
        "--rho",
        "0.25,0.75",
        "--seed",
        "3",
    ]);
    let cand: Vec<f64> = rows.iter().map(|r| r[5].parse().unwrap()).collect();
    assert!(cand[0] < cand[1], "{cand:?}");
}

#[test]
fn bench_counts_are_deterministic() {
    let args = ["bench", "--n", "500,500", "--seed", "11"];
    let (a, b) = (bench_rows(&args), bench_rows(&args));
    let strip =
        |rows: &[Vec<String>]| rows.iter().map(|r| (r[0].clone(), r[5].clone(), r[6].clone())).collect::<Vec<_>>();
    assert_eq!(strip(&a), strip(&b));
    assert_eq!(strip(&a)[0], strip(&a)[1]);
}

#[test]
fn tiny_suite_via_cli() {
    let o = localdim(&["run-suite", "--scale", "tiny", "--seed", "42"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).lines().skip(1).all(|l| l.split('\t').nth(1) == Some("pass")));
}

#[test]
fn verify_flag_checks_the_forest_it_wrote() {
    let dir = TempDir::new().unwrap();
    let params = GenParams::new(GenKind::Sphere, 200, 3, 12).with_noise(0.05);
    let input = write_cloud(&dir, "s.pts", &params);
    let out = dir.path().join("f.txt");
    let o = localdim(&["build-forest", "--input", s(&input), "--t", "0.3", "--seed", "2", "--output", s(&out)]);
    assert!(o.status.success());
    let forest = parse_forest(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let cloud = generate(&params).unwrap();
    assert!(check_forest(&cloud, &forest, true).is_ok());
}
