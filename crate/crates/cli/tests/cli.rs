#[path = "support/shooting.rs"]
mod shooting;

use std::path::Path;
use std::process::{Command, Output};

use sympass_cli::{commands, RunConfig};
use sympass_core::io::{grid_function_from_csv, grid_function_to_csv};
use sympass_core::{refine_to_critical, Domain, GridFunction, LambdaFamily, RefineConfig, SymmetrizationConfig};

fn sympass(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sympass"))
        .args(args)
        .env("SYMPASS_OUTPUT", dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, json: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, json).unwrap();
    path.to_string_lossy().into_owned()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn malformed_grid_csv_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("u.csv");
    std::fs::write(&input, "dimension,1\nn,5\nL,1\n0\n1\nnot-a-number\n1\n0\n").unwrap();
    let out = sympass(tmp.path(), &["symmetrize", input.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("parse error"));
}

#[test]
fn symmetric_input_gives_empty_word() {
    let tmp = tempfile::tempdir().unwrap();
    let domain = Domain::line(2.0, 9).unwrap();
    let u = GridFunction::from_fn(domain, |x| (-x[0] * x[0]).exp()).unwrap();
    let input = tmp.path().join("u.csv");
    std::fs::write(&input, grid_function_to_csv(&u)).unwrap();
    let out = sympass(&tmp.path().join("out"), &["symmetrize", input.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let word = std::fs::read_to_string(tmp.path().join("out/word.csv")).unwrap();
    assert_eq!(word.lines().count(), 1);
    let trace = csv_rows(&tmp.path().join("out/trace.csv"));
    assert_eq!(trace.len(), 1);
    assert_eq!(trace[0][1].parse::<f64>().unwrap(), 0.0);
    let star = std::fs::read_to_string(tmp.path().join("out/u_star.csv")).unwrap();
    assert_eq!(grid_function_from_csv(&star).unwrap(), u);
}

#[test]
fn random_input_gives_monotone_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let domain = Domain::line(4.0, 33).unwrap();
    let u = GridFunction::from_fn(domain, |x| (3.0 * x[0]).sin() + 0.3 * x[0]).unwrap();
    let input = tmp.path().join("u.csv");
    std::fs::write(&input, grid_function_to_csv(&u)).unwrap();
    let out = sympass(&tmp.path().join("out"), &["symmetrize", input.to_str().unwrap()]);
    assert!(out.status.success());
    let trace: Vec<f64> = csv_rows(&tmp.path().join("out/trace.csv"))
        .iter()
        .map(|r| r[1].parse().unwrap())
        .collect();
    assert!(trace.len() > 1);
    assert!(trace.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn surrogate_scan_matches_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"scan": {"lambda_grid": [0.5, 1.0, 1.5, 2.0]}}"#);
    let out = sympass(&tmp.path().join("out"), &["scan", "--surrogate", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(tmp.path().join("out/c_of_lambda.csv")).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "lambda,c,converged,restarts_dispersion,sweeps,error"
    );
    let rows = csv_rows(&tmp.path().join("out/c_of_lambda.csv"));
    assert_eq!(rows.len(), 4);
    for r in rows {
        let (l, c): (f64, f64) = (r[0].parse().unwrap(), r[1].parse().unwrap());
        assert!((c - 0.25 / l).abs() <= 1e-3, "lambda {l}: {c}");
    }
    let dat = std::fs::read_to_string(tmp.path().join("out/c_of_lambda.dat")).unwrap();
    assert!(dat.starts_with('#'));
    assert_eq!(dat.lines().count(), 5);
}

#[test]
fn empty_lambda_grid_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"scan": {"lambda_grid": []}}"#);
    let out = sympass(tmp.path(), &["scan", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_config_key_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"minimax": {"m_node": 5}}"#);
    let out = sympass(tmp.path(), &["scan", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let missing = sympass(tmp.path(), &["scan", "--config", "/nonexistent/config.json"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn out_of_range_lambda_is_recorded_not_fatal() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"scan": {"lambda_grid": [0.5, 1.0, 3.0]}}"#);
    let out = sympass(&tmp.path().join("out"), &["scan", "--surrogate", "--config", &cfg]);
    assert!(out.status.success());
    let rows = csv_rows(&tmp.path().join("out/c_of_lambda.csv"));
    assert_eq!(rows[2][1], "NaN");
    assert!(rows[2][5].contains("out of range"));
}

#[test]
fn scan_is_byte_identical_on_rerun() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"scan": {"lambda_grid": [0.6, 0.8, 1.0]}, "seed": 5}"#);
    let a = sympass(&tmp.path().join("a"), &["scan", "--config", &cfg]);
    let b = sympass(&tmp.path().join("b"), &["scan", "--config", &cfg, "--jobs", "2"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(csv_rows(&tmp.path().join("a/quotients.csv")).len(), 3);
    for name in [
        "c_of_lambda.csv",
        "c_of_lambda.dat",
        "quotients.csv",
        "denjoy_points.csv",
    ] {
        assert_eq!(
            std::fs::read(tmp.path().join("a").join(name)).unwrap(),
            std::fs::read(tmp.path().join("b").join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn surrogate_is_rejected_outside_scan() {
    let tmp = tempfile::tempdir().unwrap();
    let out = sympass(tmp.path(), &["trick", "--surrogate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_passes_on_default_model() {
    let tmp = tempfile::tempdir().unwrap();
    let out = sympass(tmp.path(), &["check", "--trials", "200"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 8);
    assert!(tmp.path().join("check_report.json").exists());
}

fn small_trick(dir: &Path, seed: u64, j_max: usize) -> RunConfig {
    let mut cfg = RunConfig {
        seed,
        output_dir: dir.to_path_buf(),
        ..RunConfig::default()
    };
    cfg.scan.j_max = j_max;
    cfg.scan.lambda_grid = vec![0.6, 0.8, 1.0];
    cfg.scan.corollary_sigma = 0.2;
    cfg.scan.corollary_points = 2;
    cfg
}

#[test]
fn single_member_sequence_reports_insufficient_data() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_trick(tmp.path(), 3, 1);
    let summary = commands::trick(&cfg).unwrap();
    assert!(summary.contains("asymmetry decay: insufficient data"), "{summary}");
    let rows = csv_rows(&tmp.path().join("sbps.csv"));
    assert_eq!(rows.len(), 1);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("report_lambda0_1.000000.json")).unwrap())
            .unwrap();
    assert_eq!(report["sequence"].as_array().unwrap().len(), 1);
    assert!(report["decay_exponent"].is_null());
}

#[test]
fn trick_verdicts_are_seed_stable() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |seed: u64| {
        let cfg = small_trick(&tmp.path().join(seed.to_string()), seed, 16);
        let summary = commands::trick(&cfg).unwrap();
        let sbps = std::fs::read_to_string(cfg.output_dir.join("sbps.csv")).unwrap();
        (summary, sbps)
    };
    let (sa, ca) = run(1);
    let (sb, cb) = run(2);
    assert_ne!(ca, cb, "different seeds should change the numbers");
    let verdicts = |s: &str| -> Vec<String> {
        s.lines()
            .filter(|l| l.contains("verified"))
            .map(|l| l.split(':').next().unwrap().to_string() + l.contains("NOT").to_string().as_str())
            .collect()
    };
    assert_eq!(verdicts(&sa), verdicts(&sb));
    assert!(!sa.contains("NOT verified"), "{sa}");
    let critical = std::fs::read_to_string(tmp.path().join("1/critical_points.csv")).unwrap();
    assert!(critical.starts_with("source,lambda,energy,slope,asymmetry,xnorm,iterations,converged,file"));
    for row in critical.lines().skip(1) {
        let file = row.rsplit(',').next().unwrap();
        let text = std::fs::read_to_string(tmp.path().join("1").join(file)).unwrap();
        grid_function_from_csv(&text).unwrap();
    }
}

#[test]
fn refined_ground_state_matches_shooting() {
    let fam = LambdaFamily::new(Default::default(), Domain::line(8.0, 129).unwrap()).unwrap();
    let oracle = shooting::ground_state(1.0, 8.0, 129);
    // seed away from the solution: a scaled sech profile
    let seed: Vec<f64> = (0..129)
        .map(|i| {
            let x = -8.0 + i as f64 * 0.125;
            1.3 / x.cosh()
        })
        .collect();
    let rec = refine_to_critical(
        &fam,
        1.0,
        &seed,
        &RefineConfig::default(),
        &SymmetrizationConfig::default(),
        0,
    )
    .unwrap();
    assert!(rec.converged, "{:?}", rec.failure);
    let h: f64 = 0.125;
    let l2 = |v: &[f64]| v.iter().map(|a| a * a * h).sum::<f64>().sqrt();
    let diff: Vec<f64> = rec.u.values().iter().zip(&oracle.values).map(|(a, b)| a - b).collect();
    let rel = l2(&diff) / l2(&oracle.values);
    assert!(rel <= 0.02, "relative L2 gap {rel}");
    assert!(rec.asymmetry <= 1e-3);
    assert!((rec.energy - oracle.energy).abs() / oracle.energy <= 0.02);
}
