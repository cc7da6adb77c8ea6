use std::path::Path;
use std::process::{Command, Output};

use active_ht::cli::model_file::{model_to_toml, parse_model};
use active_ht::cli::output::RunManifest;

const EX1: &str = r#"M = 2
K = 2
L = 1000.0
prior = [0.5, 0.5]

[kernel]
type = "finite"
rows = [
  [[0.9, 0.1], [0.4, 0.6]],
  [[0.4, 0.6], [0.9, 0.1]],
]
"#;

const IDENTICAL: &str = r#"M = 2
K = 1
L = 100.0
prior = [0.5, 0.5]

[kernel]
type = "finite"
rows = [[[0.5, 0.5]], [[0.5, 0.5]]]
"#;

const THREE: &str = r#"M = 3
K = 2
L = 100.0
prior = [0.2, 0.3, 0.5]

[kernel]
type = "gaussian"
gaussian = [
  [[0.0, 1.0], [0.0, 1.0]],
  [[1.0, 1.0], [0.0, 4.0]],
  [[-1.0, 1.0], [2.0, 1.0]],
]
"#;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_active-ht"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("ex1.toml"), EX1).unwrap();
    std::fs::write(dir.path().join("same.toml"), IDENTICAL).unwrap();
    std::fs::write(dir.path().join("three.toml"), THREE).unwrap();
    dir
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn single_error_line(o: &Output) -> String {
    let err = String::from_utf8(o.stderr.clone()).unwrap();
    let lines: Vec<&str> = err.lines().collect();
    assert_eq!(lines.len(), 1, "stderr: {err}");
    assert!(lines[0].starts_with("error: "), "stderr: {err}");
    lines[0].to_string()
}

#[test]
fn validate_reports_distinguishability() {
    let d = setup();
    let ok = run(d.path(), &["validate", "ex1.toml"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).contains("likelihood ratio bound: 6\n"));
    let bad = run(d.path(), &["validate", "same.toml"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stdout(&bad).contains("indistinguishable pairs: (1,2)"));
}

#[test]
fn bounds_rejects_indistinguishable_model() {
    let d = setup();
    let o = run(d.path(), &["bounds", "same.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(single_error_line(&o).starts_with("error: assumption:"));
}

#[test]
fn bounds_csv_schema_and_manifest() {
    let d = setup();
    let o = run(d.path(), &["bounds", "ex1.toml", "--csv", "b.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(d.path().join("b.csv")).unwrap();
    assert!(csv.starts_with("name,value,lambda_1,lambda_2,certificate\n"));
    assert!(csv.contains("\nr_bar_star,0.750683595,,,lp\n"));
    let manifest =
        RunManifest::parse(&std::fs::read_to_string(d.path().join("b.csv.manifest.toml")).unwrap()).unwrap();
    assert_eq!(manifest.command, "bounds");
    assert_eq!(manifest.outputs, vec!["b.csv".to_string()]);
    assert_eq!(manifest.model_sha256.len(), 64);
}

#[test]
fn binary_predicate_and_arity_error() {
    let d = setup();
    let o = run(d.path(), &["binary", "ex1.toml"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("logarithmic adaptivity gain: true\n"));
    let three = run(d.path(), &["binary", "three.toml"]);
    assert_ne!(three.status.code(), Some(0));
    single_error_line(&three);
}

#[test]
fn gains_reports_dominance() {
    let d = setup();
    let o = run(d.path(), &["gains", "ex1.toml"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("adaptivity gain per log L: 0.204752493\n"));
    assert!(text.contains("dominating action: none\n"));
}

#[test]
fn usage_errors_exit_four() {
    let d = setup();
    for args in [
        vec!["simulate", "ex1.toml", "--policy", "sn", "--trials", "10"],
        vec![
            "simulate", "ex1.toml", "--policy", "sn", "--trials", "10", "--seed", "1", "--bogus",
        ],
        vec!["frobnicate"],
        vec![
            "simulate", "ex1.toml", "--policy", "fixed", "--trials", "10", "--seed", "1",
        ],
        vec![
            "simulate", "ex1.toml", "--policy", "fixed", "--lambda", "0.5,-0.5", "--trials", "10", "--seed",
            "1",
        ],
        vec![
            "sweep", "ex1.toml", "--policy", "sn", "--L", "100,10", "--trials", "10", "--seed", "1",
        ],
    ] {
        let o = run(d.path(), &args);
        assert_eq!(o.status.code(), Some(4), "{args:?}");
        single_error_line(&o);
    }
}

#[test]
fn malformed_model_exits_two() {
    let d = setup();
    std::fs::write(d.path().join("broken.toml"), "M = 2\nK = ").unwrap();
    let o = run(d.path(), &["validate", "broken.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(single_error_line(&o).starts_with("error: parse:"));
    let missing = run(d.path(), &["validate", "nope.toml"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn sweep_schema() {
    let d = setup();
    let o = run(
        d.path(),
        &[
            "sweep", "ex1.toml", "--policy", "sn", "--L", "100,1000", "--trials", "500", "--seed", "3",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("L,logL,mean_tau,se_tau,pe,se_pe,cost,cost_over_logL")
    );
    assert_eq!(lines.count(), 2);
}

#[test]
fn simulate_writes_trial_rows_and_names_manifest() {
    let d = setup();
    let o = run(
        d.path(),
        &[
            "simulate",
            "three.toml",
            "--policy",
            "sa",
            "--threshold",
            "0.6",
            "--trials",
            "300",
            "--seed",
            "9",
            "--out",
            "s.csv",
            "--trials-csv",
            "t.csv",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = std::fs::read_to_string(d.path().join("s.csv")).unwrap();
    assert!(summary.lines().nth(1).unwrap().ends_with(",s.csv.manifest.toml"));
    let trials = std::fs::read_to_string(d.path().join("t.csv")).unwrap();
    assert_eq!(trials.lines().count(), 301);
    let manifest =
        RunManifest::parse(&std::fs::read_to_string(d.path().join("t.csv.manifest.toml")).unwrap()).unwrap();
    assert_eq!(manifest.master_seed, Some(9));
    assert_eq!(manifest.policies.len(), 1);
}

#[test]
fn thread_count_does_not_change_results() {
    let d = setup();
    let args = [
        "simulate",
        "three.toml",
        "--policy",
        "sn",
        "--trials",
        "2000",
        "--seed",
        "4",
    ];
    let one = run(d.path(), &[&["--threads", "1"][..], &args[..]].concat());
    let many = run(d.path(), &[&["--threads", "8"][..], &args[..]].concat());
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, many.stdout);
}

#[test]
fn oracle_check_agrees_on_ex1() {
    let d = setup();
    let o = run(
        d.path(),
        &["oracle-check", "ex1.toml", "--horizon", "5", "--trials", "20000"],
    );
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 4);
}

#[test]
fn exponents_report() {
    let d = setup();
    let o = run(
        d.path(),
        &[
            "exponents",
            "ex1.toml",
            "--policy",
            "nn",
            "--budgets",
            "6,10,14",
            "--trials",
            "20000",
            "--seed",
            "2",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("policy = \"nn\"\nslope = "));
}

#[test]
fn model_file_round_trip() {
    for text in [EX1, THREE] {
        let model = parse_model(text).unwrap();
        let again = parse_model(&model_to_toml(&model)).unwrap();
        assert_eq!(model, again);
    }
}
