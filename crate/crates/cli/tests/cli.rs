use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use patternlq_cli::snapshot::render_snapshot;
use patternlq_cli::{Scenario, Stage};
use serde_json::Value;

const STRIPE: &str = r#"
name = "stripe"
mode = "centralized"
seed = 11
a = 4.0
leaders = [3, 2, 1, 4, 7, 8, 9]

[graph]
kind = "grid"
rows = 3
cols = 3

[alpha]
values = [1, 1, 1, -1, -1, -1, 1, 1, 1]

[initial]
x0 = [3.9, 2.0, 0.6, -3.2, -2.9, -4.2, 4.1, 2.1, 0.6]
z0 = { random = { lo = -5.0, hi = 5.0 } }

[sim]
dt = 1e-2
t_end = 60.0
"#;

fn patternlq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_patternlq"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_scenario(dir: &Path, text: &str) -> String {
    let path = dir.join("scenario.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn run(text: &str, command: &str, extra: &[&str]) -> (i32, Value, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let config = write_scenario(dir.path(), text);
    let out = dir.path().join("out");
    let mut args = vec![command, "--config", &config, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let status = patternlq(&args).status.code().unwrap();
    let s = summary(&out);
    (status, s, dir)
}

#[test]
fn stripe_run_forms_the_pattern() {
    let (code, s, dir) = run(STRIPE, "run", &[]);
    assert_eq!(code, 0, "{s:#}");
    assert_eq!(s["status"], "ok");
    assert_eq!(s["pattern"]["formed"], true);
    assert_eq!(s["certificate"]["zero_count"], 1);
    let out = dir.path().join("out");
    for name in [
        "trajectory.csv",
        "snapshot_initial_sign.svg",
        "snapshot_final_magnitude.svg",
        "summary.json",
    ] {
        assert!(out.join(name).exists(), "{name}");
    }
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(header.split(',').count(), 1 + 9 + 7);
    assert!(header.starts_with("t,x_1,") && header.ends_with(",z_7"));
}

#[test]
fn identical_seed_gives_identical_artifacts() {
    let (_, _, a) = run(STRIPE, "run", &[]);
    let (_, _, b) = run(STRIPE, "run", &[]);
    for name in ["summary.json", "trajectory.csv"] {
        let left = fs::read(a.path().join("out").join(name)).unwrap();
        let right = fs::read(b.path().join("out").join(name)).unwrap();
        assert_eq!(left, right, "{name} differs");
    }
    let (_, other, _) = run(STRIPE, "run", &["--seed", "12"]);
    let (_, first, _) = run(STRIPE, "run", &[]);
    assert_eq!(other["seed"], 12);
    assert_ne!(other["initial"]["z0"], first["initial"]["z0"]);
}

#[test]
fn zero_growth_rate_is_infeasible_at_the_middle_followers() {
    let text = STRIPE.replace("a = 4.0", "a = 0.0");
    let (code, s, _) = run(&text, "check", &[]);
    assert_eq!(code, 3);
    assert_eq!(s["error_kind"], "infeasible");
    assert_eq!(s["failed_stage"], "feasibility");
    let vertices: Vec<u64> = s["feasibility"]["violations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["vertex"].as_u64().unwrap())
        .collect();
    assert_eq!(vertices, [5, 6]);
    assert!(s["error"].as_str().unwrap().contains("followers 5, 6"));
}

#[test]
fn schema_errors_name_their_position() {
    let text = STRIPE.replace("seed = 11", "seed = 11\ncolour = \"red\"");
    let (code, s, _) = run(&text, "check", &[]);
    assert_eq!(code, 2);
    assert_eq!(s["failed_stage"], "config");
    let message = s["error"].as_str().unwrap();
    assert!(message.contains("colour") && message.contains("line 5, column 1"), "{message}");

    let text = STRIPE.replace("values = [1, 1, 1, -1, -1, -1, 1, 1, 1]", "values = [1, 1]");
    let err = Scenario::parse(&text).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("alpha"));
}

#[test]
fn missing_config_still_writes_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let missing = dir.path().join("nope.toml");
    let o = patternlq(&["run", "--config", missing.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let s = summary(&out);
    assert_eq!(s["failed_stage"], "config");
    assert_eq!(s["status"], "failed");
}

#[test]
fn disconnected_leader_graph_is_an_assumption_failure() {
    let text = format!(
        "{}\n[leader_graph]\nkind = \"edges\"\nedges = [[1, 2], [3, 4]]\n",
        STRIPE.replace("mode = \"centralized\"", "mode = \"distributed\"")
    );
    let (code, s, _) = run(&text, "synth", &[]);
    assert_eq!(code, 4);
    assert_eq!(s["failed_stage"], "observer");
}

#[test]
fn short_horizon_reports_non_convergence() {
    let text = STRIPE.replace("t_end = 60.0", "t_end = 2.0");
    let (code, s, dir) = run(&text, "run", &[]);
    assert_eq!(code, 6);
    assert_eq!(s["failed_stage"], "simulation");
    assert_eq!(s["simulation"]["converged"], false);
    assert!(!s["warnings"].as_array().unwrap().is_empty());
    // the trajectory is still written
    assert!(dir.path().join("out/trajectory.csv").exists());
}

#[test]
fn synth_and_check_stop_early() {
    let (code, s, dir) = run(STRIPE, "synth", &["--mode", "distributed"]);
    assert_eq!(code, 0, "{s:#}");
    assert_eq!(s["mode"], "distributed");
    assert!(s["observer"]["chi"].as_f64().unwrap() > s["observer"]["chi_bound"].as_f64().unwrap());
    assert!(s["simulation"].is_null());
    assert!(!dir.path().join("out/trajectory.csv").exists());

    let (code, s, _) = run(STRIPE, "check", &[]);
    assert_eq!(code, 0);
    assert!(s["synthesis"].is_null());
    assert_eq!(s["assumptions"]["augmented_controllable"], true);
}

#[test]
fn sweep_checks_every_sample() {
    let text = format!("{STRIPE}\n[sweep]\nsamples = 12\nzero_samples = 3\nworkers = 3\n");
    let (code, s, _) = run(&text, "sweep", &[]);
    assert_eq!(code, 0, "{s:#}");
    assert_eq!(s["sweep"]["within_tolerance"], 12);
    assert_eq!(s["sweep"]["zero_vanished"], 3);
    assert_eq!(s["sweep"]["zero_pattern_formed"], 0);
}

#[test]
fn reproduce_paper_runs_the_centralized_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = patternlq(&["reproduce-paper", "--mode", "centralized", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let s = summary(&out.join("paper_sec5_centralized"));
    assert_eq!(s["pattern"]["formed"], true);
    assert!(s["simulation"]["relative_residual"].as_f64().unwrap() < 1e-5);
    // filtered out by --mode
    assert!(!out.join("paper_sec5_distributed").exists());
}

#[test]
fn stage_names_are_stable() {
    assert_eq!(serde_json::to_value(Stage::Feasibility).unwrap(), "feasibility");
}

fn cell_shades(svg: &str) -> Vec<String> {
    svg.lines()
        .filter(|l| l.contains("<title>"))
        .map(|l| l.split("fill=\"").nth(1).unwrap().split('"').next().unwrap().to_owned())
        .collect()
}

#[test]
fn kronecker_patterns_render_as_stripes_and_checkerboards() {
    let dir = tempfile::tempdir().unwrap();
    let b1 = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0];
    let stripes: Vec<f64> = b1.iter().flat_map(|&s| [s; 7]).collect();
    let checker: Vec<f64> = b1.iter().flat_map(|&s| b1.map(|t| s * t)).collect();

    let paths = render_snapshot(&stripes, Some((7, 7)), &dir.path().join("stripes")).unwrap();
    let shades = cell_shades(&fs::read_to_string(&paths[0]).unwrap());
    // cells are written column by column; each column is one colour
    for (c, column) in shades.chunks(7).enumerate() {
        let expected = if c % 2 == 0 { "rgb(0,0,0)" } else { "rgb(255,255,255)" };
        assert!(column.iter().all(|s| s == expected), "column {c}");
    }

    let paths = render_snapshot(&checker, Some((7, 7)), &dir.path().join("checker")).unwrap();
    let shades = cell_shades(&fs::read_to_string(&paths[0]).unwrap());
    for (k, shade) in shades.iter().enumerate() {
        let (c, r) = (k / 7, k % 7);
        let expected = if (r + c) % 2 == 0 { "rgb(0,0,0)" } else { "rgb(255,255,255)" };
        assert_eq!(shade, expected, "cell ({r}, {c})");
    }

    let paths = render_snapshot(&[1.0, -2.0, 0.0], None, &dir.path().join("path")).unwrap();
    assert!(paths[0].to_string_lossy().ends_with("path_signs.txt"));
}
