use std::process::{Command, Output};

use serde_json::Value;

const FIG4: [&str; 10] = ["--mu", "0.005", "--L", "1", "--gamma", "3.5", "--beta", "0.75", "--k", "7"];

fn hb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hb-landscape")).args(args).output().unwrap()
}

fn json_ok(args: &[&str]) -> Value {
    let o = hb(args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn with_fig4<'a>(cmd: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![cmd];
    v.extend(FIG4);
    v.extend(extra);
    v
}

#[test]
fn rate_at_optimal_tuning() {
    let v = json_ok(&["rate", "--mu", "0.04", "--L", "1", "--gamma", "2.7777777777777777", "--beta", "0.4444444444444444"]);
    assert!((v["rho"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-6);
    assert_eq!(v["region"], "robust");
    assert_eq!(v["tool"], "hb-landscape");
}

#[test]
fn rate_outside_region_is_not_an_error() {
    let v = json_ok(&["rate", "--mu", "0.04", "--L", "1", "--gamma", "-1", "--beta", "0.1"]);
    assert_eq!(v["region"], "no-convergence");
    assert!(v["rho"].is_null());
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(hb(&["rate", "--L", "1", "--gamma", "1", "--beta", "0.1"]).status.code(), Some(2));
    assert_eq!(hb(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(hb(&["rate", "--mu", "x", "--L", "1", "--gamma", "1", "--beta", "0"]).status.code(), Some(2));
}

#[test]
fn invalid_class_is_a_numerical_failure() {
    let o = hb(&["rate", "--mu", "2", "--L", "1", "--gamma", "1", "--beta", "0.1"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn sweep_outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let read = |name: &str| std::fs::read(dir.path().join(name)).unwrap();
    for name in ["a.csv", "b.csv"] {
        let path = dir.path().join(name);
        let v = json_ok(&[
            "sweep", "--mu", "0.01", "--L", "1", "--mode", "sls-overlay", "--n", "30", "--svg", "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(v["rows"], 900);
    }
    for ext in ["csv", "json", "svg"] {
        assert_eq!(read(&format!("a.{ext}")), read(&format!("b.{ext}")), "{ext} differs");
    }
    let csv = String::from_utf8(read("a.csv")).unwrap();
    assert!(csv.starts_with("gamma,beta,value,tag\n"));
    assert_eq!(csv.lines().count(), 901);
    let meta: Value = serde_json::from_slice(&read("a.json")).unwrap();
    assert_eq!(meta["spec"]["mode"], "sls-overlay");
    assert_eq!(meta["verdict"]["empty_intersection"], true);
}

#[test]
fn cycle_demo_cycles_at_boundary_point() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let v = json_ok(&with_fig4("cycle-demo", &["--steps", "200", "--out", path.to_str().unwrap()]));
    assert_eq!(v["verdict"], "cycles");
    assert!(v["max_deviation"].as_f64().unwrap() < 1e-12);
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# hb-landscape"));
    assert_eq!(lines.next().unwrap(), "t,x0,x1,dist_to_cycle,gamma_t,beta_t");
    // x_0, x_1 and one row per step.
    assert_eq!(lines.count(), 202);
}

#[test]
fn cycle_demo_noise_stays_in_tube() {
    let v = json_ok(&with_fig4("cycle-demo", &["--noise-init", "0.001", "--noise-grad", "within-thm53", "--steps", "300", "--seed", "3"]));
    assert_eq!(v["stayed_in_tube"], true);
    let v = json_ok(&with_fig4("cycle-demo", &["--noise-init", "0.5", "--noise-grad", "within-guarantee", "--steps", "300"]));
    assert_eq!(v["stayed_in_tube"], true);
}

#[test]
fn cycle_demo_smoothed_and_dilated() {
    let v = json_ok(&with_fig4("cycle-demo", &["--lambda", "100", "--smooth", "auto", "--steps", "100"]));
    assert_eq!(v["verdict"], "cycles");
    let ratio = v["tau_estimate_undilated"].as_f64().unwrap() / v["tau_estimate"].as_f64().unwrap();
    assert!((ratio - 100.0).abs() < 0.1, "{ratio}");
}

#[test]
fn cycle_demo_outside_region_reports_polynomial() {
    let o = hb(&["cycle-demo", "--mu", "0.04", "--L", "1", "--gamma", "0.1", "--beta", "0.1", "--k", "3"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("polynomial value"));
}

#[test]
fn lp_check_agrees_with_analytic() {
    let v = json_ok(&with_fig4("lp-check", &[]));
    assert_eq!(v["feasible"], true);
    assert_eq!(v["analytic_period"], 7);
    assert!(v["max_interpolation_residual"].as_f64().unwrap() <= 0.0);
    let v = json_ok(&["lp-check", "--mu", "0.04", "--L", "1", "--gamma", "1", "--beta", "0.1", "--k", "5"]);
    assert_eq!(v["feasible"], false);
    assert!(v["analytic_period"].is_null());
}

#[test]
fn robustness_small_run() {
    let v = json_ok(&with_fig4("robustness", &["--runs", "4", "--steps", "300"]));
    assert_eq!(v["runs_in_tube"], 4);
    let (a, b) = (v["init_only_decay_rate"].as_f64().unwrap(), v["isotropic_rate"].as_f64().unwrap());
    assert!((a - b).abs() < 0.02);
}

#[test]
fn table4_lists_rates() {
    let v = json_ok(&["table4", "--kappa", "0.04"]);
    let rows = v["rates"].as_array().unwrap();
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().any(|r| r["quadratic"].as_f64().is_some_and(|q| (q - 2.0 / 3.0).abs() < 1e-12)));
}
