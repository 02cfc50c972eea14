//! End-to-end runs of the `sradcat` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sradcat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sradcat"))
        .args(args)
        .env("SRADCAT_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = sradcat(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&stdout(args)).unwrap()
}

fn column(csv: &str, idx: usize) -> Vec<f64> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').nth(idx).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn polar_cat_curve_follows_exp_minus_tau() {
    let csv = stdout(&[
        "decohere",
        "--twice-j",
        "20",
        "--label1",
        "0",
        "--label2",
        "180,0",
        "--t-max",
        "2",
        "--samples",
        "11",
    ]);
    assert_eq!(csv.lines().next().unwrap(), "tau,n1,n2,n_ratio");
    assert_eq!(csv.lines().count(), 12);
    let (taus, n) = (column(&csv, 0), column(&csv, 3));
    for (t, v) in taus.iter().zip(&n) {
        assert!((v - (-t).exp()).abs() < 1e-8);
    }
}

#[test]
fn engines_agree_on_n_ratio() {
    let base = [
        "decohere",
        "--twice-j",
        "16",
        "--label1",
        "0.4",
        "--label2",
        "1.7",
        "--t-max",
        "1.5",
        "--samples",
        "7",
    ];
    let exact = column(&stdout(&[&base[..], &["--engine", "exact"]].concat()), 3);
    let oracle = column(&stdout(&[&base[..], &["--engine", "oracle"]].concat()), 3);
    for (a, b) in exact.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-7, "{a} vs {b}");
    }
}

#[test]
fn config_file_with_flag_override_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "twice_j = 12\nt_max = 1.0\nsamples = 4\nengine = \"oracle\"\nlabel1 = { gamma = 0.3 }\nlabel2 = { theta_deg = 120, phi_deg = 30 }\n",
    )
    .unwrap();
    let out = |name: &str| {
        let p = dir.path().join(name);
        let args = [
            "decohere",
            "--config",
            cfg.to_str().unwrap(),
            "--samples",
            "6",
            "--output",
            p.to_str().unwrap(),
        ];
        stdout(&args);
        std::fs::read(p).unwrap()
    };
    let (a, b) = (out("a.csv"), out("b.csv"));
    assert_eq!(a, b);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 7);
}

#[test]
fn lab_units_convert_seconds() {
    // j = 10, g = 1e3, kappa = 1e7: t = 0.25 s is tau = 0.5
    let csv = stdout(&[
        "decohere",
        "--twice-j",
        "20",
        "--label1",
        "0",
        "--label2",
        "180,0",
        "--t-max-seconds",
        "0.25",
        "--g",
        "1e3",
        "--kappa",
        "1e7",
        "--delta",
        "1",
        "--samples",
        "2",
    ]);
    let taus = column(&csv, 0);
    assert!((taus[1] - 0.5).abs() < 1e-12);
}

#[test]
fn bad_configs_fail_cleanly() {
    let out = sradcat(&[
        "decohere",
        "--twice-j",
        "4",
        "--label1",
        "0",
        "--label2",
        "0.5",
        "--t-max",
        "1",
        "--samples",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("samples"));
}

#[test]
fn slow_pair_rates_are_j_independent() {
    let r = json(&["rates", "--twice-js", "60,120", "--pair", "0.5:2"]);
    assert_eq!(r["schema_version"], 1);
    let p = r["points"].as_array().unwrap();
    let (a, b) = (
        p[0]["fitted_rate"].as_f64().unwrap(),
        p[1]["fitted_rate"].as_f64().unwrap(),
    );
    assert!((a - b).abs() / a < 0.15, "{a} vs {b}");
    let d = &r["discrepancies"][0];
    assert!(d["printed"].as_f64().unwrap().abs() < 1e-12);
    assert!((d["measured"].as_f64().unwrap() + 2.0).abs() < 1e-12);
}

#[test]
fn fast_pair_rates_scale_with_j() {
    let r = json(&[
        "rates",
        "--twice-js",
        "120,60",
        "--pair",
        "0.3:0.9",
        "--window-jtau",
        "0.05",
    ]);
    let p = r["points"].as_array().unwrap();
    assert_eq!(p[0]["twice_j"], 60);
    let ratio = p[1]["fitted_rate"].as_f64().unwrap() / p[0]["fitted_rate"].as_f64().unwrap();
    assert!((ratio - 2.0).abs() <= 0.2, "{ratio}");
}

#[test]
fn rates_scan_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scan.toml");
    std::fs::write(
        &cfg,
        "twice_js = [10]\npairs = [[0.5, 2.0]]\nwindow = 0.1\nsamples = 11\n",
    )
    .unwrap();
    let r = json(&["rates", "--config", cfg.to_str().unwrap()]);
    assert_eq!(r["points"][0]["window"].as_f64().unwrap(), 0.1);
    assert_eq!(r["config"]["samples"], 11);
}

#[test]
fn propagator_dump_has_every_block() {
    let csv = stdout(&["propagator", "--twice-j", "4", "--tau", "0.3"]);
    assert_eq!(csv.lines().next().unwrap(), "m,n,k,tau,value");
    // 2k = -4..4 gives blocks of length 1..5..1, each with l(l+1)/2 entries
    assert_eq!(csv.lines().count() - 1, 1 + 3 + 6 + 10 + 15 + 10 + 6 + 3 + 1);
    let unit = csv.lines().find(|l| l.starts_with("-2,-2,0,")).unwrap();
    assert!(unit.ends_with(",1.0000000000000000e0"));
}

#[test]
fn prepare_reaches_the_symmetric_cat() {
    let r = json(&[
        "prepare",
        "--twice-j",
        "40",
        "--theta-offset",
        &std::f64::consts::FRAC_PI_4.to_string(),
    ]);
    assert!(r["ideal_cat_fidelity"].as_f64().unwrap() >= 0.999);
    assert!(r["final_fit"]["fidelity"].as_f64().unwrap() >= 0.999);
    assert_eq!(r["slow_rate_check"]["j_independent"], true);
}

#[test]
fn prepare_control_and_guards() {
    let r = json(&["prepare", "--twice-j", "20", "--wrong-axis"]);
    assert_eq!(r["slow_rate_check"]["j_independent"], false);
    assert!(r["slow_rate_check"]["rate_2j"].as_f64().unwrap() > 1.5 * r["slow_rate_check"]["rate_j"].as_f64().unwrap());
    let out = sradcat(&["prepare", "--twice-j", "21"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("half-integer"));
}

#[test]
fn semiclassics_dump() {
    let r = json(&[
        "semiclassics",
        "--gamma1",
        "0.3",
        "--gamma2",
        "0.9",
        "--j",
        "60",
        "--samples",
        "5",
    ]);
    assert!((r["a0"].as_f64().unwrap() + 0.0985753).abs() < 1e-7);
    assert_eq!(r["samples"].as_array().unwrap().len(), 5);
    assert!(r["predict_slow_exp"].is_null());
}

#[test]
fn injected_fault_fails_verify() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("verify.json");
    let out = sradcat(&[
        "verify",
        "--inject-fault",
        "corrupt-propagator",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(Path::new(&report)).unwrap()).unwrap();
    assert_eq!(r["all_passed"], false);
    assert_eq!(r["criteria"][0]["verdict"], "fail");
    assert!(r["adjudications"].as_array().unwrap().len() >= 5);
}
