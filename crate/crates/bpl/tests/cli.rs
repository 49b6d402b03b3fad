use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bpl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bpl"))
        .args(args)
        .output()
        .expect("run bpl")
}

fn bpl_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bpl"))
        .args(args)
        .env(key, value)
        .output()
        .expect("run bpl")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn report(dir: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(dir.join("report.json")).unwrap()).unwrap()
}

fn out_arg(dir: &Path) -> &str {
    dir.to_str().unwrap()
}

#[test]
fn borel_default_shows_the_contradiction() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bpl(&["demo", "borel", "--out", out_arg(tmp.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = report(tmp.path());
    assert_eq!(r["result"]["contradiction"], Value::Bool(true));
    assert_eq!(r["verified"], Value::Bool(true));
    assert!(r["config"]["tomography"]["velocity_box"].is_array());
    assert!(!r["formulas"].as_array().unwrap().is_empty());
    for f in [
        "conditionals.csv",
        "slab_limits.csv",
        "slab_convergence.csv",
        "meta.json",
    ] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
}

#[test]
fn inverted_velocity_box_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bpl(&[
        "demo",
        "borel",
        "--v-min",
        "5",
        "--v-max",
        "1",
        "--out",
        out_arg(tmp.path()),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("empty box"), "{}", stderr(&o));
}

#[test]
fn unknown_demo_and_bad_flags_exit_one() {
    let o = bpl(&["demo", "fig8"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("unknown demo"));
    assert_eq!(code(&bpl(&["demo", "borel", "--no-such-flag"])), 1);
    assert_eq!(code(&bpl(&["frobnicate"])), 1);
    let o = bpl(&["demo", "borel", "--scale", "3"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("does not apply"));
    assert_eq!(code(&bpl(&["--help"])), 0);
}

#[test]
fn malformed_and_mismatched_configs_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, "{ \"seed\": 3, ").unwrap();
    let o = bpl(&["demo", "units", "--config", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("malformed JSON"), "{}", stderr(&o));

    let typo = tmp.path().join("typo.json");
    std::fs::write(&typo, r#"{"params": {"scael": 10}}"#).unwrap();
    assert_eq!(code(&bpl(&["demo", "units", "--config", typo.to_str().unwrap()])), 1);

    let other = tmp.path().join("other.json");
    std::fs::write(&other, r#"{"demo": "borel"}"#).unwrap();
    assert_eq!(code(&bpl(&["demo", "units", "--config", other.to_str().unwrap()])), 1);
}

#[test]
fn config_file_values_reach_the_report_and_flags_win() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("gauss.json");
    std::fs::write(
        &cfg,
        r#"{"demo": "transdim-gaussian", "seed": 77, "format": ["json"],
            "params": {"example": {"sigma_d": 2.0, "sigma_s": 1.0}}}"#,
    )
    .unwrap();
    let out = tmp.path().join("g");
    let o = bpl(&[
        "demo",
        "transdim-gaussian",
        "--config",
        cfg.to_str().unwrap(),
        "--sigma-s",
        "0.5",
        "--out",
        out_arg(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = report(&out);
    assert_eq!(r["seed"], 77);
    assert_eq!(r["config"]["example"]["sigma_d"], 2.0);
    assert_eq!(r["config"]["example"]["sigma_s"], 0.5);
    // Only JSON was requested.
    assert!(!out.join("sigma_s_sweep.csv").exists());
}

#[test]
fn unwritable_output_dir_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("occupied");
    std::fs::write(&file, "x").unwrap();
    let o = bpl(&["demo", "units", "--out", out_arg(&file.join("sub"))]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("cannot write"), "{}", stderr(&o));
}

#[test]
fn fig7_boundary_follows_sqrt_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bpl(&[
        "demo",
        "fig7",
        "--sigma-d-grid",
        "0.1:3:60",
        "--sigma-s-grid",
        "0.1:3:60",
        "--out",
        out_arg(tmp.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(tmp.path().join("boundary.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "sigma_s [s/m],sigma_d_located [s],sigma_d_expected [s],resolution [s]"
    );
    let mut n = 0;
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((v[1] - 2f64.sqrt() * v[0]).abs() <= v[3], "{line}");
        n += 1;
    }
    assert!(n > 20);
    let region = std::fs::read_to_string(tmp.path().join("region.csv")).unwrap();
    assert_eq!(region.lines().count(), 1 + 60 * 60);
}

#[test]
fn reports_are_byte_identical_across_runs_and_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let args = |d: &Path| {
        vec![
            "demo".to_string(),
            "transdim-uniform".into(),
            "--mc-points".into(),
            "20000".into(),
            "--rj-steps".into(),
            "20000".into(),
            "--seed".into(),
            "5".into(),
            "--out".into(),
            d.to_str().unwrap().into(),
        ]
    };
    let run = |d: &Path, threads: &str| {
        let a = args(d);
        let refs: Vec<&str> = a.iter().map(String::as_str).collect();
        let o = bpl_env(&refs, "BPL_THREADS", threads);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    };
    run(&a, "1");
    run(&b, "3");
    for f in ["report.json", "variants.csv", "prior_sweep.csv"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    assert!(!std::fs::read_to_string(a.join("report.json"))
        .unwrap()
        .contains("unix_seconds"));
    let meta: Value = serde_json::from_slice(&std::fs::read(b.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["threads"], 3);
}

#[test]
fn invalid_thread_count_exits_one() {
    let o = bpl_env(&["demo", "units"], "BPL_THREADS", "zero");
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("BPL_THREADS"));
}

#[test]
fn hierarchical_and_misfit_overrides_apply() {
    let tmp = tempfile::tempdir().unwrap();
    let h = tmp.path().join("h");
    let o = bpl(&[
        "demo",
        "hierarchical",
        "--k",
        "2",
        "--pi-lambda",
        "0.3",
        "--out",
        out_arg(&h),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = report(&h);
    assert_eq!(r["config"]["model"]["k"], 2.0);
    assert_eq!(r["config"]["model"]["pi_lambda"], 0.3);

    let m = tmp.path().join("m");
    let o = bpl(&["demo", "misfit", "--d-obs", "3,5", "--out", out_arg(&m)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let est = &report(&m)["result"]["estimates"];
    let l = est[1]["lambda_star"].as_f64().unwrap();
    assert!((l - 24f64.sqrt()).abs() < 1e-4);
}

#[test]
fn units_demo_refuses_to_rank_dimensioned_ratios() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bpl(&["demo", "units", "--scale", "1000", "--out", out_arg(tmp.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = report(tmp.path());
    assert_eq!(r["result"]["evidence_unit"]["second"], "-2");
    for e in r["result"]["entries"].as_array().unwrap() {
        let dimensioned = e["quantity"].as_str().unwrap().starts_with("likelihood");
        assert_eq!(
            e["ranking"].as_str().unwrap().starts_with("refused"),
            dimensioned,
            "{e}"
        );
    }
}

#[test]
fn verify_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bpl(&["verify", "--level", "fast", "--out", out_arg(&tmp.path().join("fast"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(tmp.path().join("fast/checks.csv").exists());

    let o = bpl(&[
        "verify",
        "--level",
        "full",
        "--corrupt-constant",
        "1.001",
        "--out",
        out_arg(&tmp.path().join("full")),
    ]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert_eq!(report(&tmp.path().join("full"))["verified"], Value::Bool(false));

    let missing = tmp.path().join("missing.json");
    let o = bpl(&["verify", "--level", "fast", "--config", missing.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("cannot read config"));
}

#[test]
fn failed_demo_verification_exits_two() {
    // A one-grid-cell boundary tolerance cannot hold at zero cells.
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("strict.json");
    std::fs::write(&cfg, r#"{"params": {"max_boundary_error_cells": 0.0}}"#).unwrap();
    let o = bpl(&[
        "demo",
        "fig7",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_arg(&tmp.path().join("o")),
    ]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("FAILED"));
}
