//! Process-level checks of the binary: exit-code contract, flag handling,
//! and byte-identical rerun determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_hob");

const BASE: &str = r#"
seed = 5
[grid]
d_h = 1
n_h = 16
n_y = 16
[params]
theta = 0.5
b = 0.3
[monitors]
lambda = 1.0
[stepping]
dt = 1e-3
t_final = 0.02
[output]
dir = "unused-default"
"#;

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn limit_succeeds_and_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), BASE);
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "limit",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    for name in ["manifest.toml", "series.csv", "summary.json"] {
        assert!(out_dir.join(name).exists(), "{name} missing");
    }
    assert!(String::from_utf8_lossy(&out.stdout).contains("limit ok"));
}

#[test]
fn mode_flag_is_an_alias_and_conflicts_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), BASE);
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "--mode",
        "limit",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    let out = run(&["eps", "--mode", "limit", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("conflicts"));

    let out = run(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("no mode given"));
}

#[test]
fn config_errors_exit_2_without_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &BASE.replace("theta = 0.5", "theta = 1.5"));
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "limit",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("theta"));
    assert!(!out_dir.exists(), "no artifacts on config error");

    let cfg = write_config(tmp.path(), &format!("{BASE}\n[params.extra]"));
    let out = run(&["limit", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "unknown key must be rejected");

    // Regularity floor is mode-dependent: s1 = 2.0 is fine for the limit
    // run but below the convergence-mode requirement.
    let with_s1 = BASE.replace("b = 0.3", "b = 0.3\ns1 = 2.0");
    let cfg = write_config(tmp.path(), &with_s1);
    let out = run(&["convergence", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("s1"));
}

#[test]
fn blowup_exits_3_and_monitor_violation_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    // A norm ceiling below the initial data size trips the divergence guard
    // on the first step.
    let blowup = BASE.replace("lambda = 1.0", "lambda = 1.0\nnorm_ceiling = 1e-9");
    let cfg = write_config(tmp.path(), &blowup);
    let out_dir = tmp.path().join("b");
    let out = run(&[
        "limit",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));

    // An energy ceiling below 1 is violated at t = 0 where the ratio is 1;
    // the run still leaves its artifacts behind.
    let violating = BASE.replace("lambda = 1.0", "lambda = 1.0\nenergy_ceiling = 0.5");
    let cfg = write_config(tmp.path(), &violating);
    let out_dir = tmp.path().join("m");
    let out = run(&[
        "limit",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
    assert!(stderr(&out).contains("energy"));
    for name in ["manifest.toml", "series.csv", "summary.json"] {
        assert!(
            out_dir.join(name).exists(),
            "{name} must exist for a monitored-violation run"
        );
    }
}

#[test]
fn reruns_are_byte_identical_and_seed_flag_changes_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), BASE);
    let d1 = tmp.path().join("r1");
    let d2 = tmp.path().join("r2");
    let d3 = tmp.path().join("r3");
    for d in [&d1, &d2] {
        let out = run(&[
            "lemmas",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            d.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    for name in ["manifest.toml", "summary.json"] {
        let a = fs::read(d1.join(name)).unwrap();
        let b = fs::read(d2.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical reruns");
    }
    let out = run(&[
        "lemmas",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        d3.to_str().unwrap(),
        "--seed",
        "99",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let a = fs::read(d1.join("summary.json")).unwrap();
    let b = fs::read(d3.join("summary.json")).unwrap();
    assert_ne!(a, b, "--seed must change the sampled reports");
    let manifest = fs::read_to_string(d3.join("manifest.toml")).unwrap();
    assert!(manifest.contains("seed = 99"), "manifest echoes the override");
}

#[test]
fn convergence_and_selfconv_modes_write_their_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let body = BASE.replace(
        "b = 0.3",
        "b = 0.3\ns1 = 2.6\ns2 = 1.6\neps_list = [0.1, 0.05]",
    );
    let cfg = write_config(tmp.path(), &body);
    let conv_dir = tmp.path().join("conv");
    let out = run(&[
        "convergence",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        conv_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    for name in ["series.csv", "eps_0.1.csv", "eps_0.05.csv", "summary.json"] {
        assert!(conv_dir.join(name).exists(), "{name} missing");
    }
    let summary = fs::read_to_string(conv_dir.join("summary.json")).unwrap();
    assert!(summary.contains("\"rate\""));
    assert!(summary.contains("\"errors\""));

    let self_dir = tmp.path().join("selfconv");
    let out = run(&[
        "selfconv",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        self_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let summary = fs::read_to_string(self_dir.join("summary.json")).unwrap();
    assert!(summary.contains("\"order\""));
    assert!(summary.contains("\"eps_solver\""));
}

#[test]
fn eps_mode_runs_and_series_has_documented_header() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), BASE);
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "eps",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = fs::read_to_string(out_dir.join("series.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(
        header,
        "t,h_u,h_v,w_u_epsv,w_tau_sqrt_eps,w_tau,grad_integrand,zeta_integrand,hyp_lhs,div_residual,vmean_v_residual"
    );
}
