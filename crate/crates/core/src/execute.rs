//! Mode dispatch: validate, run, write artifacts, then enforce monitors.
//!
//! Artifacts are written before monitor enforcement on purpose: a violating
//! run still leaves its full series on disk for inspection, and the process
//! exit code carries the verdict.

use crate::config::{Mode, RunConfig};
use crate::diagnostics::MonitorReport;
use crate::eps::EpsMonitorReport;
use crate::error::{Error, Result};
use crate::harness::{
    self, convergence_study, lemma_suite, self_convergence_eps, self_convergence_limit,
    LemmaReport, RateStudy, SelfConvergence,
};
use crate::limit;
use crate::report::{
    eps_row_values, limit_row_values, write_manifest, write_series, write_summary, EPS_COLUMNS,
    LIMIT_COLUMNS,
};
use serde::Serialize;
use std::path::Path;

/// Exit code contract: 0 success, 2 configuration, 3 numerical blow-up,
/// 4 monitor violation, 1 anything else.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::ConfigInvalid(_) | Error::InvalidArgument(_) => 2,
        Error::Blowup { .. } | Error::BandExhausted { .. } => 3,
        Error::MonitorViolation(_) => 4,
        _ => 1,
    }
}

#[derive(Serialize)]
struct LimitSummary<'a> {
    mode: &'static str,
    version: &'a str,
    seed: u64,
    t_final: f64,
    n_rows: usize,
    final_h_u: f64,
    final_eta: f64,
    final_psi_radius: f64,
    monitors: &'a MonitorReport,
}

#[derive(Serialize)]
struct EpsSummary<'a> {
    mode: &'static str,
    version: &'a str,
    seed: u64,
    eps: f64,
    eps0: f64,
    eps_within_eps0: bool,
    t_final: f64,
    n_rows: usize,
    final_h_u: f64,
    monitors: &'a EpsMonitorReport,
}

#[derive(Serialize)]
struct ConvergenceSummary<'a> {
    mode: &'static str,
    version: &'a str,
    seed: u64,
    eps_list: &'a [f64],
    errors: &'a [harness::EpsErrors],
    rate: &'a RateStudy,
    limit_monitors: &'a MonitorReport,
    eps_monitors: Vec<&'a EpsMonitorReport>,
}

#[derive(Serialize)]
struct LemmasSummary<'a> {
    mode: &'static str,
    version: &'a str,
    seed: u64,
    radius: f64,
    report: &'a LemmaReport,
}

#[derive(Serialize)]
struct SelfconvSummary<'a> {
    mode: &'static str,
    version: &'a str,
    seed: u64,
    eps: f64,
    limit: &'a SelfConvergence,
    eps_solver: &'a SelfConvergence,
}

fn enforce_limit_monitors(m: &MonitorReport) -> Result<()> {
    if !m.energy_ok {
        return Err(Error::MonitorViolation(format!(
            "energy ratio {:.3e} exceeds ceiling {:.3e}",
            m.energy_max_ratio, m.energy_ceiling
        )));
    }
    if !m.bootstrap.ok {
        return Err(Error::MonitorViolation(format!(
            "bootstrap failed (eta margin {:.3e}, pair margin {:.3e}, first at t = {:?})",
            m.bootstrap.eta_margin, m.bootstrap.pair_margin, m.bootstrap_first_violation_t
        )));
    }
    if m.min_poincare_margin < 0.0 {
        return Err(Error::MonitorViolation(format!(
            "vertical Poincare margin went negative ({:.3e})",
            m.min_poincare_margin
        )));
    }
    Ok(())
}

fn enforce_eps_monitors(m: &EpsMonitorReport) -> Result<()> {
    if !m.assump_ok {
        return Err(Error::MonitorViolation(format!(
            "well-preparedness value {:.3e} exceeds ceiling {:.3e}",
            m.hyp_lhs,
            m.assump_ceiling.unwrap_or(f64::NAN)
        )));
    }
    Ok(())
}

/// Runs `mode` under `config`, writing `manifest.toml`, any series files,
/// and `summary.json` into `out_dir`.
pub fn execute(config: &RunConfig, mode: Mode, out_dir: &Path) -> Result<()> {
    config.validate(mode)?;
    std::fs::create_dir_all(out_dir)?;
    write_manifest(out_dir, mode, config)?;
    let grid = config.grid()?;
    let p = &config.params;
    let u0 = harness::initial_velocity(grid, p.s1, p.s2, p.delta, config.seed);
    match mode {
        Mode::Limit => {
            let lp = config.limit_params()?;
            let out = limit::run(u0, &lp)?;
            let rows: Vec<Vec<f64>> = out.rows.iter().map(limit_row_values).collect();
            write_series(out_dir, "series.csv", &LIMIT_COLUMNS, &rows)?;
            let last = out.rows.last().expect("at least one row");
            write_summary(
                out_dir,
                &LimitSummary {
                    mode: "limit",
                    version: crate::VERSION,
                    seed: config.seed,
                    t_final: lp.t_final,
                    n_rows: out.rows.len(),
                    final_h_u: last.h_u,
                    final_eta: last.eta1 + last.eta2,
                    final_psi_radius: last.psi_radius,
                    monitors: &out.monitors,
                },
            )?;
            enforce_limit_monitors(&out.monitors)
        }
        Mode::Eps => {
            let ep = config.eps_params()?;
            let out = crate::eps::run(u0, &ep)?;
            let rows: Vec<Vec<f64>> = out.rows.iter().map(eps_row_values).collect();
            write_series(out_dir, "series.csv", &EPS_COLUMNS, &rows)?;
            let last = out.rows.last().expect("at least one row");
            write_summary(
                out_dir,
                &EpsSummary {
                    mode: "eps",
                    version: crate::VERSION,
                    seed: config.seed,
                    eps: ep.eps,
                    eps0: config.monitors.eps0,
                    eps_within_eps0: ep.eps <= config.monitors.eps0,
                    t_final: ep.t_final,
                    n_rows: out.rows.len(),
                    final_h_u: last.h_u,
                    monitors: &out.monitors,
                },
            )?;
            enforce_eps_monitors(&out.monitors)
        }
        Mode::Convergence => {
            let lp = config.limit_params()?;
            let ep = config.eps_params()?;
            let out = convergence_study(&u0, &lp, &ep, &p.eps_list)?;
            let rows: Vec<Vec<f64>> = out.limit.rows.iter().map(limit_row_values).collect();
            write_series(out_dir, "series.csv", &LIMIT_COLUMNS, &rows)?;
            for (eps, run) in p.eps_list.iter().zip(&out.eps_runs) {
                let rows: Vec<Vec<f64>> = run.rows.iter().map(eps_row_values).collect();
                write_series(out_dir, &format!("eps_{eps}.csv"), &EPS_COLUMNS, &rows)?;
            }
            write_summary(
                out_dir,
                &ConvergenceSummary {
                    mode: "convergence",
                    version: crate::VERSION,
                    seed: config.seed,
                    eps_list: &p.eps_list,
                    errors: &out.per_eps,
                    rate: &out.rate,
                    limit_monitors: &out.limit.monitors,
                    eps_monitors: out.eps_runs.iter().map(|r| &r.monitors).collect(),
                },
            )?;
            enforce_limit_monitors(&out.limit.monitors)?;
            for run in &out.eps_runs {
                enforce_eps_monitors(&run.monitors)?;
            }
            Ok(())
        }
        Mode::Lemmas => {
            let material = config.material()?;
            let report = lemma_suite(
                grid,
                p.s1,
                p.s2,
                p.radius_a,
                &material,
                config.seed,
                config.monitors.product_ceiling,
                config.monitors.composition_ceiling,
            )?;
            write_summary(
                out_dir,
                &LemmasSummary {
                    mode: "lemmas",
                    version: crate::VERSION,
                    seed: config.seed,
                    radius: p.radius_a,
                    report: &report,
                },
            )?;
            if !report.pass {
                return Err(Error::MonitorViolation(format!(
                    "lemma checks failed: modewise violation {:.3e}, product ratio {:.3e} \
                     (ceiling {:.3e}), composition ratio {:.3e} (ceiling {:.3e})",
                    report.modewise.max_violation,
                    report.product_ratio,
                    report.product_ceiling,
                    report.composition_ratio,
                    report.composition_ceiling
                )));
            }
            Ok(())
        }
        Mode::Selfconv => {
            let lp = config.limit_params()?;
            let ep = config.eps_params()?;
            let dt = config.stepping.dt;
            let dts = [dt, dt / 2.0, dt / 4.0];
            let limit_study = self_convergence_limit(&u0, &lp, dts)?;
            let eps_study = self_convergence_eps(&u0, &ep, dts)?;
            write_summary(
                out_dir,
                &SelfconvSummary {
                    mode: "selfconv",
                    version: crate::VERSION,
                    seed: config.seed,
                    eps: ep.eps,
                    limit: &limit_study,
                    eps_solver: &eps_study,
                },
            )?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_config() -> RunConfig {
        RunConfig::from_toml_str(
            r#"
seed = 1
[grid]
d_h = 1
n_h = 16
n_y = 16
[params]
theta = 0.5
b = 0.3
delta = 0.01
eps = 0.05
eps_list = [0.1, 0.05]
[monitors]
lambda = 1.0
[stepping]
dt = 1e-3
t_final = 0.02
output_every = 10
"#,
        )
        .unwrap()
    }

    #[test]
    fn exit_codes_partition_the_error_space() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::ConfigInvalid(vec![])), 2);
        assert_eq!(exit_code(&Error::InvalidArgument("x".into())), 2);
        assert_eq!(
            exit_code(&Error::Blowup {
                t: 0.0,
                what: "x".into()
            }),
            3
        );
        assert_eq!(
            exit_code(&Error::BandExhausted {
                t: 0.0,
                radius: -0.1
            }),
            3
        );
        assert_eq!(exit_code(&Error::MonitorViolation("x".into())), 4);
        assert_eq!(
            exit_code(&Error::ShapeMismatch("x".into())),
            1
        );
    }

    #[test]
    fn limit_mode_writes_all_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let config = test_config();
        execute(&config, Mode::Limit, dir.path()).unwrap();
        for name in ["manifest.toml", "series.csv", "summary.json"] {
            assert!(dir.path().join(name).exists(), "{name} missing");
        }
        let manifest = std::fs::read_to_string(dir.path().join("manifest.toml")).unwrap();
        assert!(manifest.contains("mode = \"limit\""));
        assert!(manifest.contains("seed = 1"));
        assert!(!manifest.to_lowercase().contains("time_stamp"));
        let csv = std::fs::read_to_string(dir.path().join("series.csv")).unwrap();
        assert!(csv.starts_with("t,h_u,"));
        assert_eq!(csv.lines().count(), 4); // header + rows at t = 0, 0.01, 0.02
    }

    #[test]
    fn reruns_are_byte_identical() {
        let config = test_config();
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        execute(&config, Mode::Eps, d1.path()).unwrap();
        execute(&config, Mode::Eps, d2.path()).unwrap();
        for name in ["manifest.toml", "series.csv", "summary.json"] {
            let a = std::fs::read(d1.path().join(name)).unwrap();
            let b = std::fs::read(d2.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between reruns");
        }
    }

    #[test]
    fn invalid_config_fails_before_writing() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = test_config();
        config.monitors.kappa = 0.9;
        let out = dir.path().join("sub");
        let err = execute(&config, Mode::Limit, &out).unwrap_err();
        assert_eq!(exit_code(&err), 2);
        assert!(!out.exists(), "output dir created despite bad config");
    }
}
