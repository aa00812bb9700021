//! Deterministic run artifacts: manifest, time series, summary.
//!
//! Reruns with identical config and seed must produce byte-identical files,
//! so nothing here depends on wall clock, environment, or map iteration
//! order. Floats print with 17 significant digits and round-trip exactly.

use crate::config::{Mode, RunConfig};
use crate::eps::EpsRow;
use crate::error::Result;
use crate::limit::LimitRow;
use serde::Serialize;
use std::fs;
use std::path::Path;

/// Shortest-exact is not needed; fixed-width scientific with 16 fractional
/// digits always carries the full 17 significant digits of an f64.
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

pub const LIMIT_COLUMNS: [&str; 15] = [
    "t",
    "h_u",
    "h_dyu",
    "hw_u",
    "hw_dyu",
    "hw_d2yu",
    "eta1",
    "eta2",
    "psi_radius",
    "energy_ratio",
    "poincare_margin",
    "bootstrap_pair_sq",
    "bootstrap_ok",
    "vmean_residual",
    "incomp_residual",
];

pub fn limit_row_values(r: &LimitRow) -> Vec<f64> {
    vec![
        r.t,
        r.h_u,
        r.h_dyu,
        r.hw_u,
        r.hw_dyu,
        r.hw_d2yu,
        r.eta1,
        r.eta2,
        r.psi_radius,
        r.energy_ratio,
        r.poincare_margin,
        r.bootstrap_pair_sq,
        if r.bootstrap_ok { 1.0 } else { 0.0 },
        r.vmean_residual,
        r.incomp_residual,
    ]
}

pub const EPS_COLUMNS: [&str; 11] = [
    "t",
    "h_u",
    "h_v",
    "w_u_epsv",
    "w_tau_sqrt_eps",
    "w_tau",
    "grad_integrand",
    "zeta_integrand",
    "hyp_lhs",
    "div_residual",
    "vmean_v_residual",
];

pub fn eps_row_values(r: &EpsRow) -> Vec<f64> {
    vec![
        r.t,
        r.h_u,
        r.h_v,
        r.w_u_epsv,
        r.w_tau_sqrt_eps,
        r.w_tau,
        r.grad_integrand,
        r.zeta_integrand,
        r.hyp_lhs,
        r.div_residual,
        r.vmean_v_residual,
    ]
}

#[derive(Serialize)]
struct RunStamp<'a> {
    version: &'a str,
    mode: &'a str,
    seed: u64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    run: RunStamp<'a>,
    config: &'a RunConfig,
}

/// `manifest.toml`: a run stamp (no timestamp, reruns stay byte-identical)
/// followed by the full effective configuration.
pub fn write_manifest(dir: &Path, mode: Mode, config: &RunConfig) -> Result<()> {
    let manifest = Manifest {
        run: RunStamp {
            version: crate::VERSION,
            mode: mode.name(),
            seed: config.seed,
        },
        config,
    };
    let text = toml::to_string(&manifest)
        .map_err(|e| crate::Error::Config(format!("manifest serialization: {e}")))?;
    fs::write(dir.join("manifest.toml"), text)?;
    Ok(())
}

pub fn write_series(dir: &Path, name: &str, columns: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut text = String::new();
    text.push_str(&columns.join(","));
    text.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), columns.len());
        let cells: Vec<String> = row.iter().map(|&v| fmt_g17(v)).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    fs::write(dir.join(name), text)?;
    Ok(())
}

pub fn write_summary(dir: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| crate::Error::Config(format!("summary serialization: {e}")))?;
    text.push('\n');
    fs::write(dir.join("summary.json"), text)?;
    Ok(())
}
