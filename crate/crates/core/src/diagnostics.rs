//! A-priori monitors: analyticity-radius tracking, bootstrap and energy
//! inequalities, the vertical Poincare margin, weighted time-norms, and the
//! zeta/Phi radius bookkeeping for the relaxation solver.
//!
//! None of these feed back into the dynamics; they watch invariants the
//! analysis promises and report margins. Quadrature is trapezoidal for all
//! time integrals except the eta ODE, which is forward Euler so that it
//! advances in lockstep with the solver.

use crate::error::{Error, Result};
use crate::field::{Axis, SpectralField};
use crate::norms::{anisotropic_norm, NormSpec};
use serde::Serialize;

/// Shrinking analyticity radius `r(t) = radius_a - lambda (eta1 + eta2)`.
///
/// `eta1, eta2` integrate the weighted norms of `d_y u` and `d_y^2 u`; the
/// weight itself is evaluated at the current radius, so the pair
/// (tracker, solver) forms the usual self-consistent bootstrap.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RadiusTracker {
    pub radius_a: f64,
    pub lambda: f64,
    pub eta1: f64,
    pub eta2: f64,
}

impl RadiusTracker {
    pub fn new(radius_a: f64, lambda: f64) -> Self {
        RadiusTracker {
            radius_a,
            lambda,
            eta1: 0.0,
            eta2: 0.0,
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta1 + self.eta2
    }

    pub fn radius(&self) -> f64 {
        self.radius_a - self.lambda * self.eta()
    }
}

/// Forward-Euler update of the eta pair using norms at the current radius.
/// Returns the two rates `(|d_y u|_Psi, |d_y^2 u|_Psi)` used for the step.
pub fn eta_advance(
    tracker: &mut RadiusTracker,
    u: &SpectralField,
    s1: f64,
    s2: f64,
    dt: f64,
) -> Result<(f64, f64)> {
    let r = tracker.radius();
    if r <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "eta_advance at nonpositive radius {r:.3e}"
        )));
    }
    let spec = NormSpec::new(s1, s2, r);
    let rate1 = anisotropic_norm(&u.derivative(Axis::Y, 1), &spec)?;
    let rate2 = anisotropic_norm(&u.derivative(Axis::Y, 2), &spec)?;
    tracker.eta1 += dt * rate1;
    tracker.eta2 += dt * rate2;
    Ok((rate1, rate2))
}

/// Thresholds for the bootstrap monitor.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BootstrapSettings {
    pub eps1: f64,
    pub big_c1: f64,
    pub radius_a: f64,
    pub lambda: f64,
}

/// Smallness ceiling `min(eps1, 1/(16 C1))` for the squared pair norm.
pub fn bootstrap_ceiling(eps1: f64, big_c1: f64) -> f64 {
    eps1.min(1.0 / (16.0 * big_c1))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BootstrapReport {
    pub eta: f64,
    pub eta_ceiling: f64,
    pub eta_margin: f64,
    pub pair_sq: f64,
    pub pair_ceiling: f64,
    pub pair_margin: f64,
    pub ok: bool,
}

/// Checks the two bootstrap conditions: `eta < radius_a / lambda` and
/// `sup_t (|u_Psi|^2 + |d_y u_Psi|^2) < min(eps1, 1/(16 C1))`.
/// `pair_sq` is the running maximum of the squared pair norm.
pub fn bootstrap_check(eta: f64, pair_sq: f64, s: &BootstrapSettings) -> BootstrapReport {
    let eta_ceiling = s.radius_a / s.lambda;
    let pair_ceiling = bootstrap_ceiling(s.eps1, s.big_c1);
    BootstrapReport {
        eta,
        eta_ceiling,
        eta_margin: eta_ceiling - eta,
        pair_sq,
        pair_ceiling,
        pair_margin: pair_ceiling - pair_sq,
        ok: eta < eta_ceiling && pair_sq < pair_ceiling,
    }
}

/// Running evaluation of the a-priori energy inequality
///
/// ```text
/// |e^{Kt} u_{a/2}|_{Linf H} + |e^{Kt} d_y u_{a/2}|_{Linf H}
///   + |e^{Kt} d_y u_{a/2}|_{L2 H} + |e^{Kt} d_y^2 u_{a/2}|_{L2 H}
///   <= 100 (|u0_a| + |d_y u0_a|)
/// ```
///
/// where the subscript is the analytic weight radius: the running terms use
/// `radius_a / 2`, the initial bracket uses the full `radius_a`.
pub struct EnergyAccumulator {
    kappa: f64,
    spec: NormSpec,
    rhs_bracket: f64,
    linf_u: f64,
    linf_dyu: f64,
    l2_dyu_sq: f64,
    l2_d2yu_sq: f64,
    prev: Option<(f64, f64, f64)>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EnergySample {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

impl EnergyAccumulator {
    pub fn new(u0: &SpectralField, s1: f64, s2: f64, radius_a: f64, kappa: f64) -> Result<Self> {
        let init_spec = NormSpec::new(s1, s2, radius_a);
        let rhs_bracket = anisotropic_norm(u0, &init_spec)?
            + anisotropic_norm(&u0.derivative(Axis::Y, 1), &init_spec)?;
        Ok(EnergyAccumulator {
            kappa,
            spec: NormSpec::new(s1, s2, radius_a / 2.0),
            rhs_bracket,
            linf_u: 0.0,
            linf_dyu: 0.0,
            l2_dyu_sq: 0.0,
            l2_d2yu_sq: 0.0,
            prev: None,
        })
    }

    /// Feeds the state at time `t` (nondecreasing) and returns the current
    /// left-hand side and ratio. Zero initial data reports ratio 0.
    pub fn push(&mut self, t: f64, u: &SpectralField) -> Result<EnergySample> {
        let w_u = anisotropic_norm(u, &self.spec)?;
        let w_dyu = anisotropic_norm(&u.derivative(Axis::Y, 1), &self.spec)?;
        let w_d2yu = anisotropic_norm(&u.derivative(Axis::Y, 2), &self.spec)?;
        let growth = (self.kappa * t).exp();
        self.linf_u = self.linf_u.max(growth * w_u);
        self.linf_dyu = self.linf_dyu.max(growth * w_dyu);
        let g1 = growth * growth * w_dyu * w_dyu;
        let g2 = growth * growth * w_d2yu * w_d2yu;
        if let Some((tp, p1, p2)) = self.prev {
            let h = 0.5 * (t - tp);
            self.l2_dyu_sq += h * (p1 + g1);
            self.l2_d2yu_sq += h * (p2 + g2);
        }
        self.prev = Some((t, g1, g2));
        let lhs = self.linf_u + self.linf_dyu + self.l2_dyu_sq.sqrt() + self.l2_d2yu_sq.sqrt();
        let ratio = if self.rhs_bracket == 0.0 {
            0.0
        } else {
            lhs / self.rhs_bracket
        };
        Ok(EnergySample {
            lhs,
            rhs: self.rhs_bracket,
            ratio,
        })
    }
}

/// Margin of the vertical Poincare inequality
/// `kappa |f_Psi|^2 <= 1/2 |d_y f_Psi|^2`
/// for a vertical-mean-free field; nonnegative whenever `kappa <= 1/2`
/// because every retained mode has `|k| >= 1`.
pub fn poincare_check(f: &SpectralField, kappa: f64, spec: &NormSpec) -> Result<f64> {
    let residual = f.vertical_mean_residual();
    let scale = f.max_abs_coeff().max(1.0);
    if residual > 1e-12 * scale {
        return Err(Error::NonzeroVerticalMean { residual });
    }
    let nf = anisotropic_norm(f, spec)?;
    let nd = anisotropic_norm(&f.derivative(Axis::Y, 1), spec)?;
    Ok(0.5 * nd * nd - kappa * nf * nf)
}

/// Weighted Bochner norm `(int w(t) |f(t)|^p dt)^{1/p}` by trapezoid over
/// the sample times. `p = inf` returns the sup of the samples where the
/// weight is positive (the weight acts as an indicator there).
pub fn bochner_norm(times: &[f64], weights: &[f64], values: &[f64], p: f64) -> Result<f64> {
    if times.len() != weights.len() || times.len() != values.len() {
        return Err(Error::ShapeMismatch(format!(
            "bochner_norm lengths {} / {} / {}",
            times.len(),
            weights.len(),
            values.len()
        )));
    }
    if times.is_empty() {
        return Err(Error::InvalidArgument("bochner_norm of no samples".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "bochner_norm times must be strictly increasing".into(),
        ));
    }
    if weights.iter().any(|&w| !(w >= 0.0)) {
        return Err(Error::InvalidArgument(
            "bochner_norm weights must be nonnegative".into(),
        ));
    }
    if p.is_infinite() {
        return Ok(values
            .iter()
            .zip(weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(v, _)| v.abs())
            .fold(0.0, f64::max));
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "bochner_norm exponent must satisfy p >= 1, got {p}"
        )));
    }
    let integrand: Vec<f64> = values
        .iter()
        .zip(weights)
        .map(|(v, w)| w * v.abs().powf(p))
        .collect();
    let mut total = 0.0;
    for i in 1..times.len() {
        total += 0.5 * (times[i] - times[i - 1]) * (integrand[i] + integrand[i - 1]);
    }
    Ok(total.powf(1.0 / p))
}

/// One zeta integrand sample for the relaxation solver:
/// `|(eps grad_x, d_y) u|_w + |d_y u|_w + |d_y^2 u|_w` at weight radius `w`.
pub fn zeta_integrand(
    u: &SpectralField,
    eps: f64,
    s1: f64,
    s2: f64,
    weight_radius: f64,
) -> Result<f64> {
    let spec = NormSpec::new(s1, s2, weight_radius);
    let dyu = u.derivative(Axis::Y, 1);
    let mut grad_sq = {
        let n = anisotropic_norm(&dyu, &spec)?;
        n * n
    };
    for a in 0..u.grid().d_h {
        let n = anisotropic_norm(&u.derivative(Axis::X(a), 1), &spec)?;
        grad_sq += eps * eps * n * n;
    }
    let n_dyu = anisotropic_norm(&dyu, &spec)?;
    let n_d2yu = anisotropic_norm(&u.derivative(Axis::Y, 2), &spec)?;
    Ok(grad_sq.sqrt() + n_dyu + n_d2yu)
}

/// Cumulative zeta and the Phi radius `(radius_a - lambda_tilde zeta)/3`,
/// with the sandwich `radius_a/4 <= Phi <= radius_a/3` checked pointwise.
#[derive(Clone, Debug, Serialize)]
pub struct ZetaPhiReport {
    pub times: Vec<f64>,
    pub zeta: Vec<f64>,
    pub phi_radius: Vec<f64>,
    pub lower: f64,
    pub upper: f64,
    pub sandwich_ok: bool,
    pub first_violation_t: Option<f64>,
    pub nondecreasing: bool,
}

pub fn zeta_phi(
    times: &[f64],
    integrand: &[f64],
    radius_a: f64,
    lambda_tilde: f64,
) -> Result<ZetaPhiReport> {
    if times.len() != integrand.len() || times.is_empty() {
        return Err(Error::ShapeMismatch("zeta_phi sample mismatch".into()));
    }
    let mut zeta = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    zeta.push(0.0);
    for i in 1..times.len() {
        acc += 0.5 * (times[i] - times[i - 1]) * (integrand[i] + integrand[i - 1]);
        zeta.push(acc);
    }
    let phi_radius: Vec<f64> = zeta.iter().map(|z| (radius_a - lambda_tilde * z) / 3.0).collect();
    let lower = radius_a / 4.0;
    let upper = radius_a / 3.0;
    let mut first_violation_t = None;
    for (i, &phi) in phi_radius.iter().enumerate() {
        if !(phi >= lower && phi <= upper) {
            first_violation_t = Some(times[i]);
            break;
        }
    }
    let nondecreasing = zeta.windows(2).all(|w| w[1] >= w[0]);
    Ok(ZetaPhiReport {
        times: times.to_vec(),
        zeta,
        phi_radius,
        lower,
        upper,
        sandwich_ok: first_violation_t.is_none(),
        first_violation_t,
        nondecreasing,
    })
}

/// Monitor bundle a limit run reports at the end.
#[derive(Clone, Debug, Serialize)]
pub struct MonitorReport {
    pub energy_max_ratio: f64,
    pub energy_ceiling: f64,
    pub energy_ok: bool,
    pub bootstrap: BootstrapReport,
    pub bootstrap_first_violation_t: Option<f64>,
    pub min_poincare_margin: f64,
    pub max_vmean_residual: f64,
    pub max_incomp_residual: f64,
    pub min_psi_radius: f64,
    pub eta_nondecreasing: bool,
}
