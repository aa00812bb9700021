//! Reduced (hydrostatic, instantaneous-stress) solver.
//!
//! The evolved unknown is the horizontal velocity `u(x, y, t)`; the vertical
//! velocity and the pressure are diagnostic. With the stress eliminated
//! through the algebraic closure, the u-equation takes the form
//!
//! ```text
//! d_t u + div_x(u ox u) + d_y(v u) - d_y^2 u + grad_x p = (1 - theta) F(u)
//! ```
//!
//! where F collects the shear-thinning correction (see `constitutive`): the
//! theta d_y^2 u viscosity and the (1-theta) d_y^2 u part of the stress
//! divergence combine into a unit-coefficient vertical Laplacian, which is
//! what makes a simple IMEX split uniformly stable in theta.
//!
//! Time stepping: explicit forward Euler on advection, pressure and F;
//! exact diagonal solve for the implicit vertical diffusion. Advection is
//! in conservative (flux) form so the vertical-mean constraint telescopes
//! exactly instead of up to quadrature error.

use crate::constitutive::{nonlinear_flux, MaterialParams};
use crate::diagnostics::{
    bootstrap_check, eta_advance, BootstrapSettings, EnergyAccumulator, MonitorReport,
    poincare_check, RadiusTracker,
};
use crate::error::{Error, Result};
use crate::field::{product, Axis, HorizontalField, SpectralField};
use crate::grid::Grid;
use crate::norms::{anisotropic_norm, NormSpec};
use num_complex::Complex64;
use serde::Serialize;

#[derive(Clone, Debug)]
pub struct LimitParams {
    pub grid: Grid,
    pub material: MaterialParams,
    pub s1: f64,
    pub s2: f64,
    pub radius_a: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub eps1: f64,
    pub big_c1: f64,
    pub dt: f64,
    pub t_final: f64,
    pub output_every: usize,
    pub norm_ceiling: f64,
    pub energy_ceiling: f64,
}

#[derive(Clone, Debug)]
pub struct LimitState {
    pub u: SpectralField,
    pub t: f64,
    pub tracker: RadiusTracker,
}

/// Explicit tendency and the diagnostic fields that came out of assembling it.
pub struct RhsParts {
    pub rhs: SpectralField,
    pub v: SpectralField,
    pub pressure: HorizontalField,
    pub incomp_residual: f64,
}

/// Per-step diagnostics; weighted norms are of the pre-step state at the
/// pre-step radius (they drive the eta quadrature), the plain norm and the
/// mean residual describe the post-step state.
#[derive(Clone, Copy, Debug)]
pub struct StepDiag {
    pub hw_u: f64,
    pub hw_dyu: f64,
    pub hw_d2yu: f64,
    pub h_u: f64,
    pub vmean_residual: f64,
    pub incomp_residual: f64,
}

/// One output row of the time series.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LimitRow {
    pub t: f64,
    pub h_u: f64,
    pub h_dyu: f64,
    pub hw_u: f64,
    pub hw_dyu: f64,
    pub hw_d2yu: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub psi_radius: f64,
    pub energy_ratio: f64,
    pub poincare_margin: f64,
    pub bootstrap_pair_sq: f64,
    pub bootstrap_ok: bool,
    pub vmean_residual: f64,
    pub incomp_residual: f64,
}

pub struct LimitRun {
    pub rows: Vec<LimitRow>,
    pub snapshots: Vec<(f64, SpectralField)>,
    pub final_state: LimitState,
    pub monitors: MonitorReport,
}

/// Vertical velocity from incompressibility: `ik vhat = -i xi . uhat` mode
/// by mode, with the `int v dy = 0` gauge fixing `k = 0`. Fails if the
/// vertical mean of `u` carries horizontal divergence, because then no
/// periodic `v` exists.
pub fn recover_v(u: &SpectralField) -> Result<SpectralField> {
    let grid = *u.grid();
    let d = grid.d_h;
    if u.ncomp() != d {
        return Err(Error::ShapeMismatch(format!(
            "recover_v expects {d} components, got {}",
            u.ncomp()
        )));
    }
    let mut divx = SpectralField::zero(grid, 1);
    for a in 0..d {
        divx.axpy(1.0, &u.component(a).derivative(Axis::X(a), 1));
    }
    let scale = u.max_abs_coeff().max(1.0);
    let mut residual = 0.0f64;
    for h in 0..grid.n_h_total() {
        residual = residual.max(divx.get(0, h, 0).norm());
    }
    if residual > 1e-10 * scale {
        return Err(Error::NonzeroVerticalMean { residual });
    }
    let mut v = SpectralField::zero(grid, 1);
    for h in 0..grid.n_h_total() {
        for y in 0..grid.n_y {
            let k = grid.k_of(y);
            if k != 0 {
                let val = -divx.get(0, h, y) / Complex64::new(0.0, k as f64);
                v.set(0, h, y, val);
            }
        }
    }
    Ok(v)
}

/// Hydrostatic pressure from the vertical mean of the momentum flux:
/// `phat(xi) = - sum_{i,a} xi_i xi_a <uhat_i uhat_a>(xi) / |xi|^2` for
/// `xi != 0`, zero-mean gauge at `xi = 0`. This is exactly the multiplier
/// that keeps the mean slice divergence-free under conservative advection.
pub fn recover_pressure(u: &SpectralField) -> Result<HorizontalField> {
    let grid = *u.grid();
    let d = grid.d_h;
    let mut flux = Vec::new();
    for a in 0..d {
        for i in a..d {
            flux.push((a, i, product(&u.component(a), &u.component(i))?));
        }
    }
    Ok(pressure_from_flux(&grid, &flux))
}

fn pressure_from_flux(grid: &Grid, flux: &[(usize, usize, SpectralField)]) -> HorizontalField {
    let mut p = HorizontalField::zero(*grid, 1);
    for h in 0..grid.n_h_total() {
        let xi = grid.xi(h);
        let xi_sq = xi[0] * xi[0] + xi[1] * xi[1];
        if xi_sq == 0.0 {
            continue;
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, i, t_ai) in flux {
            let m = t_ai.get(0, h, 0);
            let w = xi[*a] * xi[*i] * m;
            // off-diagonal entries stand for both (a,i) and (i,a)
            acc += if a == i { w } else { 2.0 * w };
        }
        p.set(0, h, -acc / xi_sq);
    }
    p
}

/// Explicit part of the tendency: conservative advection, pressure gradient
/// and the shear-thinning correction. The implicit `d_y^2 u` is not included.
pub fn rhs_explicit(u: &SpectralField, material: &MaterialParams) -> Result<RhsParts> {
    let grid = *u.grid();
    let d = grid.d_h;
    if u.ncomp() != d {
        return Err(Error::ShapeMismatch(format!(
            "rhs_explicit expects {d} components, got {}",
            u.ncomp()
        )));
    }
    let v = recover_v(u)?;
    let mut flux = Vec::new();
    for a in 0..d {
        for i in a..d {
            flux.push((a, i, product(&u.component(a), &u.component(i))?));
        }
    }
    let pressure = pressure_from_flux(&grid, &flux);
    let pick = |a: usize, i: usize| -> &SpectralField {
        flux
            .iter()
            .find(|(p, q, _)| (*p == a && *q == i) || (*p == i && *q == a))
            .map(|(_, _, f)| f)
            .expect("flux table covers all pairs")
    };
    let mut tends = Vec::with_capacity(d);
    for i in 0..d {
        let mut tend = SpectralField::zero(grid, 1);
        for a in 0..d {
            tend.axpy(-1.0, &pick(a, i).derivative(Axis::X(a), 1));
        }
        tend.axpy(-1.0, &product(&v, &u.component(i))?.derivative(Axis::Y, 1));
        tend.axpy(-1.0, &pressure.gradient_axis(i).to_full());
        tends.push(tend);
    }
    let refs: Vec<&SpectralField> = tends.iter().collect();
    let mut rhs = SpectralField::stack(&refs)?;
    rhs.axpy(1.0 - material.theta, &nonlinear_flux(u, material));
    let incomp_residual = incompressibility_residual(u, &v);
    Ok(RhsParts {
        rhs,
        v,
        pressure,
        incomp_residual,
    })
}

/// Max modulus of `div_x u + d_y v` over all retained modes.
pub fn incompressibility_residual(u: &SpectralField, v: &SpectralField) -> f64 {
    let grid = *u.grid();
    let mut div = v.derivative(Axis::Y, 1);
    for a in 0..grid.d_h {
        div.axpy(1.0, &u.component(a).derivative(Axis::X(a), 1));
    }
    div.max_abs_coeff()
}

/// Residual of the constraint the pressure maintains on the vertical-mean
/// slice: the slice itself for `d_h = 1` (it is conserved at zero), its
/// horizontal divergence for `d_h = 2`.
pub fn mean_constraint_residual(u: &SpectralField) -> f64 {
    let grid = *u.grid();
    let mut worst = 0.0f64;
    for h in 0..grid.n_h_total() {
        if grid.d_h == 1 {
            worst = worst.max(u.get(0, h, 0).norm());
        } else {
            let xi = grid.xi(h);
            let div = Complex64::new(0.0, xi[0]) * u.get(0, h, 0)
                + Complex64::new(0.0, xi[1]) * u.get(1, h, 0);
            worst = worst.max(div.norm());
        }
    }
    worst
}

/// Projects the vertical-mean slice back onto the constraint set: for
/// `d_h = 1` the whole slice is conserved at zero, for `d_h = 2` only the
/// gradient part is removed (the rotational part evolves freely).
pub fn gauge_mean_slice(u: &mut SpectralField) {
    let grid = *u.grid();
    if grid.d_h == 1 {
        for h in 0..grid.n_h_total() {
            u.set(0, h, 0, Complex64::new(0.0, 0.0));
        }
        return;
    }
    for h in 0..grid.n_h_total() {
        let xi = grid.xi(h);
        let xi_sq = xi[0] * xi[0] + xi[1] * xi[1];
        if xi_sq == 0.0 {
            continue;
        }
        let dot = xi[0] * u.get(0, h, 0) + xi[1] * u.get(1, h, 0);
        for c in 0..2 {
            let val = u.get(c, h, 0) - dot * (xi[c] / xi_sq);
            u.set(c, h, 0, val);
        }
    }
}

fn implicit_vertical_diffusion(u: &mut SpectralField, dt: f64) {
    let grid = *u.grid();
    let ncomp = u.ncomp();
    for c in 0..ncomp {
        for h in 0..grid.n_h_total() {
            for y in 0..grid.n_y {
                let k = grid.k_of(y) as f64;
                let val = u.get(c, h, y) / (1.0 + dt * k * k);
                u.set(c, h, y, val);
            }
        }
    }
}

/// Number of steps covering `[0, t_final]`; `dt` must divide `t_final`.
pub fn steps_for(dt: f64, t_final: f64) -> Result<usize> {
    if !(dt > 0.0) || !(t_final > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need positive dt and t_final, got {dt} and {t_final}"
        )));
    }
    let n = (t_final / dt).round();
    if (n * dt - t_final).abs() > 1e-6 * dt || n < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "dt = {dt} does not divide t_final = {t_final}"
        )));
    }
    Ok(n as usize)
}

/// One IMEX step. `source` is an optional extra explicit forcing (method of
/// manufactured solutions hook); production runs pass `None`. The eta pair
/// advances with the pre-step state at the pre-step radius.
pub fn step(
    state: &mut LimitState,
    p: &LimitParams,
    source: Option<&SpectralField>,
) -> Result<StepDiag> {
    let t = state.t;
    let r = state.tracker.radius();
    if r <= 0.0 {
        return Err(Error::BandExhausted { t, radius: r });
    }
    let spec_w = NormSpec::new(p.s1, p.s2, r);
    let hw_u = anisotropic_norm(&state.u, &spec_w)?;
    let (hw_dyu, hw_d2yu) = eta_advance(&mut state.tracker, &state.u, p.s1, p.s2, p.dt)?;
    let parts = rhs_explicit(&state.u, &p.material)?;
    let mut unew = state.u.clone();
    unew.axpy(p.dt, &parts.rhs);
    if let Some(s) = source {
        unew.axpy(p.dt, s);
    }
    implicit_vertical_diffusion(&mut unew, p.dt);
    let vmean_residual = mean_constraint_residual(&unew);
    gauge_mean_slice(&mut unew);
    unew.dealias();
    if !unew.is_finite() {
        return Err(Error::Blowup {
            t: t + p.dt,
            what: "nonfinite coefficients".into(),
        });
    }
    let h_u = anisotropic_norm(&unew, &NormSpec::plain(p.s1, p.s2))?;
    if h_u > p.norm_ceiling {
        return Err(Error::Blowup {
            t: t + p.dt,
            what: format!("norm {h_u:.3e} exceeds ceiling {:.3e}", p.norm_ceiling),
        });
    }
    state.u = unew;
    state.t = t + p.dt;
    Ok(StepDiag {
        hw_u,
        hw_dyu,
        hw_d2yu,
        h_u,
        vmean_residual,
        incomp_residual: parts.incomp_residual,
    })
}

pub fn run(u0: SpectralField, p: &LimitParams) -> Result<LimitRun> {
    let grid = *u0.grid();
    if u0.ncomp() != grid.d_h {
        return Err(Error::ShapeMismatch(format!(
            "limit run expects {} components, got {}",
            grid.d_h,
            u0.ncomp()
        )));
    }
    let n_steps = steps_for(p.dt, p.t_final)?;
    let every = p.output_every.max(1);
    let mut state = LimitState {
        u: u0.dealiased(),
        t: 0.0,
        tracker: RadiusTracker::new(p.radius_a, p.lambda),
    };
    gauge_mean_slice(&mut state.u);
    let settings = BootstrapSettings {
        eps1: p.eps1,
        big_c1: p.big_c1,
        radius_a: p.radius_a,
        lambda: p.lambda,
    };
    let mut energy = EnergyAccumulator::new(&state.u, p.s1, p.s2, p.radius_a, p.kappa)?;
    let mut rows = Vec::new();
    let mut snapshots = Vec::new();
    let mut pair_max = 0.0f64;
    let mut first_violation: Option<f64> = None;
    let mut max_ratio = 0.0f64;
    let mut max_vmean = 0.0f64;
    let mut max_incomp = 0.0f64;
    let mut last_vmean = 0.0f64;
    let mut last_incomp = 0.0f64;
    let mut min_margin = f64::INFINITY;
    let mut min_radius = f64::INFINITY;
    for n in 0..=n_steps {
        let t = n as f64 * p.dt;
        state.t = t;
        let r = state.tracker.radius();
        if r <= 0.0 {
            return Err(Error::BandExhausted { t, radius: r });
        }
        min_radius = min_radius.min(r);
        let energy_sample = energy.push(t, &state.u)?;
        max_ratio = max_ratio.max(energy_sample.ratio);
        let spec_w = NormSpec::new(p.s1, p.s2, r);
        let hw_u = anisotropic_norm(&state.u, &spec_w)?;
        let hw_dyu = anisotropic_norm(&state.u.derivative(Axis::Y, 1), &spec_w)?;
        pair_max = pair_max.max(hw_u * hw_u + hw_dyu * hw_dyu);
        let boot = bootstrap_check(state.tracker.eta(), pair_max, &settings);
        if !boot.ok && first_violation.is_none() {
            first_violation = Some(t);
        }
        if n % every == 0 || n == n_steps {
            let plain = NormSpec::plain(p.s1, p.s2);
            let h_u = anisotropic_norm(&state.u, &plain)?;
            let h_dyu = anisotropic_norm(&state.u.derivative(Axis::Y, 1), &plain)?;
            let hw_d2yu = anisotropic_norm(&state.u.derivative(Axis::Y, 2), &spec_w)?;
            let mean_free = {
                let mut f = state.u.clone();
                f.remove_vertical_mean();
                f
            };
            let margin = poincare_check(&mean_free, p.kappa, &spec_w)?;
            min_margin = min_margin.min(margin);
            rows.push(LimitRow {
                t,
                h_u,
                h_dyu,
                hw_u,
                hw_dyu,
                hw_d2yu,
                eta1: state.tracker.eta1,
                eta2: state.tracker.eta2,
                psi_radius: r,
                energy_ratio: energy_sample.ratio,
                poincare_margin: margin,
                bootstrap_pair_sq: pair_max,
                bootstrap_ok: boot.ok,
                vmean_residual: last_vmean,
                incomp_residual: last_incomp,
            });
            snapshots.push((t, state.u.clone()));
        }
        if n == n_steps {
            break;
        }
        let diag = step(&mut state, p, None)?;
        max_vmean = max_vmean.max(diag.vmean_residual);
        max_incomp = max_incomp.max(diag.incomp_residual);
        last_vmean = diag.vmean_residual;
        last_incomp = diag.incomp_residual;
    }
    let eta_nondecreasing = rows
        .windows(2)
        .all(|w| w[1].eta1 + w[1].eta2 >= w[0].eta1 + w[0].eta2);
    let bootstrap = bootstrap_check(state.tracker.eta(), pair_max, &settings);
    let monitors = MonitorReport {
        energy_max_ratio: max_ratio,
        energy_ceiling: p.energy_ceiling,
        energy_ok: max_ratio <= p.energy_ceiling,
        bootstrap,
        bootstrap_first_violation_t: first_violation,
        min_poincare_margin: min_margin,
        max_vmean_residual: max_vmean,
        max_incomp_residual: max_incomp,
        min_psi_radius: min_radius,
        eta_nondecreasing,
    };
    Ok(LimitRun {
        rows,
        snapshots,
        final_state: state,
        monitors,
    })
}
