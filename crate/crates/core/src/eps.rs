//! Relaxation-time solver for the scaled velocity/stress system.
//!
//! Unknowns: horizontal velocity `u`, vertical velocity `v` and the six
//! stress components `tau`, all evolved. The stress relaxes toward a
//! velocity-dependent equilibrium on the fast time `eps`:
//!
//! ```text
//! eps d_t tau + tau = G(u, v, tau)
//! ```
//!
//! where G collects forcing, transport and rotation/deformation coupling.
//! The step splits stiffly: G is frozen at the current state and the
//! relaxation is integrated exactly (integrating factor), which keeps the
//! update uniformly accurate in `eps`; the velocity pair then advances
//! explicitly in advection and stress divergence, with the anisotropic
//! pressure projection applied to the tendency and the scaled Laplacian
//! `theta (eps^2 lap_x + d_y^2)` treated implicitly (diagonal in Fourier).
//!
//! In the scaled variables `W = (u, eps v)` the incompressibility constraint
//! reads `q . What = 0` with `q = (xi, k/eps)`, so one orthogonal projection
//! per mode enforces the constraint and eliminates the pressure at once.

use crate::constitutive::{initial_stress, MaterialParams, T11, T12, T13, T22, T23, T33};
use crate::diagnostics::{zeta_integrand, zeta_phi, ZetaPhiReport};
use crate::error::{Error, Result};
use crate::field::{Axis, SpectralField};
use crate::grid::Grid;
use crate::limit::{gauge_mean_slice, incompressibility_residual, recover_v, steps_for};
use crate::norms::{anisotropic_norm, NormSpec};
use num_complex::Complex64;
use serde::Serialize;

#[derive(Clone, Debug)]
pub struct EpsParams {
    pub grid: Grid,
    pub material: MaterialParams,
    pub eps: f64,
    pub s1: f64,
    pub s2: f64,
    pub radius_a: f64,
    pub lambda_tilde: f64,
    pub dt: f64,
    pub t_final: f64,
    pub output_every: usize,
    pub norm_ceiling: f64,
    pub assump_ceiling: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct EpsState {
    pub u: SpectralField,
    pub v: SpectralField,
    pub tau: SpectralField,
    pub t: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct EpsStepDiag {
    pub vmean_v_residual: f64,
    pub div_residual: f64,
    pub h_u: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EpsRow {
    pub t: f64,
    pub h_u: f64,
    pub h_v: f64,
    pub w_u_epsv: f64,
    pub w_tau_sqrt_eps: f64,
    pub w_tau: f64,
    pub grad_integrand: f64,
    pub zeta_integrand: f64,
    pub hyp_lhs: f64,
    pub div_residual: f64,
    pub vmean_v_residual: f64,
}

#[derive(Clone, Debug)]
pub struct EpsSnapshot {
    pub t: f64,
    pub u: SpectralField,
    pub v: SpectralField,
    pub tau: SpectralField,
}

/// Running record of the well-preparedness quantity
///
/// ```text
/// |e^{(a/2)<Dx>}(u, eps v)|_{Linf H} + sqrt(eps) |e^{(a/2)<Dx>} tau|_{Linf H}
///   + |grad_eps (u, eps v)|_{L2 H} + |grad_eps (u, eps v)|_{L1 H}
///   + |e^{(a/2)<Dx>} tau|_{L2 H}
/// ```
///
/// with `grad_eps = (eps grad_x, d_y)` under the same weight. Time norms by
/// trapezoid; this is observational only unless a ceiling is configured.
pub struct HypothesisAccumulator {
    eps: f64,
    linf_uv: f64,
    linf_tau: f64,
    l2_grad_sq: f64,
    l1_grad: f64,
    l2_tau_sq: f64,
    prev: Option<(f64, f64, f64)>,
}

impl HypothesisAccumulator {
    pub fn new(eps: f64) -> Self {
        HypothesisAccumulator {
            eps,
            linf_uv: 0.0,
            linf_tau: 0.0,
            l2_grad_sq: 0.0,
            l1_grad: 0.0,
            l2_tau_sq: 0.0,
            prev: None,
        }
    }

    pub fn push(&mut self, t: f64, w_uv: f64, w_tau: f64, grad: f64) -> f64 {
        self.linf_uv = self.linf_uv.max(w_uv);
        self.linf_tau = self.linf_tau.max(self.eps.sqrt() * w_tau);
        let g2 = grad * grad;
        let t2 = w_tau * w_tau;
        if let Some((tp, pg, pt)) = self.prev {
            let h = 0.5 * (t - tp);
            self.l2_grad_sq += h * (pg + g2);
            self.l2_tau_sq += h * (pt + t2);
            self.l1_grad += h * ((pg).sqrt() + grad);
        }
        self.prev = Some((t, g2, t2));
        self.lhs()
    }

    pub fn lhs(&self) -> f64 {
        self.linf_uv
            + self.linf_tau
            + self.l2_grad_sq.sqrt()
            + self.l1_grad
            + self.l2_tau_sq.sqrt()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EpsMonitorReport {
    pub max_div_residual: f64,
    pub max_vmean_v_residual: f64,
    pub hyp_lhs: f64,
    pub assump_ceiling: Option<f64>,
    pub assump_ok: bool,
    pub zeta_final: f64,
    pub phi_final: f64,
    pub sandwich_ok: bool,
    pub zeta_nondecreasing: bool,
}

pub struct EpsRun {
    pub rows: Vec<EpsRow>,
    pub snapshots: Vec<EpsSnapshot>,
    pub final_state: EpsState,
    pub monitors: EpsMonitorReport,
    pub zeta: ZetaPhiReport,
}

struct PhysTables {
    nt: usize,
    up: [Vec<f64>; 2],
    vp: Vec<f64>,
    // velocity gradients; absent directions are identically zero
    dux: [[Vec<f64>; 2]; 2], // dux[i][a] = d_{x_a} u_i
    duy: [Vec<f64>; 2],
    dvx: [Vec<f64>; 2],
    dvy: Vec<f64>,
}

fn phys_tables(u: &SpectralField, v: &SpectralField) -> PhysTables {
    let grid = *u.grid();
    let d = grid.d_h;
    let nt = grid.n_total();
    let zeros = || vec![0.0; nt];
    let comp_phys = |i: usize| -> Vec<f64> {
        if i < d {
            u.component(i).to_physical()
        } else {
            zeros()
        }
    };
    let grad_phys = |i: usize, a: usize| -> Vec<f64> {
        if i < d && a < d {
            u.component(i).derivative(Axis::X(a), 1).to_physical()
        } else {
            zeros()
        }
    };
    let duy_phys = |i: usize| -> Vec<f64> {
        if i < d {
            u.component(i).derivative(Axis::Y, 1).to_physical()
        } else {
            zeros()
        }
    };
    let dvx_phys = |a: usize| -> Vec<f64> {
        if a < d {
            v.derivative(Axis::X(a), 1).to_physical()
        } else {
            zeros()
        }
    };
    PhysTables {
        nt,
        up: [comp_phys(0), comp_phys(1)],
        vp: v.to_physical(),
        dux: [
            [grad_phys(0, 0), grad_phys(0, 1)],
            [grad_phys(1, 0), grad_phys(1, 1)],
        ],
        duy: [duy_phys(0), duy_phys(1)],
        dvx: [dvx_phys(0), dvx_phys(1)],
        dvy: v.derivative(Axis::Y, 1).to_physical(),
    }
}

/// Frozen-coefficient stress equilibrium `G`: forcing minus transport minus
/// the rotation and `b`-weighted deformation brackets, component by
/// component. Output is the dealiased 6-component field.
pub fn stress_rhs(
    u: &SpectralField,
    v: &SpectralField,
    tau: &SpectralField,
    material: &MaterialParams,
    eps: f64,
) -> Result<SpectralField> {
    let grid = *u.grid();
    let d = grid.d_h;
    if u.ncomp() != d || v.ncomp() != 1 || tau.ncomp() != 6 {
        return Err(Error::ShapeMismatch(format!(
            "stress_rhs got ({}, {}, {}) components",
            u.ncomp(),
            v.ncomp(),
            tau.ncomp()
        )));
    }
    let pt = phys_tables(u, v);
    let nt = pt.nt;
    let tp: Vec<Vec<f64>> = (0..6).map(|j| tau.component(j).to_physical()).collect();
    let dtx: Vec<[Vec<f64>; 2]> = (0..6)
        .map(|j| {
            let give = |a: usize| -> Vec<f64> {
                if a < d {
                    tau.component(j).derivative(Axis::X(a), 1).to_physical()
                } else {
                    vec![0.0; nt]
                }
            };
            [give(0), give(1)]
        })
        .collect();
    let dty: Vec<Vec<f64>> = (0..6)
        .map(|j| tau.component(j).derivative(Axis::Y, 1).to_physical())
        .collect();

    let th = material.theta;
    let mb = material.b;
    let e2 = eps * eps;
    let mut g = vec![0.0f64; 6 * nt];
    for n in 0..nt {
        // shear combinations; for d_h = 1 everything in direction 2 is zero
        let am1 = pt.duy[0][n] - e2 * pt.dvx[0][n];
        let am2 = pt.duy[1][n] - e2 * pt.dvx[1][n];
        let bp1 = pt.duy[0][n] + e2 * pt.dvx[0][n];
        let bp2 = pt.duy[1][n] + e2 * pt.dvx[1][n];
        let r = pt.dux[1][0][n] - pt.dux[0][1][n]; // d_{x1} u2 - d_{x2} u1
        let s11 = pt.dux[0][0][n];
        let s22 = pt.dux[1][1][n];
        let s12 = pt.dux[1][0][n] + pt.dux[0][1][n];
        let dvy = pt.dvy[n];
        let tr = |j: usize| -> f64 {
            pt.up[0][n] * dtx[j][0][n] + pt.up[1][n] * dtx[j][1][n] + pt.vp[n] * dty[j][n]
        };
        let (t11, t22, t33) = (tp[T11][n], tp[T22][n], tp[T33][n]);
        let (t12, t13, t23) = (tp[T12][n], tp[T13][n], tp[T23][n]);

        g[T11 * nt + n] = 2.0 * (1.0 - th) * eps * s11
            - eps * tr(T11)
            - (eps * t12 * r - t13 * am1)
            - mb * (2.0 * eps * t11 * s11 + eps * t12 * s12 + t13 * bp1);
        g[T22 * nt + n] = 2.0 * (1.0 - th) * eps * s22
            - eps * tr(T22)
            - (-eps * t12 * r - t23 * am2)
            - mb * (eps * t12 * s12 + 2.0 * eps * t22 * s22 + t23 * bp2);
        g[T33 * nt + n] = 2.0 * (1.0 - th) * eps * dvy
            - eps * tr(T33)
            - (t13 * am1 + t23 * am2)
            - mb * (t13 * bp1 + t23 * bp2 + 2.0 * eps * t33 * dvy);
        g[T12 * nt + n] = (1.0 - th) * eps * s12
            - eps * tr(T12)
            - 0.5 * mb * eps * (2.0 * t12 * (s11 + s22) + (t11 + t22) * s12)
            + 0.5 * eps * (t11 - t22) * r
            + 0.5 * t13 * am2
            + 0.5 * t23 * am1
            - 0.5 * mb * (t13 * bp2 + t23 * bp1);
        g[T13 * nt + n] = (1.0 - th) * bp1
            - eps * tr(T13)
            - 0.5 * mb * eps * (2.0 * t13 * (s11 + dvy) + t23 * s12)
            - 0.5 * (t11 - t33) * am1
            - 0.5 * t12 * am2
            - 0.5 * eps * t23 * r
            - 0.5 * mb * ((t11 + t33) * bp1 + t12 * bp2);
        g[T23 * nt + n] = (1.0 - th) * bp2
            - eps * tr(T23)
            - 0.5 * mb * eps * (2.0 * t23 * (s22 + dvy) + t13 * s12)
            - 0.5 * (t22 - t33) * am2
            - 0.5 * t12 * am1
            + 0.5 * eps * t13 * r
            - 0.5 * mb * ((t22 + t33) * bp2 + t12 * bp1);
    }
    let mut out = SpectralField::from_physical(grid, 6, &g);
    out.dealias();
    Ok(out)
}

/// Exact relaxation update with `g` frozen over the step:
/// `tau' = e^{-dt/eps} tau + (1 - e^{-dt/eps}) g`.
pub fn relaxation_step(tau: &mut SpectralField, g: &SpectralField, dt: f64, eps: f64) {
    let decay = (-dt / eps).exp();
    let gain = -(-dt / eps).exp_m1();
    tau.scale(decay);
    tau.axpy(gain, g);
}

/// Explicit velocity tendencies (advection plus stress divergence); the
/// pressure is absent because the projection supplies it.
pub fn velocity_rhs(
    u: &SpectralField,
    v: &SpectralField,
    tau: &SpectralField,
    eps: f64,
) -> Result<(SpectralField, SpectralField)> {
    let grid = *u.grid();
    let d = grid.d_h;
    if u.ncomp() != d || v.ncomp() != 1 || tau.ncomp() != 6 {
        return Err(Error::ShapeMismatch(format!(
            "velocity_rhs got ({}, {}, {}) components",
            u.ncomp(),
            v.ncomp(),
            tau.ncomp()
        )));
    }
    let pt = phys_tables(u, v);
    let nt = pt.nt;
    let advect = |f: &SpectralField| -> Result<SpectralField> {
        let mut dfx: Vec<Vec<f64>> = Vec::new();
        for a in 0..d {
            dfx.push(f.derivative(Axis::X(a), 1).to_physical());
        }
        let dfy = f.derivative(Axis::Y, 1).to_physical();
        let mut out = vec![0.0f64; nt];
        for n in 0..nt {
            let mut acc = pt.vp[n] * dfy[n];
            for (a, dfa) in dfx.iter().enumerate() {
                acc += pt.up[a][n] * dfa[n];
            }
            out[n] = acc;
        }
        let mut s = SpectralField::from_physical(grid, 1, &out);
        s.dealias();
        Ok(s)
    };
    // horizontal components: row i of the scaled stress divergence
    let rows = [[T11, T12, T13], [T12, T22, T23]];
    let mut fu_parts = Vec::with_capacity(d);
    for i in 0..d {
        let mut fu = SpectralField::zero(grid, 1);
        fu.axpy(-1.0, &advect(&u.component(i))?);
        for a in 0..d {
            fu.axpy(eps, &tau.component(rows[i][a]).derivative(Axis::X(a), 1));
        }
        fu.axpy(1.0, &tau.component(rows[i][2]).derivative(Axis::Y, 1));
        fu_parts.push(fu);
    }
    let refs: Vec<&SpectralField> = fu_parts.iter().collect();
    let fu = SpectralField::stack(&refs)?;
    // vertical component, after dividing its equation by eps^2
    let shear = [T13, T23];
    let mut fv = SpectralField::zero(grid, 1);
    fv.axpy(-1.0, &advect(v)?);
    for a in 0..d {
        fv.axpy(1.0, &tau.component(shear[a]).derivative(Axis::X(a), 1));
    }
    fv.axpy(1.0 / eps, &tau.component(T33).derivative(Axis::Y, 1));
    Ok((fu, fv))
}

/// Orthogonal projection of the tendency pair onto `q . W = 0` with
/// `q = (xi, k/eps)`, `W = (fu_hat, eps fv_hat)` per mode; this removes the
/// anisotropic pressure gradient. The `q = 0` mode carries no constraint.
pub fn anisotropic_leray(fu: &mut SpectralField, fv: &mut SpectralField, eps: f64) {
    let grid = *fu.grid();
    let d = grid.d_h;
    for h in 0..grid.n_h_total() {
        let xi = grid.xi(h);
        for y in 0..grid.n_y {
            let k = grid.k_of(y) as f64;
            let q = [xi[0], xi[1], k / eps];
            let q_sq = q[0] * q[0] + q[1] * q[1] + q[2] * q[2];
            if q_sq == 0.0 {
                continue;
            }
            let mut w = [Complex64::new(0.0, 0.0); 3];
            for (c, slot) in w.iter_mut().enumerate().take(d) {
                *slot = fu.get(c, h, y);
            }
            w[2] = eps * fv.get(0, h, y);
            let dot = q[0] * w[0] + q[1] * w[1] + q[2] * w[2];
            for c in 0..d {
                fu.set(c, h, y, w[c] - q[c] * dot / q_sq);
            }
            fv.set(0, h, y, (w[2] - q[2] * dot / q_sq) / eps);
        }
    }
}

fn implicit_scaled_diffusion(f: &mut SpectralField, dt: f64, theta: f64, eps: f64) {
    let grid = *f.grid();
    let ncomp = f.ncomp();
    for c in 0..ncomp {
        for h in 0..grid.n_h_total() {
            let xi = grid.xi(h);
            let xi_sq = xi[0] * xi[0] + xi[1] * xi[1];
            for y in 0..grid.n_y {
                let k = grid.k_of(y) as f64;
                let mult = 1.0 + dt * theta * (eps * eps * xi_sq + k * k);
                let val = f.get(c, h, y) / mult;
                f.set(c, h, y, val);
            }
        }
    }
}

fn vmean_v_residual(v: &SpectralField) -> f64 {
    let grid = *v.grid();
    let mut worst = 0.0f64;
    for h in 0..grid.n_h_total() {
        worst = worst.max(v.get(0, h, 0).norm());
    }
    worst
}

/// One split step: exact stress relaxation with frozen `G`, then explicit
/// projected velocity update with implicit scaled diffusion, then the
/// `int v dy = 0` gauge.
pub fn step(state: &mut EpsState, p: &EpsParams) -> Result<EpsStepDiag> {
    let t = state.t;
    let g = stress_rhs(&state.u, &state.v, &state.tau, &p.material, p.eps)?;
    let mut tau_new = state.tau.clone();
    relaxation_step(&mut tau_new, &g, p.dt, p.eps);
    let (mut fu, mut fv) = velocity_rhs(&state.u, &state.v, &tau_new, p.eps)?;
    anisotropic_leray(&mut fu, &mut fv, p.eps);
    let mut unew = state.u.clone();
    unew.axpy(p.dt, &fu);
    let mut vnew = state.v.clone();
    vnew.axpy(p.dt, &fv);
    implicit_scaled_diffusion(&mut unew, p.dt, p.material.theta, p.eps);
    implicit_scaled_diffusion(&mut vnew, p.dt, p.material.theta, p.eps);
    let vmean = vmean_v_residual(&vnew);
    for h in 0..unew.grid().n_h_total() {
        vnew.set(0, h, 0, Complex64::new(0.0, 0.0));
    }
    unew.dealias();
    vnew.dealias();
    tau_new.dealias();
    if !unew.is_finite() || !vnew.is_finite() || !tau_new.is_finite() {
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
    state.v = vnew;
    state.tau = tau_new;
    state.t = t + p.dt;
    Ok(EpsStepDiag {
        vmean_v_residual: vmean,
        div_residual: incompressibility_residual(&state.u, &state.v),
        h_u,
    })
}

/// Equilibrium initialization: `v` from incompressibility, `tau` on the
/// stress closure (well-prepared data).
pub fn initial_state(u0: SpectralField, material: &MaterialParams) -> Result<EpsState> {
    let mut u = u0.dealiased();
    gauge_mean_slice(&mut u);
    let v = recover_v(&u)?;
    let tau = initial_stress(&u, material);
    Ok(EpsState { u, v, tau, t: 0.0 })
}

pub fn run(u0: SpectralField, p: &EpsParams) -> Result<EpsRun> {
    let grid = *u0.grid();
    if u0.ncomp() != grid.d_h {
        return Err(Error::ShapeMismatch(format!(
            "eps run expects {} components, got {}",
            grid.d_h,
            u0.ncomp()
        )));
    }
    if !(p.eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "eps must be positive, got {}",
            p.eps
        )));
    }
    let n_steps = steps_for(p.dt, p.t_final)?;
    let every = p.output_every.max(1);
    let mut state = initial_state(u0, &p.material)?;
    let spec_w = NormSpec::new(p.s1, p.s2, p.radius_a / 2.0);
    let plain = NormSpec::plain(p.s1, p.s2);
    let mut hyp = HypothesisAccumulator::new(p.eps);
    let mut rows = Vec::new();
    let mut snapshots = Vec::new();
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut zeta_samples = Vec::with_capacity(n_steps + 1);
    let mut max_div = 0.0f64;
    let mut max_vmean = 0.0f64;
    let mut last_div = 0.0f64;
    let mut last_vmean = 0.0f64;
    for n in 0..=n_steps {
        let t = n as f64 * p.dt;
        state.t = t;
        let sv = state.v.clone().scaled(p.eps);
        let w_uv = {
            let mut parts: Vec<SpectralField> = Vec::new();
            for c in 0..grid.d_h {
                parts.push(state.u.component(c));
            }
            parts.push(sv.clone());
            let refs: Vec<&SpectralField> = parts.iter().collect();
            anisotropic_norm(&SpectralField::stack(&refs)?, &spec_w)?
        };
        let w_tau = anisotropic_norm(&state.tau, &spec_w)?;
        let grad = {
            let mut sq = 0.0f64;
            let mut add = |f: &SpectralField| -> Result<()> {
                for a in 0..grid.d_h {
                    let nrm = anisotropic_norm(&f.derivative(Axis::X(a), 1), &spec_w)?;
                    sq += p.eps * p.eps * nrm * nrm;
                }
                let nrm = anisotropic_norm(&f.derivative(Axis::Y, 1), &spec_w)?;
                sq += nrm * nrm;
                Ok(())
            };
            for c in 0..grid.d_h {
                add(&state.u.component(c))?;
            }
            add(&sv)?;
            sq.sqrt()
        };
        let zeta_int = zeta_integrand(&state.u, p.eps, p.s1, p.s2, p.radius_a / 2.0)?;
        let hyp_lhs = hyp.push(t, w_uv, w_tau, grad);
        times.push(t);
        zeta_samples.push(zeta_int);
        if n % every == 0 || n == n_steps {
            rows.push(EpsRow {
                t,
                h_u: anisotropic_norm(&state.u, &plain)?,
                h_v: anisotropic_norm(&state.v, &plain)?,
                w_u_epsv: w_uv,
                w_tau_sqrt_eps: p.eps.sqrt() * w_tau,
                w_tau,
                grad_integrand: grad,
                zeta_integrand: zeta_int,
                hyp_lhs,
                div_residual: last_div,
                vmean_v_residual: last_vmean,
            });
            snapshots.push(EpsSnapshot {
                t,
                u: state.u.clone(),
                v: state.v.clone(),
                tau: state.tau.clone(),
            });
        }
        if n == n_steps {
            break;
        }
        let diag = step(&mut state, p)?;
        max_div = max_div.max(diag.div_residual);
        max_vmean = max_vmean.max(diag.vmean_v_residual);
        last_div = diag.div_residual;
        last_vmean = diag.vmean_v_residual;
    }
    let zeta = zeta_phi(&times, &zeta_samples, p.radius_a, p.lambda_tilde)?;
    let hyp_lhs = hyp.lhs();
    let assump_ok = p.assump_ceiling.is_none_or(|c| hyp_lhs <= c);
    let monitors = EpsMonitorReport {
        max_div_residual: max_div,
        max_vmean_v_residual: max_vmean,
        hyp_lhs,
        assump_ceiling: p.assump_ceiling,
        assump_ok,
        zeta_final: *zeta.zeta.last().expect("nonempty zeta"),
        phi_final: *zeta.phi_radius.last().expect("nonempty phi"),
        sandwich_ok: zeta.sandwich_ok,
        zeta_nondecreasing: zeta.nondecreasing,
    };
    Ok(EpsRun {
        rows,
        snapshots,
        final_state: state,
        monitors,
        zeta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::stress_closure;
    use std::f64::consts::PI;

    fn grid1(n: usize) -> Grid {
        Grid::new(1, n, n, 2.0 * PI).unwrap()
    }

    fn params(grid: Grid, eps: f64, dt: f64, t_final: f64) -> EpsParams {
        EpsParams {
            grid,
            material: MaterialParams::new(0.5, 0.3).unwrap(),
            eps,
            s1: 2.6,
            s2: 1.6,
            radius_a: 0.1,
            lambda_tilde: 4.0,
            dt,
            t_final,
            output_every: 10,
            norm_ceiling: 1e6,
            assump_ceiling: None,
        }
    }

    fn single_mode(grid: Grid, amp: f64) -> SpectralField {
        SpectralField::from_grid_fn(grid, 1, move |_, x, y| amp * x[0].sin() * y.sin())
    }

    #[test]
    fn quiescent_velocity_gives_zero_equilibrium() {
        // every G term carries a velocity factor, so G = 0 for any stress
        let g = grid1(16);
        let m = MaterialParams::new(0.4, -0.6).unwrap();
        let u = SpectralField::zero(g, 1);
        let v = SpectralField::zero(g, 1);
        let tau = SpectralField::from_grid_fn(g, 6, |c, x, y| {
            0.3 * (c as f64 + 1.0) * (x[0] + 0.7 * c as f64).cos() * y.sin()
        });
        let gg = stress_rhs(&u, &v, &tau, &m, 0.05).unwrap();
        assert!(gg.max_abs_coeff() < 1e-14);
    }

    #[test]
    fn relaxation_decay_is_exact_and_step_count_free() {
        // with G = 0 the stress decays by e^{-T/eps} regardless of how many
        // steps cover [0, T]
        let g = grid1(8);
        let tau0 = SpectralField::from_grid_fn(g, 6, |c, x, y| {
            (0.5 + c as f64) * x[0].sin() * (2.0 * y).cos()
        });
        let zero = SpectralField::zero(g, 6);
        let (t_final, eps) = (0.2, 0.05);
        let run_steps = |n: usize| -> SpectralField {
            let mut tau = tau0.clone();
            let dt = t_final / n as f64;
            for _ in 0..n {
                relaxation_step(&mut tau, &zero, dt, eps);
            }
            tau
        };
        let a = run_steps(10);
        let b = run_steps(20);
        let mut diff = a.clone();
        diff.axpy(-1.0, &b);
        assert!(diff.max_abs_coeff() < 1e-15);
        let mut exact = tau0.clone();
        exact.scale((-t_final / eps).exp());
        let mut err = a;
        err.axpy(-1.0, &exact);
        assert!(err.max_abs_coeff() < 1e-14);
    }

    #[test]
    fn relaxation_saturates_to_equilibrium() {
        let g = grid1(8);
        let target = SpectralField::from_grid_fn(g, 6, |_, x, y| 0.2 * x[0].cos() * y.sin());
        let mut tau = SpectralField::zero(g, 6);
        relaxation_step(&mut tau, &target, 1.0, 1e-6);
        let mut diff = tau;
        diff.axpy(-1.0, &target);
        assert!(diff.max_abs_coeff() < 1e-12);
    }

    #[test]
    fn equilibrium_consistency_is_first_order_in_eps() {
        // at the closure state, G13 - tau13 = O(eps): halving eps must
        // roughly halve the gap (measured at eps and eps/10, factor ~10)
        let g = grid1(32);
        let m = MaterialParams::new(0.5, 0.3).unwrap();
        let state = initial_state(single_mode(g, 0.3), &m).unwrap();
        let gap = |eps: f64| -> f64 {
            let gg = stress_rhs(&state.u, &state.v, &state.tau, &m, eps).unwrap();
            let mut diff = gg;
            diff.axpy(-1.0, &state.tau);
            diff.max_abs_coeff()
        };
        let g1 = gap(1e-2);
        let g2 = gap(1e-3);
        let ratio = g1 / g2;
        assert!(
            ratio > 7.0 && ratio < 13.0,
            "gaps {g1:.3e}, {g2:.3e}, ratio {ratio:.2}"
        );
    }

    #[test]
    fn planar_flow_keeps_planar_stress_components() {
        // for d_h = 1 the components tau12, tau22, tau23 are invariantly
        // zero; five steps of the full solver must not excite them
        let g = grid1(16);
        let p = params(g, 0.05, 1e-3, 1.0);
        let mut state = initial_state(single_mode(g, 0.05), &p.material).unwrap();
        for _ in 0..5 {
            step(&mut state, &p).unwrap();
        }
        for c in [T12, T22, T23] {
            assert!(
                state.tau.component(c).max_abs_coeff() < 1e-14,
                "component {c} excited"
            );
        }
        assert!(state.tau.component(T13).max_abs_coeff() > 1e-6);
        assert!(state.tau.component(T33).max_abs_coeff() > 1e-10);
    }

    #[test]
    fn advection_matches_hand_computed_identity() {
        // u = c sin x sin y, v = c cos x cos y:
        // u d_x u + v d_y u = c^2 sin(2x)/2, u d_x v + v d_y v = -c^2 sin(2y)/2
        let g = grid1(32);
        let c = 0.7;
        let u = single_mode(g, c);
        let v = recover_v(&u).unwrap();
        let tau = SpectralField::zero(g, 6);
        let (fu, fv) = velocity_rhs(&u, &v, &tau, 0.1).unwrap();
        let expect_fu =
            SpectralField::from_grid_fn(g, 1, move |_, x, _| -c * c * 0.5 * (2.0 * x[0]).sin());
        let expect_fv =
            SpectralField::from_grid_fn(g, 1, move |_, _, y| c * c * 0.5 * (2.0 * y).sin());
        let mut du = fu.clone();
        du.axpy(-1.0, &expect_fu);
        let mut dv = fv.clone();
        dv.axpy(-1.0, &expect_fv);
        assert!(du.max_abs_coeff() < 1e-12, "fu residual {}", du.max_abs_coeff());
        assert!(dv.max_abs_coeff() < 1e-12, "fv residual {}", dv.max_abs_coeff());
    }

    #[test]
    fn projection_enforces_and_preserves() {
        let g = grid1(16);
        let eps = 0.07;
        // divergent tendency gets cleaned
        let mut fu = SpectralField::from_grid_fn(g, 1, |_, x, y| x[0].sin() * y.cos());
        let mut fv = SpectralField::from_grid_fn(g, 1, |_, x, y| 0.3 * x[0].cos() * y.sin());
        anisotropic_leray(&mut fu, &mut fv, eps);
        assert!(incompressibility_residual(&fu, &fv) < 1e-13);
        // solenoidal pair is untouched
        let u = single_mode(g, 0.4);
        let v = recover_v(&u).unwrap();
        let mut pu = u.clone();
        let mut pv = v.clone();
        anisotropic_leray(&mut pu, &mut pv, eps);
        let mut du = pu;
        du.axpy(-1.0, &u);
        let mut dv = pv;
        dv.axpy(-1.0, &v);
        assert!(du.max_abs_coeff() < 1e-13);
        assert!(dv.max_abs_coeff() < 1e-13);
    }

    #[test]
    fn initial_stress_matches_pointwise_closure() {
        let g = grid1(16);
        let m = MaterialParams::new(0.5, 0.3).unwrap();
        let state = initial_state(single_mode(g, 0.2), &m).unwrap();
        // q = d_y u = 0.2 sin(x) cos(y); check tau13 at a physical point
        let t13 = state.tau.component(T13).to_physical();
        let q = 0.2 * (2.0 * PI / 16.0).sin() * (2.0 * PI / 16.0).cos();
        let (want, _) = stress_closure(crate::constitutive::ShearPair::new(q, 0.0), &m);
        let got = t13[16 + 1]; // grid point (x index 1, y index 1)
        assert!((got - want).abs() < 1e-6, "got {got}, want {want}");
    }

    #[test]
    fn run_produces_rows_and_clean_monitors() {
        let g = grid1(16);
        let p = EpsParams {
            t_final: 0.05,
            dt: 1e-3,
            output_every: 10,
            ..params(g, 0.05, 1e-3, 0.05)
        };
        let out = run(single_mode(g, 0.01), &p).unwrap();
        assert_eq!(out.rows.len(), 6);
        assert_eq!(out.snapshots.len(), 6);
        assert!((out.rows[5].t - 0.05).abs() < 1e-12);
        let mon = &out.monitors;
        assert!(mon.max_div_residual < 1e-12, "div {}", mon.max_div_residual);
        assert!(mon.max_vmean_v_residual < 1e-12);
        assert!(mon.assump_ok);
        assert!(mon.zeta_nondecreasing);
        assert!(mon.hyp_lhs > 0.0 && mon.hyp_lhs.is_finite());
        // zeta starts at zero and the Phi radius starts at its ceiling
        assert_eq!(out.zeta.zeta[0], 0.0);
        assert_eq!(out.zeta.phi_radius[0], p.radius_a / 3.0);
    }
}
