//! Experiment harness: deterministic random data, the quantitative lemma
//! checks behind the norm calculus, the relaxation-to-limit error
//! functional, and rate fitting.

use crate::constitutive::{initial_stress, MaterialParams};
use crate::eps::{EpsParams, EpsRun, EpsSnapshot};
use crate::error::{Error, Result};
use crate::field::{product, SpectralField};
use crate::grid::Grid;
use crate::limit::{self, gauge_mean_slice, recover_v, LimitParams, LimitRun};
use crate::norms::{anisotropic_norm, magnitude_field, weight_phase, NormSpec};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

/// Band-limited random field with complex Gaussian coefficients shaped by
/// the decay `<xi>^{-(s1+2)} <k>^{-(s2+2)}` and Hermitian-symmetrized, so
/// it is real in physical space and sits compactly inside the dealiasing
/// band. Same `(grid, ncomp, seed)` always reproduces the same field: the
/// draw order is the storage order.
pub fn random_field(
    grid: Grid,
    ncomp: usize,
    s1: f64,
    s2: f64,
    amplitude: f64,
    seed: u64,
) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = SpectralField::zero(grid, ncomp);
    for c in 0..ncomp {
        for h in 0..grid.n_h_total() {
            let xi_abs = grid.xi_abs(h);
            let hx = (1.0 + xi_abs * xi_abs).sqrt();
            for y in 0..grid.n_y {
                if !grid.h_in_band(h) || !grid.y_in_band(y) {
                    continue;
                }
                let k = grid.k_of(y) as f64;
                let hk = (1.0 + k * k).sqrt();
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                let decay = hx.powf(-(s1 + 2.0)) * hk.powf(-(s2 + 2.0));
                f.set(c, h, y, amplitude * decay * Complex64::new(re, im));
            }
        }
    }
    f.hermitize();
    f
}

/// Random initial velocity for the solvers: `d_h` components, scaled by
/// `delta`, vertical-mean slice gauged so a vertical velocity exists.
pub fn initial_velocity(grid: Grid, s1: f64, s2: f64, delta: f64, seed: u64) -> SpectralField {
    let mut u = random_field(grid, grid.d_h, s1, s2, delta, seed);
    gauge_mean_slice(&mut u);
    u.dealias();
    u
}

fn mode_index(j: i64, n: usize) -> usize {
    if j >= 0 {
        j as usize
    } else {
        (j + n as i64) as usize
    }
}

fn coeff_at(f: &SpectralField, jx: &[i64], jk: i64) -> Complex64 {
    let grid = *f.grid();
    let h = match grid.d_h {
        1 => mode_index(jx[0], grid.n_h),
        _ => grid.h_index(&[mode_index(jx[0], grid.n_h), mode_index(jx[1], grid.n_h)]),
    };
    f.get(0, h, mode_index(jk, grid.n_y))
}

fn band_modes(n: usize) -> Vec<i64> {
    let k = (n / 3) as i64;
    (-k..=k).collect()
}

fn horizontal_mode_list(grid: &Grid) -> Vec<Vec<i64>> {
    let axis = band_modes(grid.n_h);
    match grid.d_h {
        1 => axis.iter().map(|&j| vec![j]).collect(),
        _ => {
            let mut out = Vec::new();
            for &j1 in &axis {
                for &j2 in &axis {
                    out.push(vec![j1, j2]);
                }
            }
            out
        }
    }
}

fn mode_xi_abs(grid: &Grid, jx: &[i64]) -> f64 {
    let unit = grid.xi_unit();
    match grid.d_h {
        1 => unit * jx[0].abs() as f64,
        _ => unit * ((jx[0] * jx[0] + jx[1] * jx[1]) as f64).sqrt(),
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProductModewiseReport {
    pub max_violation: f64,
    pub worst_lhs: f64,
    pub worst_rhs: f64,
    pub checked_modes: usize,
    pub pass: bool,
}

/// Mode-level convolution bound behind the weighted product estimate: for
/// every retained mode `m` of the dealiased product,
///
/// ```text
/// e^{Psi(m)} |(fg)^(m)| <= sum_j e^{Psi(j)} |f^(j)| e^{Psi(m-j)} |g^(m-j)|
/// ```
///
/// which rests only on the subadditivity `1 + |xi_m| <= (1+|xi_j|) +
/// (1+|xi_{m-j}|)`. Both inputs must be single-component and band-limited
/// (true by construction for `random_field`); the slack covers roundoff.
pub fn lemma_product_modewise(
    f: &SpectralField,
    g: &SpectralField,
    radius: f64,
) -> Result<ProductModewiseReport> {
    let grid = *f.grid();
    if f.ncomp() != 1 || g.ncomp() != 1 {
        return Err(Error::ShapeMismatch(
            "modewise check wants single-component fields".into(),
        ));
    }
    let fg = product(f, g)?;
    let h_modes = horizontal_mode_list(&grid);
    let y_modes = band_modes(grid.n_y);
    let weighted = |field: &SpectralField, jx: &[i64], jk: i64| -> f64 {
        let phase = weight_phase(radius, mode_xi_abs(&grid, jx));
        phase.exp() * coeff_at(field, jx, jk).norm()
    };
    let in_band = |jx: &[i64], jk: i64| -> bool {
        let kx = (grid.n_h / 3) as i64;
        let ky = (grid.n_y / 3) as i64;
        jx.iter().all(|j| j.abs() <= kx) && jk.abs() <= ky
    };
    let mut worst = f64::NEG_INFINITY;
    let mut worst_pair = (0.0, 0.0);
    let mut checked = 0usize;
    for mx in &h_modes {
        for &mk in &y_modes {
            let lhs = weighted(&fg, mx, mk);
            let mut rhs = 0.0;
            for jx in &h_modes {
                for &jk in &y_modes {
                    let rx: Vec<i64> = mx.iter().zip(jx).map(|(m, j)| m - j).collect();
                    let rk = mk - jk;
                    if !in_band(&rx, rk) {
                        continue;
                    }
                    rhs += weighted(f, jx, jk) * weighted(g, &rx, rk);
                }
            }
            let violation = lhs - rhs;
            if violation > worst {
                worst = violation;
                worst_pair = (lhs, rhs);
            }
            checked += 1;
        }
    }
    Ok(ProductModewiseReport {
        max_violation: worst,
        worst_lhs: worst_pair.0,
        worst_rhs: worst_pair.1,
        checked_modes: checked,
        pass: worst <= 1e-12,
    })
}

/// Ratio `|fg|_Psi / (|f|_Psi |g|_Psi)`; for `g` constant this collapses to
/// exactly `e^{-radius}` since the constant's norm is `|c| e^{radius}`.
pub fn lemma_product_ratio(f: &SpectralField, g: &SpectralField, spec: &NormSpec) -> Result<f64> {
    let nf = anisotropic_norm(f, spec)?;
    let ng = anisotropic_norm(g, spec)?;
    if nf == 0.0 || ng == 0.0 {
        return Err(Error::InvalidArgument(
            "product ratio needs nonzero factors".into(),
        ));
    }
    let nfg = anisotropic_norm(&product(f, g)?, spec)?;
    Ok(nfg / (nf * ng))
}

/// Ratio `|G1(w)|_Psi / |w|_Psi` for the composition with
/// `G1(m) = 1/(1 + sigma m) - 1`; tends to `sigma` as the amplitude of `w`
/// goes to zero because `G1(m) = -sigma m + O(m^2)`.
pub fn lemma_composition_ratio(w: &SpectralField, sigma: f64, spec: &NormSpec) -> Result<f64> {
    if w.ncomp() != 1 {
        return Err(Error::ShapeMismatch(
            "composition check wants a scalar field".into(),
        ));
    }
    let nw = anisotropic_norm(w, spec)?;
    if nw == 0.0 {
        return Err(Error::InvalidArgument(
            "composition ratio needs nonzero input".into(),
        ));
    }
    let phys = w.to_physical();
    let mapped: Vec<f64> = phys
        .iter()
        .map(|&m| 1.0 / (1.0 + sigma * m) - 1.0)
        .collect();
    let mut gfield = SpectralField::from_physical(*w.grid(), 1, &mapped);
    gfield.dealias();
    Ok(anisotropic_norm(&gfield, spec)? / nw)
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaReport {
    pub magnitude_norm_gap: f64,
    pub modewise: ProductModewiseReport,
    pub product_ratio: f64,
    pub product_ceiling: f64,
    pub const_ratio_gap: f64,
    pub composition_ratio: f64,
    pub composition_ceiling: f64,
    pub composition_sigma_gap: f64,
    pub pass: bool,
}

/// Runs the three norm-calculus checks on seeded random fields.
#[allow(clippy::too_many_arguments)]
pub fn lemma_suite(
    grid: Grid,
    s1: f64,
    s2: f64,
    radius: f64,
    material: &MaterialParams,
    seed: u64,
    product_ceiling: f64,
    composition_ceiling: f64,
) -> Result<LemmaReport> {
    let spec = NormSpec::new(s1, s2, radius);
    let f = random_field(grid, 1, s1, s2, 1.0, seed);
    let g = random_field(grid, 1, s1, s2, 1.0, seed.wrapping_add(1));

    // magnitude: replacing coefficients by their moduli preserves the norm
    let nf = anisotropic_norm(&f, &spec)?;
    let nm = anisotropic_norm(&magnitude_field(&f), &spec)?;
    let magnitude_norm_gap = (nf - nm).abs();

    let modewise = lemma_product_modewise(&f, &g, radius)?;
    let product_ratio = lemma_product_ratio(&f, &g, &spec)?;
    let c = SpectralField::from_grid_fn(grid, 1, |_, _, _| 2.5);
    let const_ratio_gap = (lemma_product_ratio(&f, &c, &spec)? - (-radius).exp()).abs();

    let w = random_field(grid, 1, s1, s2, 1e-4, seed.wrapping_add(2));
    let sigma = material.sigma();
    let composition_ratio = lemma_composition_ratio(&w, sigma, &spec)?;
    let composition_sigma_gap = (composition_ratio - sigma).abs();

    let pass = magnitude_norm_gap <= 1e-12
        && modewise.pass
        && product_ratio <= product_ceiling
        && const_ratio_gap <= 1e-12
        && composition_ratio <= composition_ceiling;
    Ok(LemmaReport {
        magnitude_norm_gap,
        modewise,
        product_ratio,
        product_ceiling,
        const_ratio_gap,
        composition_ratio,
        composition_ceiling,
        composition_sigma_gap,
        pass,
    })
}

/// Error floor below which a fitted rate is meaningless.
pub const ERROR_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug, Serialize)]
pub struct RateStudy {
    pub eps_values: Vec<f64>,
    pub errors: Vec<f64>,
    pub rate: f64,
    pub intercept: f64,
    pub degenerate: bool,
}

/// Least-squares slope of `ln E` against `ln eps`. Errors at or below the
/// floor mark the study degenerate (distinct trajectories were not actually
/// compared, or they coincide); no rate is reported then.
pub fn fit_rate(eps_values: &[f64], errors: &[f64]) -> Result<RateStudy> {
    if eps_values.len() != errors.len() || eps_values.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "rate fit needs matching lists of at least 2 points, got {} and {}",
            eps_values.len(),
            errors.len()
        )));
    }
    if eps_values.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidArgument(
            "rate fit needs positive eps values".into(),
        ));
    }
    if errors.iter().any(|&e| e <= ERROR_FLOOR) {
        return Ok(RateStudy {
            eps_values: eps_values.to_vec(),
            errors: errors.to_vec(),
            rate: 0.0,
            intercept: 0.0,
            degenerate: true,
        });
    }
    let xs: Vec<f64> = eps_values.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument(
            "rate fit needs at least two distinct eps values".into(),
        ));
    }
    let rate = sxy / sxx;
    Ok(RateStudy {
        eps_values: eps_values.to_vec(),
        errors: errors.to_vec(),
        rate,
        intercept: ybar - rate * xbar,
        degenerate: false,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ErrorSample {
    pub t: f64,
    pub uv_err: f64,
    pub tau_err: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EpsErrors {
    pub eps: f64,
    pub sup_uv: f64,
    pub sup_tau: f64,
    pub total: f64,
    pub samples: Vec<ErrorSample>,
}

/// Distance between a relaxation trajectory and a reduced trajectory at
/// shared snapshot times:
///
/// ```text
/// E(eps) = sup_t |e^{(a/4)<Dx>} (u_eps - u, eps (v_eps - v))|_{H^{s1-1,s2-1}}
///        + sup_t sqrt(eps) |e^{(a/2)<Dx>} (tau_eps - tau)|_{H^{s1-1,s2-1}}
/// ```
///
/// The reduced side supplies `v` by incompressibility and `tau` by the
/// stress closure, since it does not evolve them.
pub fn hydrostatic_errors(
    limit_snaps: &[(f64, SpectralField)],
    eps_snaps: &[EpsSnapshot],
    material: &MaterialParams,
    eps: f64,
    s1: f64,
    s2: f64,
    radius_a: f64,
) -> Result<EpsErrors> {
    if limit_snaps.len() != eps_snaps.len() || limit_snaps.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "snapshot lists of lengths {} and {}",
            limit_snaps.len(),
            eps_snaps.len()
        )));
    }
    let uv_spec = NormSpec::new(s1 - 1.0, s2 - 1.0, radius_a / 4.0);
    let tau_spec = NormSpec::new(s1 - 1.0, s2 - 1.0, radius_a / 2.0);
    let mut samples = Vec::with_capacity(limit_snaps.len());
    let mut sup_uv = 0.0f64;
    let mut sup_tau = 0.0f64;
    for ((tl, ul), se) in limit_snaps.iter().zip(eps_snaps) {
        if (tl - se.t).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "snapshot times differ: {tl} vs {}",
                se.t
            )));
        }
        let d = ul.grid().d_h;
        let vl = recover_v(ul)?;
        let taul = initial_stress(ul, material);
        let mut u_res = se.u.clone();
        u_res.axpy(-1.0, ul);
        let mut v_res = se.v.clone();
        v_res.axpy(-1.0, &vl);
        v_res.scale(eps);
        let mut parts: Vec<SpectralField> = Vec::new();
        for c in 0..d {
            parts.push(u_res.component(c));
        }
        parts.push(v_res);
        let refs: Vec<&SpectralField> = parts.iter().collect();
        let uv_err = anisotropic_norm(&SpectralField::stack(&refs)?, &uv_spec)?;
        let mut tau_res = se.tau.clone();
        tau_res.axpy(-1.0, &taul);
        let tau_err = eps.sqrt() * anisotropic_norm(&tau_res, &tau_spec)?;
        sup_uv = sup_uv.max(uv_err);
        sup_tau = sup_tau.max(tau_err);
        samples.push(ErrorSample {
            t: *tl,
            uv_err,
            tau_err,
        });
    }
    Ok(EpsErrors {
        eps,
        sup_uv,
        sup_tau,
        total: sup_uv + sup_tau,
        samples,
    })
}

pub struct ConvergenceOutcome {
    pub limit: LimitRun,
    pub eps_runs: Vec<EpsRun>,
    pub per_eps: Vec<EpsErrors>,
    pub rate: RateStudy,
}

/// Runs the reduced solver once and the relaxation solver per `eps`, all
/// from the same initial velocity and output cadence, then fits the decay
/// of the error functional.
pub fn convergence_study(
    u0: &SpectralField,
    limit_params: &LimitParams,
    eps_base: &EpsParams,
    eps_list: &[f64],
) -> Result<ConvergenceOutcome> {
    if eps_list.len() < 2 {
        return Err(Error::InvalidArgument(
            "convergence study needs at least two eps values".into(),
        ));
    }
    let limit_run = limit::run(u0.clone(), limit_params)?;
    let mut eps_runs = Vec::new();
    let mut per_eps = Vec::new();
    for &eps in eps_list {
        let p = EpsParams {
            eps,
            ..eps_base.clone()
        };
        let run = crate::eps::run(u0.clone(), &p)?;
        let errs = hydrostatic_errors(
            &limit_run.snapshots,
            &run.snapshots,
            &limit_params.material,
            eps,
            limit_params.s1,
            limit_params.s2,
            limit_params.radius_a,
        )?;
        eps_runs.push(run);
        per_eps.push(errs);
    }
    let errors: Vec<f64> = per_eps.iter().map(|e| e.total).collect();
    let rate = fit_rate(eps_list, &errors)?;
    Ok(ConvergenceOutcome {
        limit: limit_run,
        eps_runs,
        per_eps,
        rate,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SelfConvergence {
    pub dts: [f64; 3],
    pub dist_coarse: f64,
    pub dist_fine: f64,
    pub order: f64,
    pub degenerate: bool,
}

fn order_from_finals(
    finals: &[SpectralField; 3],
    dts: [f64; 3],
    s1: f64,
    s2: f64,
) -> Result<SelfConvergence> {
    let plain = NormSpec::plain(s1, s2);
    let dist = |a: &SpectralField, b: &SpectralField| -> Result<f64> {
        let mut d = a.clone();
        d.axpy(-1.0, b);
        anisotropic_norm(&d, &plain)
    };
    let dist_coarse = dist(&finals[0], &finals[1])?;
    let dist_fine = dist(&finals[1], &finals[2])?;
    if dist_fine <= ERROR_FLOOR {
        return Ok(SelfConvergence {
            dts,
            dist_coarse,
            dist_fine,
            order: 0.0,
            degenerate: true,
        });
    }
    Ok(SelfConvergence {
        dts,
        dist_coarse,
        dist_fine,
        order: (dist_coarse / dist_fine).log2(),
        degenerate: false,
    })
}

/// Observed order of the reduced solver from three halved step sizes: the
/// final states at `dt, dt/2, dt/4` give consecutive differences whose
/// `log2` ratio is the order (1 for this IMEX split).
pub fn self_convergence_limit(
    u0: &SpectralField,
    base: &LimitParams,
    dts: [f64; 3],
) -> Result<SelfConvergence> {
    let mut finals = Vec::new();
    for &dt in &dts {
        let p = LimitParams { dt, ..base.clone() };
        finals.push(limit::run(u0.clone(), &p)?.final_state.u);
    }
    let arr: [SpectralField; 3] = finals.try_into().map_err(|_| {
        Error::InvalidArgument("expected exactly three step sizes".into())
    })?;
    order_from_finals(&arr, dts, base.s1, base.s2)
}

/// Same study for the relaxation solver at fixed `eps`.
pub fn self_convergence_eps(
    u0: &SpectralField,
    base: &EpsParams,
    dts: [f64; 3],
) -> Result<SelfConvergence> {
    let mut finals = Vec::new();
    for &dt in &dts {
        let p = EpsParams { dt, ..base.clone() };
        finals.push(crate::eps::run(u0.clone(), &p)?.final_state.u);
    }
    let arr: [SpectralField; 3] = finals.try_into().map_err(|_| {
        Error::InvalidArgument("expected exactly three step sizes".into())
    })?;
    order_from_finals(&arr, dts, base.s1, base.s2)
}
