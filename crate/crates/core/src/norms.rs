//! Anisotropic Sobolev norms with an analytic horizontal weight.
//!
//! The squared norm is
//! `sum <xi>^{2 s1} <k>^{2 s2} exp(2 r (1 + |xi|)) |c(xi, k)|^2`
//! over every stored mode and component, with `<z> = sqrt(1 + z^2)`.
//! At `r = 0` and `s1 = s2 = 0` this is Parseval-equal to the RMS of the
//! physical samples. The weight acts on horizontal frequencies only, so it
//! commutes with every vertical operation.

use crate::error::{Error, Result};
use crate::field::SpectralField;

/// `exp` argument cap; beyond this the weight would overflow f64 range.
pub const WEIGHT_EXP_LIMIT: f64 = 700.0;

/// Norm indices and analytic radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormSpec {
    pub s1: f64,
    pub s2: f64,
    pub radius: f64,
}

impl NormSpec {
    pub fn new(s1: f64, s2: f64, radius: f64) -> Self {
        NormSpec { s1, s2, radius }
    }

    pub fn plain(s1: f64, s2: f64) -> Self {
        NormSpec { s1, s2, radius: 0.0 }
    }

    pub fn with_radius(self, radius: f64) -> Self {
        NormSpec { radius, ..self }
    }
}

/// Japanese bracket `<z> = (1 + z^2)^{1/2}`.
#[inline]
pub fn bracket(z: f64) -> f64 {
    (1.0 + z * z).sqrt()
}

/// Phase of the analytic weight, `r (1 + |xi|)`. Subadditive in `xi` up to
/// the constant: `phase(xi) <= phase(xi - eta) + phase(eta)` for `r >= 0`,
/// which is what the mode-level product lemma leans on.
#[inline]
pub fn weight_phase(radius: f64, xi_abs: f64) -> f64 {
    radius * (1.0 + xi_abs)
}

fn guard(radius: f64, xi_abs_max: f64) -> Result<()> {
    if radius < 0.0 || !radius.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "weight radius must be finite and >= 0, got {radius}"
        )));
    }
    let exponent = weight_phase(radius, xi_abs_max);
    if exponent > WEIGHT_EXP_LIMIT {
        return Err(Error::WeightOverflow {
            radius,
            xi_max: xi_abs_max,
            exponent,
            limit: WEIGHT_EXP_LIMIT,
        });
    }
    Ok(())
}

/// The anisotropic `H^{s1, s2}` norm of all components together, with the
/// analytic weight `exp(radius (1 + |xi|))` baked in.
pub fn anisotropic_norm(field: &SpectralField, spec: &NormSpec) -> Result<f64> {
    let grid = *field.grid();
    guard(spec.radius, grid.xi_abs_max())?;

    let ky: Vec<f64> = (0..grid.n_y)
        .map(|y| bracket(grid.k_of(y) as f64).powf(2.0 * spec.s2))
        .collect();

    let mut total = 0.0f64;
    let nh = grid.n_h_total();
    for h in 0..nh {
        let xi = grid.xi_abs(h);
        let wh = bracket(xi).powf(2.0 * spec.s1) * (2.0 * weight_phase(spec.radius, xi)).exp();
        for c in 0..field.ncomp() {
            let mut slice = 0.0f64;
            for y in 0..grid.n_y {
                slice += ky[y] * field.get(c, h, y).norm_sqr();
            }
            total += wh * slice;
        }
    }
    Ok(total.sqrt())
}

/// Multiplies every mode by `exp(radius (1 + |xi|))`.
pub fn apply_weight(field: &SpectralField, radius: f64) -> Result<SpectralField> {
    let grid = *field.grid();
    guard(radius, grid.xi_abs_max())?;
    let mut out = field.clone();
    let nh = grid.n_h_total();
    for h in 0..nh {
        let w = weight_phase(radius, grid.xi_abs(h)).exp();
        for c in 0..field.ncomp() {
            for y in 0..grid.n_y {
                let i = out.idx(c, h, y);
                out.coeffs_mut()[i] *= w;
            }
        }
    }
    Ok(out)
}

/// Replaces every coefficient by its modulus. Norms that depend only on
/// moduli are unchanged; the result is again Hermitian-symmetric.
pub fn magnitude_field(field: &SpectralField) -> SpectralField {
    let mut out = field.clone();
    for c in out.coeffs_mut() {
        *c = num_complex::Complex64::new(c.norm(), 0.0);
    }
    out
}
