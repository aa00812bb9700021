//! Multi-component fields stored as Fourier mode amplitudes.
//!
//! The forward transform is normalized by `1/(n_h^{d_h} * n_y)` so a stored
//! coefficient is literally the amplitude of `exp(i(xi.x + k y))`; a constant
//! field has its value in the `(0, 0)` mode and `sin(y)` carries `-i/2, +i/2`
//! at `k = +1, -1`. Real-valued fields therefore satisfy the Hermitian
//! symmetry `c(-xi, -k) = conj(c(xi, k))`, and every operation here preserves
//! that invariant.

use crate::error::{Error, Result};
use crate::grid::Grid;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::sync::Arc;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Which axis an operation acts along.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    /// Horizontal axis 0 or 1 (1 only exists when `d_h == 2`).
    X(usize),
    Y,
}

impl Axis {
    fn position(self, grid: &Grid) -> usize {
        match self {
            Axis::X(a) => {
                assert!(a < grid.d_h, "horizontal axis {a} out of range");
                a
            }
            Axis::Y => grid.d_h,
        }
    }
}

/// A `ncomp`-component field in spectral representation.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Grid,
    ncomp: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zero(grid: Grid, ncomp: usize) -> Self {
        SpectralField {
            grid,
            ncomp,
            coeffs: vec![Complex64::new(0.0, 0.0); ncomp * grid.n_total()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    #[inline]
    pub fn idx(&self, comp: usize, h: usize, y: usize) -> usize {
        (comp * self.grid.n_h_total() + h) * self.grid.n_y + y
    }

    #[inline]
    pub fn get(&self, comp: usize, h: usize, y: usize) -> Complex64 {
        self.coeffs[self.idx(comp, h, y)]
    }

    #[inline]
    pub fn set(&mut self, comp: usize, h: usize, y: usize, value: Complex64) {
        let i = self.idx(comp, h, y);
        self.coeffs[i] = value;
    }

    /// Builds a field by sampling `f(comp, x, y)` at the collocation points.
    pub fn from_grid_fn(grid: Grid, ncomp: usize, f: impl Fn(usize, [f64; 2], f64) -> f64) -> Self {
        let nh = grid.n_h_total();
        let ny = grid.n_y;
        let mut values = vec![0.0; ncomp * nh * ny];
        for c in 0..ncomp {
            for h in 0..nh {
                for y in 0..ny {
                    let (x, yy) = grid.point(h, y);
                    values[(c * nh + h) * ny + y] = f(c, x, yy);
                }
            }
        }
        Self::from_physical(grid, ncomp, &values)
    }

    /// Forward transform of real samples laid out `[comp][h][y]`.
    pub fn from_physical(grid: Grid, ncomp: usize, values: &[f64]) -> Self {
        assert_eq!(values.len(), ncomp * grid.n_total(), "sample count mismatch");
        let mut field = SpectralField {
            grid,
            ncomp,
            coeffs: values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        };
        field.fft_all(false);
        let scale = 1.0 / grid.n_total() as f64;
        for c in field.coeffs.iter_mut() {
            *c *= scale;
        }
        field
    }

    /// Inverse transform; returns the real parts of the collocation values.
    /// For Hermitian-symmetric coefficients the imaginary parts are roundoff.
    pub fn to_physical(&self) -> Vec<f64> {
        let mut work = self.clone();
        work.fft_all(true);
        work.coeffs.iter().map(|c| c.re).collect()
    }

    fn fft_all(&mut self, inverse: bool) {
        for axis in 0..self.grid.n_axes() {
            self.fft_axis(axis, inverse);
        }
    }

    /// Runs length-`n` FFTs along one axis, gathering strided lines.
    fn fft_axis(&mut self, axis: usize, inverse: bool) {
        let grid = self.grid;
        let n = grid.axis_len(axis);
        let fft = plan(n, inverse);
        let mut line = vec![Complex64::new(0.0, 0.0); n];

        // Strides for [comp][axis0][axis1?][y], y fastest.
        let n_axes = grid.n_axes();
        let mut strides = vec![1usize; n_axes];
        for a in (0..n_axes - 1).rev() {
            strides[a] = strides[a + 1] * grid.axis_len(a + 1);
        }
        let stride = strides[axis];
        let per_comp = grid.n_total();

        for c in 0..self.ncomp {
            let base_c = c * per_comp;
            // Enumerate all lines: every index with a zero along `axis`.
            let outer: Vec<usize> = (0..n_axes).filter(|&a| a != axis).collect();
            let mut counters = vec![0usize; outer.len()];
            loop {
                let mut base = base_c;
                for (ci, &a) in outer.iter().enumerate() {
                    base += counters[ci] * strides[a];
                }
                for i in 0..n {
                    line[i] = self.coeffs[base + i * stride];
                }
                fft.process(&mut line);
                for i in 0..n {
                    self.coeffs[base + i * stride] = line[i];
                }
                // Advance the odometer over the non-transformed axes.
                let mut done = true;
                for ci in (0..outer.len()).rev() {
                    counters[ci] += 1;
                    if counters[ci] < grid.axis_len(outer[ci]) {
                        done = false;
                        break;
                    }
                    counters[ci] = 0;
                }
                if done {
                    break;
                }
            }
        }
    }

    /// Spectral derivative: multiplies each mode by `(i w)^order` where `w`
    /// is the wavenumber along `axis`. For odd orders the unpaired Nyquist
    /// mode is zeroed, which keeps the result Hermitian; dealiased fields
    /// never populate it anyway.
    pub fn derivative(&self, axis: Axis, order: u32) -> Self {
        let grid = self.grid;
        let pos = axis.position(&grid);
        let n = grid.axis_len(pos);
        let unit = if pos < grid.d_h { grid.xi_unit() } else { 1.0 };
        let factors: Vec<Complex64> = (0..n)
            .map(|i| {
                let j = Grid::signed_mode(i, n);
                if order % 2 == 1 && j == -((n / 2) as i64) {
                    return Complex64::new(0.0, 0.0);
                }
                Complex64::new(0.0, unit * j as f64).powu(order)
            })
            .collect();

        let mut out = self.clone();
        let nh = grid.n_h_total();
        for c in 0..self.ncomp {
            for h in 0..nh {
                for y in 0..grid.n_y {
                    let i = match axis {
                        Axis::Y => y,
                        Axis::X(0) => {
                            if grid.d_h == 1 {
                                h
                            } else {
                                h / grid.n_h
                            }
                        }
                        Axis::X(_) => h % grid.n_h,
                    };
                    let idx = out.idx(c, h, y);
                    out.coeffs[idx] *= factors[i];
                }
            }
        }
        out
    }

    /// 2/3-rule dealiasing: zeroes every mode with `|j| > floor(n/3)` on any
    /// axis (this always includes the Nyquist mode). Idempotent.
    pub fn dealias(&mut self) {
        let grid = self.grid;
        let band_y = Grid::dealias_band(grid.n_y);
        let nh = grid.n_h_total();
        for c in 0..self.ncomp {
            for h in 0..nh {
                let keep_h = grid.h_in_band(h);
                for y in 0..grid.n_y {
                    if !keep_h || grid.k_of(y).abs() > band_y {
                        let i = self.idx(c, h, y);
                        self.coeffs[i] = Complex64::new(0.0, 0.0);
                    }
                }
            }
        }
    }

    pub fn dealiased(mut self) -> Self {
        self.dealias();
        self
    }

    /// Projects onto the Hermitian-symmetric part (real physical fields),
    /// averaging each mode with the conjugate of its sign-flipped partner.
    pub fn hermitize(&mut self) {
        let grid = self.grid;
        let nh = grid.n_h_total();
        for c in 0..self.ncomp {
            for h in 0..nh {
                let hc = grid.h_conj(h);
                for y in 0..grid.n_y {
                    let yc = Grid::conj_index(y, grid.n_y);
                    let i = self.idx(c, h, y);
                    let j = self.idx(c, hc, yc);
                    if i > j {
                        continue;
                    }
                    let a = self.coeffs[i];
                    let b = self.coeffs[j].conj();
                    let avg = 0.5 * (a + b);
                    self.coeffs[i] = avg;
                    self.coeffs[j] = avg.conj();
                }
            }
        }
    }

    /// Max deviation from Hermitian symmetry (diagnostic; 0 for real fields).
    pub fn hermitian_residual(&self) -> f64 {
        let grid = self.grid;
        let nh = grid.n_h_total();
        let mut worst = 0.0f64;
        for c in 0..self.ncomp {
            for h in 0..nh {
                let hc = grid.h_conj(h);
                for y in 0..grid.n_y {
                    let yc = Grid::conj_index(y, grid.n_y);
                    let d = (self.get(c, h, y) - self.get(c, hc, yc).conj()).norm();
                    worst = worst.max(d);
                }
            }
        }
        worst
    }

    /// Vertical mean `<f>(x) = (1/2pi) \int f dy`, i.e. the `k = 0` slice.
    pub fn vertical_mean(&self) -> HorizontalField {
        let grid = self.grid;
        let nh = grid.n_h_total();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); self.ncomp * nh];
        for c in 0..self.ncomp {
            for h in 0..nh {
                coeffs[c * nh + h] = self.get(c, h, 0);
            }
        }
        HorizontalField {
            grid,
            ncomp: self.ncomp,
            coeffs,
        }
    }

    /// Zeroes the `k = 0` slice, removing the vertical mean exactly.
    pub fn remove_vertical_mean(&mut self) {
        let nh = self.grid.n_h_total();
        for c in 0..self.ncomp {
            for h in 0..nh {
                let i = self.idx(c, h, 0);
                self.coeffs[i] = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Largest coefficient modulus in the `k = 0` slice.
    pub fn vertical_mean_residual(&self) -> f64 {
        let nh = self.grid.n_h_total();
        let mut worst = 0.0f64;
        for c in 0..self.ncomp {
            for h in 0..nh {
                worst = worst.max(self.get(c, h, 0).norm());
            }
        }
        worst
    }

    /// Extracts one component as a standalone field.
    pub fn component(&self, comp: usize) -> SpectralField {
        assert!(comp < self.ncomp);
        let n = self.grid.n_total();
        SpectralField {
            grid: self.grid,
            ncomp: 1,
            coeffs: self.coeffs[comp * n..(comp + 1) * n].to_vec(),
        }
    }

    /// Stacks single- or multi-component fields into one field (for norms of
    /// vector quantities). All inputs must share the grid.
    pub fn stack(parts: &[&SpectralField]) -> Result<SpectralField> {
        let grid = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("stack of zero fields".into()))?
            .grid;
        let mut coeffs = Vec::new();
        let mut ncomp = 0;
        for p in parts {
            if p.grid != grid {
                return Err(Error::ShapeMismatch("stack over mixed grids".into()));
            }
            coeffs.extend_from_slice(&p.coeffs);
            ncomp += p.ncomp;
        }
        Ok(SpectralField { grid, ncomp, coeffs })
    }

    pub fn scale(&mut self, s: f64) {
        for c in self.coeffs.iter_mut() {
            *c *= s;
        }
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.scale(s);
        self
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &SpectralField) {
        assert_eq!(self.coeffs.len(), other.coeffs.len(), "axpy shape mismatch");
        for (a, b) in self.coeffs.iter_mut().zip(other.coeffs.iter()) {
            *a += s * b;
        }
    }

    pub fn add(&self, other: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Plain `l^2` of the coefficients; by Parseval this equals the RMS of
    /// the physical samples.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Dealiased pointwise product of two single-component fields.
pub fn product(a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
    if a.grid != b.grid {
        return Err(Error::ShapeMismatch("product over mixed grids".into()));
    }
    if a.ncomp != 1 || b.ncomp != 1 {
        return Err(Error::InvalidArgument("product expects single components".into()));
    }
    let pa = a.to_physical();
    let pb = b.to_physical();
    let prod: Vec<f64> = pa.iter().zip(pb.iter()).map(|(x, y)| x * y).collect();
    Ok(SpectralField::from_physical(a.grid, 1, &prod).dealiased())
}

/// A horizontal-only field (one value per horizontal mode), used for the
/// vertical mean and the limit pressure.
#[derive(Clone, Debug)]
pub struct HorizontalField {
    grid: Grid,
    ncomp: usize,
    coeffs: Vec<Complex64>,
}

impl HorizontalField {
    pub fn zero(grid: Grid, ncomp: usize) -> Self {
        HorizontalField {
            grid,
            ncomp,
            coeffs: vec![Complex64::new(0.0, 0.0); ncomp * grid.n_h_total()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    #[inline]
    pub fn get(&self, comp: usize, h: usize) -> Complex64 {
        self.coeffs[comp * self.grid.n_h_total() + h]
    }

    #[inline]
    pub fn set(&mut self, comp: usize, h: usize, value: Complex64) {
        let i = comp * self.grid.n_h_total() + h;
        self.coeffs[i] = value;
    }

    /// Derivative along horizontal axis `a`.
    pub fn gradient_axis(&self, a: usize) -> HorizontalField {
        let mut out = self.clone();
        let nh = self.grid.n_h_total();
        for c in 0..self.ncomp {
            for h in 0..nh {
                let xi = self.grid.xi(h)[a];
                let i = c * nh + h;
                out.coeffs[i] *= Complex64::new(0.0, xi);
            }
        }
        out
    }

    /// Embeds as a y-independent `SpectralField` (all mass in `k = 0`).
    pub fn to_full(&self) -> SpectralField {
        let mut out = SpectralField::zero(self.grid, self.ncomp);
        let nh = self.grid.n_h_total();
        for c in 0..self.ncomp {
            for h in 0..nh {
                out.set(c, h, 0, self.coeffs[c * nh + h]);
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()))
    }
}
