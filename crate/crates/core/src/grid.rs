//! Discretization of the slab `T^{d_h} x T_y`.
//!
//! Horizontal axes have period `l_h` (so wavenumbers are integer multiples of
//! `2*pi/l_h`); the vertical axis always has period `2*pi` (integer
//! wavenumbers). Storage is row-major with the vertical index fastest.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Grid sizes and periods for a run.
///
/// `d_h` is the number of horizontal dimensions (1 or 2), `n_h` the number of
/// collocation points per horizontal axis, `n_y` the vertical count. Axis
/// sizes must be even and at least 4 so that every axis has a Nyquist mode
/// and a nonempty dealias band.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub d_h: usize,
    pub n_h: usize,
    pub n_y: usize,
    pub l_h: f64,
}

impl Grid {
    pub fn new(d_h: usize, n_h: usize, n_y: usize, l_h: f64) -> Result<Self> {
        let grid = Grid { d_h, n_h, n_y, l_h };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.d_h != 1 && self.d_h != 2 {
            problems.push(format!("d_h must be 1 or 2, got {}", self.d_h));
        }
        for (name, n) in [("n_h", self.n_h), ("n_y", self.n_y)] {
            if n < 4 || n % 2 != 0 {
                problems.push(format!("{name} must be even and >= 4, got {n}"));
            }
        }
        if !(self.l_h.is_finite() && self.l_h > 0.0) {
            problems.push(format!("l_h must be positive and finite, got {}", self.l_h));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigInvalid(problems))
        }
    }

    /// Collocation points per horizontal slice.
    pub fn n_h_total(&self) -> usize {
        self.n_h.pow(self.d_h as u32)
    }

    /// Collocation points (= modes) per component.
    pub fn n_total(&self) -> usize {
        self.n_h_total() * self.n_y
    }

    /// Number of axes, horizontal first, vertical last.
    pub fn n_axes(&self) -> usize {
        self.d_h + 1
    }

    pub fn axis_len(&self, axis: usize) -> usize {
        if axis < self.d_h {
            self.n_h
        } else {
            self.n_y
        }
    }

    /// Signed integer mode index for a storage index on an axis of length `n`.
    /// Indices `0..n/2` map to `0..n/2`, the rest wrap to negative values;
    /// `n/2` itself is the (unpaired) Nyquist mode `-n/2`.
    pub fn signed_mode(i: usize, n: usize) -> i64 {
        if i < n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    /// Storage index of the mode `-j` on an axis of length `n`.
    pub fn conj_index(i: usize, n: usize) -> usize {
        (n - i) % n
    }

    /// Fundamental horizontal wavenumber `2*pi/l_h`.
    pub fn xi_unit(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.l_h
    }

    /// Horizontal wavevector components for a flattened horizontal index.
    /// The second entry is 0 when `d_h == 1`.
    pub fn xi(&self, h: usize) -> [f64; 2] {
        let unit = self.xi_unit();
        match self.d_h {
            1 => [unit * Self::signed_mode(h, self.n_h) as f64, 0.0],
            _ => {
                let j1 = Self::signed_mode(h / self.n_h, self.n_h);
                let j2 = Self::signed_mode(h % self.n_h, self.n_h);
                [unit * j1 as f64, unit * j2 as f64]
            }
        }
    }

    /// Euclidean length of the horizontal wavevector.
    pub fn xi_abs(&self, h: usize) -> f64 {
        let [a, b] = self.xi(h);
        a.hypot(b)
    }

    /// Largest `|xi|` present on the grid (Nyquist corner).
    pub fn xi_abs_max(&self) -> f64 {
        let nyq = self.xi_unit() * (self.n_h as f64 / 2.0);
        match self.d_h {
            1 => nyq,
            _ => nyq * std::f64::consts::SQRT_2,
        }
    }

    /// Vertical integer wavenumber for a storage index.
    pub fn k_of(&self, y: usize) -> i64 {
        Self::signed_mode(y, self.n_y)
    }

    /// Flattened horizontal index from per-axis storage indices.
    pub fn h_index(&self, ih: &[usize]) -> usize {
        match self.d_h {
            1 => ih[0],
            _ => ih[0] * self.n_h + ih[1],
        }
    }

    /// Conjugate (sign-flipped) flattened horizontal index.
    pub fn h_conj(&self, h: usize) -> usize {
        match self.d_h {
            1 => Self::conj_index(h, self.n_h),
            _ => {
                let i1 = Self::conj_index(h / self.n_h, self.n_h);
                let i2 = Self::conj_index(h % self.n_h, self.n_h);
                i1 * self.n_h + i2
            }
        }
    }

    /// Largest retained |mode| on an axis under the 2/3 rule.
    pub fn dealias_band(n: usize) -> i64 {
        (n / 3) as i64
    }

    /// True when the flattened horizontal index survives dealiasing.
    pub fn h_in_band(&self, h: usize) -> bool {
        let band = Self::dealias_band(self.n_h);
        match self.d_h {
            1 => Self::signed_mode(h, self.n_h).abs() <= band,
            _ => {
                Self::signed_mode(h / self.n_h, self.n_h).abs() <= band
                    && Self::signed_mode(h % self.n_h, self.n_h).abs() <= band
            }
        }
    }

    /// True when the vertical index survives dealiasing.
    pub fn y_in_band(&self, y: usize) -> bool {
        Self::signed_mode(y, self.n_y).abs() <= Self::dealias_band(self.n_y)
    }

    /// Physical coordinates of a collocation point (x, significant up to d_h
    /// entries, then y).
    pub fn point(&self, h: usize, y: usize) -> ([f64; 2], f64) {
        let dx = self.l_h / self.n_h as f64;
        let dy = 2.0 * std::f64::consts::PI / self.n_y as f64;
        let x = match self.d_h {
            1 => [h as f64 * dx, 0.0],
            _ => [(h / self.n_h) as f64 * dx, (h % self.n_h) as f64 * dx],
        };
        (x, y as f64 * dy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signed_modes_wrap() {
        let n = 8;
        let modes: Vec<i64> = (0..n).map(|i| Grid::signed_mode(i, n)).collect();
        assert_eq!(modes, vec![0, 1, 2, 3, -4, -3, -2, -1]);
    }

    #[test]
    fn conj_index_pairs_modes() {
        let n = 8;
        for i in 0..n {
            let j = Grid::conj_index(i, n);
            assert_eq!(
                Grid::signed_mode(j, n),
                if i == n / 2 { -4 } else { -Grid::signed_mode(i, n) }
            );
        }
    }

    #[test]
    fn xi_scales_with_period() {
        let g = Grid::new(1, 8, 8, 4.0 * std::f64::consts::PI).unwrap();
        assert!((g.xi(1)[0] - 0.5).abs() < 1e-15);
        assert!((g.xi_abs_max() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn two_d_indexing_round_trips() {
        let g = Grid::new(2, 8, 4, 2.0 * std::f64::consts::PI).unwrap();
        for i1 in 0..8 {
            for i2 in 0..8 {
                let h = g.h_index(&[i1, i2]);
                let [x1, x2] = g.xi(h);
                assert_eq!(x1, Grid::signed_mode(i1, 8) as f64);
                assert_eq!(x2, Grid::signed_mode(i2, 8) as f64);
            }
        }
    }

    #[test]
    fn rejects_odd_and_small_axes() {
        assert!(Grid::new(1, 7, 8, 1.0).is_err());
        assert!(Grid::new(1, 8, 2, 1.0).is_err());
        assert!(Grid::new(3, 8, 8, 1.0).is_err());
        assert!(Grid::new(1, 8, 8, 0.0).is_err());
    }
}
