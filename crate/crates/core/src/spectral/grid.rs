use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{LabError, Result};

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// A uniform periodic grid on the torus `R / L Z`.
///
/// Sample `m` sits at `x_m = (m - M/2) dx`, so the fundamental domain is
/// `[-L/2, L/2)`. Spectral index `i` carries the integer mode
/// `k = i` for `i < M/2` and `k = i - M` otherwise, giving the lattice
/// `xi_k = 2 pi k / L` for `k` in `[-M/2, M/2)`.
///
/// FFT plans are shared between clones.
#[derive(Clone)]
pub struct Grid {
    circumference: f64,
    points: usize,
    plans: Arc<Plans>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("circumference", &self.circumference)
            .field("points", &self.points)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points && self.circumference.to_bits() == other.circumference.to_bits()
    }
}

impl Grid {
    pub fn new(circumference: f64, points: usize) -> Result<Self> {
        if !(circumference.is_finite() && circumference > 0.0) {
            return Err(LabError::config(format!(
                "grid.circumference must be positive and finite, got {circumference}"
            )));
        }
        if points < 8 || !points.is_power_of_two() {
            return Err(LabError::config(format!(
                "grid.points must be a power of two >= 8, got {points}"
            )));
        }
        let mut planner = FftPlanner::new();
        let plans = Plans {
            forward: planner.plan_fft_forward(points),
            inverse: planner.plan_fft_inverse(points),
        };
        Ok(Grid {
            circumference,
            points,
            plans: Arc::new(plans),
        })
    }

    pub fn circumference(&self) -> f64 {
        self.circumference
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn dx(&self) -> f64 {
        self.circumference / self.points as f64
    }

    /// Integer mode number of spectral index `i`.
    pub fn mode(&self, i: usize) -> i64 {
        let m = self.points as i64;
        let i = i as i64;
        if i < m / 2 {
            i
        } else {
            i - m
        }
    }

    pub fn wavenumber(&self, i: usize) -> f64 {
        2.0 * PI * self.mode(i) as f64 / self.circumference
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.wavenumber(i)).collect()
    }

    /// Spectral index holding integer mode `k`, if it is on the lattice.
    pub fn index_of_mode(&self, k: i64) -> Option<usize> {
        let m = self.points as i64;
        if k < -m / 2 || k >= m / 2 {
            return None;
        }
        Some(k.rem_euclid(m) as usize)
    }

    /// Largest |xi| on the lattice (the Nyquist magnitude).
    pub fn max_wavenumber(&self) -> f64 {
        PI * self.points as f64 / self.circumference
    }

    pub fn position(&self, m: usize) -> f64 {
        (m as f64 - (self.points / 2) as f64) * self.dx()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.points).map(|m| self.position(m)).collect()
    }

    /// Sample index nearest to `x`, reduced modulo the circumference.
    pub fn nearest_index(&self, x: f64) -> usize {
        let s = (x / self.dx()).round() as i64 + (self.points / 2) as i64;
        s.rem_euclid(self.points as i64) as usize
    }

    pub(crate) fn fft_forward(&self, buf: &mut [Complex64]) {
        self.plans.forward.process(buf);
        let scale = 1.0 / (self.points as f64).sqrt();
        buf.iter_mut().for_each(|v| *v *= scale);
    }

    pub(crate) fn fft_inverse(&self, buf: &mut [Complex64]) {
        self.plans.inverse.process(buf);
        let scale = 1.0 / (self.points as f64).sqrt();
        buf.iter_mut().for_each(|v| *v *= scale);
    }

    pub(crate) fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(LabError::GridMismatch(format!(
                "(L={}, M={}) vs (L={}, M={})",
                self.circumference, self.points, other.circumference, other.points
            )))
        }
    }
}

/// Convenience wrapper matching the `make_grid` operation.
pub fn make_grid(circumference: f64, points: usize) -> Result<Grid> {
    Grid::new(circumference, points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_for_two_pi_torus() {
        let g = make_grid(2.0 * PI, 8).unwrap();
        let mut ks: Vec<i64> = (0..8).map(|i| g.mode(i)).collect();
        ks.sort();
        assert_eq!(ks, vec![-4, -3, -2, -1, 0, 1, 2, 3]);
        for i in 0..8 {
            assert!((g.wavenumber(i) - g.mode(i) as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn spacing() {
        let g = make_grid(32.0, 256).unwrap();
        assert_eq!(g.dx(), 0.125);
        assert_eq!(g.position(0), -16.0);
        assert_eq!(g.position(128), 0.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(make_grid(32.0, 100), Err(LabError::Config(_))));
        assert!(matches!(make_grid(32.0, 4), Err(LabError::Config(_))));
        assert!(matches!(make_grid(0.0, 64), Err(LabError::Config(_))));
        assert!(matches!(make_grid(f64::INFINITY, 64), Err(LabError::Config(_))));
    }

    #[test]
    fn mode_index_round_trip() {
        let g = make_grid(10.0, 16).unwrap();
        for i in 0..16 {
            assert_eq!(g.index_of_mode(g.mode(i)), Some(i));
        }
        assert_eq!(g.index_of_mode(8), None);
        assert_eq!(g.nearest_index(g.position(3) + 10.0), 3);
    }
}
