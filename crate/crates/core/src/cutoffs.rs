//! Pigeonhole interval selection and the nested cutoff family
//! `chi^0 <= chi^1 <= ... <= chi^4` adapted to the selected interval.
//!
//! With `w = N T / eta`, interval center `c` and torus length `L`, level `j`
//! equals 1 on `[c - L + (10-2j) w, c - (10-2j) w]` and vanishes outside
//! `[c - L + (9-2j) w, c - (9-2j) w]`. Consecutive levels are separated by a
//! full transition width, so `chi^j chi^i = chi^j` holds exactly for `j < i`.

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::report::ExperimentReport;
use crate::spectral::{ComplexField, Grid, Representation};

pub use crate::spectral::smooth_step;

pub const LEVELS: usize = 5;

/// Relative slack used when counting subintervals that fit exactly.
const COUNT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSelection {
    pub circumference: f64,
    pub center: f64,
    /// `(10 / eta) N T`
    pub half_length: f64,
    /// `20 N T / eta`
    pub sub_length: f64,
    pub index: usize,
    /// Number of disjoint subintervals that fit in `[L/4, L/2]`.
    pub count: usize,
    /// `||u0 1_I||_2`; `None` when the interval was placed without data.
    pub boundary_mass: Option<f64>,
    pub n_freq: f64,
    pub horizon: f64,
    pub eta: f64,
}

impl IntervalSelection {
    /// Places the interval at an explicit center, without reference to data.
    pub fn at_center(circumference: f64, center: f64, n_freq: f64, horizon: f64, eta: f64) -> Result<Self> {
        check_params(eta, n_freq, horizon)?;
        let sub_length = 20.0 * n_freq * horizon / eta;
        let half = sub_length / 2.0;
        let tol = COUNT_SLACK * circumference;
        if center - half < circumference / 4.0 - tol || center + half > circumference / 2.0 + tol {
            return Err(LabError::config(format!(
                "interval [{}, {}] does not fit inside [L/4, L/2] = [{}, {}]",
                center - half,
                center + half,
                circumference / 4.0,
                circumference / 2.0
            )));
        }
        Ok(IntervalSelection {
            circumference,
            center,
            half_length: half,
            sub_length,
            index: 0,
            count: subinterval_count(circumference, eta, n_freq, horizon),
            boundary_mass: None,
            n_freq,
            horizon,
            eta,
        })
    }

    /// Cutoff transition width `N T / eta`.
    pub fn transition_width(&self) -> f64 {
        self.n_freq * self.horizon / self.eta
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.center - self.half_length, self.center + self.half_length)
    }
}

fn check_params(eta: f64, n_freq: f64, horizon: f64) -> Result<()> {
    for (name, v) in [("eta", eta), ("N", n_freq), ("T", horizon)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(LabError::config(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(())
}

/// Number of disjoint subintervals of length `20 N T / eta` inside `[L/4, L/2]`.
pub fn subinterval_count(circumference: f64, eta: f64, n_freq: f64, horizon: f64) -> usize {
    let len = 20.0 * n_freq * horizon / eta;
    ((circumference / 4.0) / len * (1.0 + COUNT_SLACK)).floor() as usize
}

/// Whether the torus is wide enough for the pigeonhole count `K >= 16 M^2 / eta`.
pub fn torus_admits(circumference: f64, eta: f64, n_freq: f64, horizon: f64, mass_bound: f64) -> bool {
    let need = 16.0 * mass_bound * mass_bound / eta;
    subinterval_count(circumference, eta, n_freq, horizon) as f64 >= need * (1.0 - COUNT_SLACK)
}

/// `(dx sum_{x_m in [a, b)} |u_m|^2)^{1/2}` over grid positions taken in `[-L/2, L/2)`.
pub fn windowed_norm(u: &ComplexField, a: f64, b: f64) -> f64 {
    let phys = u.to_physical();
    let g = u.grid();
    let s: f64 = phys
        .values()
        .iter()
        .enumerate()
        .filter(|(m, _)| {
            let x = g.position(*m);
            x >= a && x < b
        })
        .map(|(_, v)| v.norm_sqr())
        .sum();
    (g.dx() * s).sqrt()
}

/// First subinterval of `[L/4, L/2]` whose windowed mass is at most `eta^{1/2}/4`.
pub fn pigeonhole_interval(
    u0: &ComplexField,
    eta: f64,
    n_freq: f64,
    horizon: f64,
    mass_bound: f64,
) -> Result<IntervalSelection> {
    check_params(eta, n_freq, horizon)?;
    let norm = u0.l2_norm();
    if norm > mass_bound * (1.0 + 1e-12) {
        return Err(LabError::config(format!("data norm {norm} exceeds the mass bound {mass_bound}")));
    }
    let l = u0.grid().circumference();
    if !torus_admits(l, eta, n_freq, horizon, mass_bound) {
        return Err(LabError::config(format!(
            "torus too small for (M,eta,N,T) = ({mass_bound},{eta},{n_freq},{horizon}): \
             {} subintervals fit, need {}",
            subinterval_count(l, eta, n_freq, horizon),
            16.0 * mass_bound * mass_bound / eta
        )));
    }
    let count = subinterval_count(l, eta, n_freq, horizon);
    let sub_length = 20.0 * n_freq * horizon / eta;
    let bound = eta.sqrt() / 4.0;

    // one pass accumulating the mass of every subinterval
    let phys = u0.to_physical();
    let g = u0.grid();
    let start = l / 4.0;
    let mut masses = vec![0.0; count];
    for (m, v) in phys.values().iter().enumerate() {
        let x = g.position(m);
        if x < start {
            continue;
        }
        let i = ((x - start) / sub_length).floor() as usize;
        if i < count && x < start + (i + 1) as f64 * sub_length {
            masses[i] += v.norm_sqr();
        }
    }
    let hit = masses.iter().position(|s| (g.dx() * s).sqrt() <= bound);
    let index = hit.ok_or_else(|| {
        LabError::Invariant(format!("no subinterval with windowed norm <= {bound} among {count}"))
    })?;
    let a = start + index as f64 * sub_length;
    let sel = IntervalSelection {
        circumference: l,
        center: a + sub_length / 2.0,
        half_length: sub_length / 2.0,
        sub_length,
        index,
        count,
        boundary_mass: Some(windowed_norm(u0, a, a + sub_length)),
        n_freq,
        horizon,
        eta,
    };
    if sel.boundary_mass.unwrap_or(f64::INFINITY) > bound {
        return Err(LabError::Invariant(format!(
            "selected interval has windowed norm {:?} > {bound}",
            sel.boundary_mass
        )));
    }
    Ok(sel)
}

/// Value of `chi^level` at a point of the line.
pub fn cutoff_value(sel: &IntervalSelection, level: usize, x: f64) -> f64 {
    let w = sel.transition_width();
    let plateau = (10.0 - 2.0 * level as f64) * w;
    let c = sel.center;
    let l = sel.circumference;
    let rise_start = c - l + plateau - w;
    let fall_end = c - plateau + w;
    if x <= rise_start || x >= fall_end {
        return 0.0;
    }
    let rise = smooth_step((x - rise_start) / w);
    let fall = smooth_step((fall_end - x) / w);
    rise.min(fall)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutoffFamily {
    pub grid: Grid,
    pub level: usize,
    pub values: Vec<f64>,
    /// Closed interval on the line where the cutoff equals 1.
    pub plateau: (f64, f64),
    pub width: f64,
    /// `N T`, the scale derivative bounds are measured against.
    pub scale: f64,
}

impl CutoffFamily {
    /// A constant profile; a degenerate input for the derivative report.
    pub fn constant(grid: &Grid, value: f64, scale: f64) -> Self {
        CutoffFamily {
            grid: grid.clone(),
            level: 0,
            values: vec![value; grid.points()],
            plateau: (f64::NEG_INFINITY, f64::INFINITY),
            width: f64::INFINITY,
            scale,
        }
    }

    /// `1 - chi`
    pub fn complement(&self) -> Vec<f64> {
        self.values.iter().map(|v| 1.0 - v).collect()
    }

    pub fn apply(&self, f: &ComplexField) -> ComplexField {
        f.multiply_real(&self.values)
    }
}

fn check_level(level: usize) -> Result<()> {
    if level >= LEVELS {
        return Err(LabError::config(format!("cutoff level must be in 0..=4, got {level}")));
    }
    Ok(())
}

fn family(sel: &IntervalSelection, level: usize, grid: &Grid, values: Vec<f64>) -> Result<CutoffFamily> {
    let w = sel.transition_width();
    let p = (10.0 - 2.0 * level as f64) * w;
    let plateau = (sel.center - sel.circumference + p, sel.center - p);
    if plateau.1 <= plateau.0 || !values.contains(&1.0) {
        return Err(LabError::config(format!(
            "cutoff level {level} has an empty plateau (L={}, w={w})",
            sel.circumference
        )));
    }
    Ok(CutoffFamily {
        grid: grid.clone(),
        level,
        values,
        plateau,
        width: w,
        scale: sel.n_freq * sel.horizon,
    })
}

/// Samples `chi^level` on the torus of the selection, periodically.
pub fn build_cutoff(sel: &IntervalSelection, level: usize, grid: &Grid) -> Result<CutoffFamily> {
    check_level(level)?;
    if grid.circumference().to_bits() != sel.circumference.to_bits() {
        return Err(LabError::GridMismatch(format!(
            "cutoff built for L={} sampled on L={}",
            sel.circumference,
            grid.circumference()
        )));
    }
    let l = sel.circumference;
    let values = (0..grid.points())
        .map(|m| {
            let x = grid.position(m);
            // representative in [c - L, c)
            let x = if x < sel.center { x } else { x - l };
            cutoff_value(sel, level, x)
        })
        .collect();
    family(sel, level, grid, values)
}

/// Samples `chi^level` as a function on the line, on a wider surrogate torus
/// whose fundamental domain contains `[c - L, c]`.
pub fn build_line_cutoff(sel: &IntervalSelection, level: usize, grid: &Grid) -> Result<CutoffFamily> {
    check_level(level)?;
    let half = grid.circumference() / 2.0;
    if sel.center - sel.circumference < -half || sel.center > half {
        return Err(LabError::config(format!(
            "surrogate of length {} does not contain the window [{}, {}]",
            grid.circumference(),
            sel.center - sel.circumference,
            sel.center
        )));
    }
    let values = (0..grid.points())
        .map(|m| cutoff_value(sel, level, grid.position(m)))
        .collect();
    family(sel, level, grid, values)
}

/// `k`-th spectral derivative of real samples.
pub fn spectral_derivative(grid: &Grid, values: &[f64], k: u32) -> Vec<f64> {
    let samples = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let f = ComplexField::from_parts_unchecked(grid.clone(), samples, Representation::Physical).into_spectral();
    let mut coeffs = f.into_values();
    for (i, c) in coeffs.iter_mut().enumerate() {
        // the Nyquist mode has no real derivative
        if grid.mode(i) == -(grid.points() as i64) / 2 && k % 2 == 1 {
            *c = Complex64::new(0.0, 0.0);
            continue;
        }
        *c *= Complex64::new(0.0, grid.wavenumber(i)).powu(k);
    }
    let phys = ComplexField::from_parts_unchecked(grid.clone(), coeffs, Representation::Spectral).into_physical();
    phys.values().iter().map(|v| v.re).collect()
}

/// `max |d^k chi|` for `k = 0..=k_max`.
pub fn derivative_maxima(fam: &CutoffFamily, k_max: u32) -> Vec<f64> {
    (0..=k_max)
        .map(|k| {
            if k == 0 {
                fam.values.iter().copied().fold(0.0f64, |a, v| a.max(v.abs()))
            } else {
                spectral_derivative(&fam.grid, &fam.values, k)
                    .into_iter()
                    .fold(0.0f64, |a, v| a.max(v.abs()))
            }
        })
        .collect()
}

/// Derivative maxima of a cutoff and their scalings against `N T` and `w`.
pub fn cutoff_report(fam: &CutoffFamily, k_max: u32) -> Result<ExperimentReport> {
    if k_max > 4 {
        return Err(LabError::config(format!("k_max must be <= 4, got {k_max}")));
    }
    let maxima = derivative_maxima(fam, k_max);
    let mut rep = ExperimentReport::new("cutoff");
    rep.scalar("level", fam.level as f64);
    rep.scalar("width", fam.width);
    rep.scalar("scale", fam.scale);
    rep.series(
        "nt_scaled",
        maxima
            .iter()
            .enumerate()
            .map(|(k, m)| m * fam.scale.powi(k as i32))
            .collect(),
    );
    rep.series(
        "width_scaled",
        maxima
            .iter()
            .enumerate()
            .map(|(k, m)| if fam.width.is_finite() { m * fam.width.powi(k as i32) } else { 0.0 })
            .collect(),
    );
    rep.series("max_derivative", maxima);
    Ok(rep)
}
