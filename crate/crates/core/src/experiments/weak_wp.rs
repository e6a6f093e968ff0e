//! Weak continuity of the flow along weakly null perturbations.
//!
//! Data `f + g_n`, with `g_n` escaping by modulation or translation, are run
//! through the equation truncated at `N_n`; the probe pairings
//! `<psi, u_n(t)>` are compared with those of the untruncated solution from `f`.

use num_complex::Complex64;

use crate::dynamics::{solve, Sign, SolverConfig, Trajectory, Truncation};
use crate::error::{LabError, Result};
use crate::report::{ExperimentReport, Rule};
use crate::spectral::{pairing, theta, ComplexField, Grid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Escape {
    /// `g_n = h e^{i k_n x}`, `k_n = 2 pi n * 8 / window`.
    Modulation,
    /// `g_n = h(x - n * window)`.
    Translation,
    /// `g_n = 0`.
    None,
}

impl Escape {
    pub fn name(self) -> &'static str {
        match self {
            Escape::Modulation => "modulation",
            Escape::Translation => "translation",
            Escape::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakWpConfig {
    /// Length of the computational torus standing in for the line.
    pub domain: f64,
    pub points: usize,
    /// Length scale of the escape.
    pub window: f64,
    pub horizon: f64,
    pub dt: f64,
    pub stride: usize,
    pub sign: Sign,
    pub nonlinear: bool,
    pub cutoffs: Vec<f64>,
    pub escape: Escape,
    pub width: f64,
    pub f_amplitude: f64,
    pub h_amplitude: f64,
    pub probe_centers: Vec<f64>,
    pub probe_radius: f64,
    /// Cutoff of the `g = 0` control run.
    pub control_cutoff: f64,
}

impl Default for WeakWpConfig {
    fn default() -> Self {
        WeakWpConfig {
            domain: 128.0,
            points: 4096,
            window: 16.0,
            horizon: 1.0,
            dt: 1e-3,
            stride: 10,
            sign: Sign::Defocusing,
            nonlinear: true,
            cutoffs: vec![4.0, 8.0, 16.0],
            escape: Escape::Modulation,
            width: 1.0,
            f_amplitude: 1.0,
            h_amplitude: 0.25,
            probe_centers: vec![-4.0, -2.0, 0.0, 2.0, 4.0],
            probe_radius: 2.0,
            control_cutoff: 1000.0,
        }
    }
}

impl WeakWpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cutoffs.is_empty() || self.probe_centers.is_empty() {
            return Err(LabError::config("weak.cutoffs and weak.probe-centers must be non-empty"));
        }
        if !(self.probe_radius > 0.0) {
            return Err(LabError::config("weak.probe-radius must be positive"));
        }
        let half = self.domain / 2.0;
        for &c in &self.probe_centers {
            if c - self.probe_radius < -half || c + self.probe_radius >= half {
                return Err(LabError::config(format!(
                    "probe support [{}, {}] leaves the grid [{}, {half})",
                    c - self.probe_radius,
                    c + self.probe_radius,
                    -half
                )));
            }
        }
        if self.escape == Escape::Translation {
            let last = self.cutoffs.len() as f64 * self.window;
            if last + 6.0 * self.width >= half {
                return Err(LabError::config(format!(
                    "translated bump at {last} does not fit in the grid [{}, {half})",
                    -half
                )));
            }
        }
        self.solver(Truncation::None)?;
        Ok(())
    }

    fn solver(&self, truncation: Truncation) -> Result<SolverConfig> {
        let cfg = SolverConfig::new(self.sign, truncation, self.dt, self.horizon)?.with_stride(self.stride)?;
        Ok(if self.nonlinear { cfg } else { cfg.linear() })
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.domain, self.points)
    }

    fn bump(&self, grid: &Grid, amplitude: f64, center: f64) -> Result<ComplexField> {
        let w = self.width;
        ComplexField::from_fn(grid, |x| Complex64::new(amplitude * (-(x - center).powi(2) / (2.0 * w * w)).exp(), 0.0))
    }

    /// The escaping perturbation `g_n`, `n >= 1`.
    pub fn escape_term(&self, grid: &Grid, n: usize) -> Result<ComplexField> {
        let n = n as f64;
        match self.escape {
            Escape::None => Ok(ComplexField::zeros(grid)),
            Escape::Translation => self.bump(grid, self.h_amplitude, n * self.window),
            Escape::Modulation => {
                let k = 2.0 * std::f64::consts::PI * n * 8.0 / self.window;
                let h = self.bump(grid, self.h_amplitude, 0.0)?;
                let pos = grid.positions();
                let values = h.values().iter().zip(&pos).map(|(v, x)| v * Complex64::from_polar(1.0, k * x)).collect();
                ComplexField::from_physical(grid.clone(), values)
            }
        }
    }

    /// `theta(1 - ((x - c)/r)^2)`, supported on `|x - c| < r`.
    pub fn probes(&self, grid: &Grid) -> Result<Vec<ComplexField>> {
        let r = self.probe_radius;
        self.probe_centers
            .iter()
            .map(|&c| ComplexField::from_fn(grid, |x| Complex64::new(theta(1.0 - ((x - c) / r).powi(2)), 0.0)))
            .collect()
    }
}

/// `max_{t, psi} |<psi, a(t)> - <psi, b(t)>|`.
pub fn pairing_discrepancy(a: &Trajectory, b: &Trajectory, probes: &[ComplexField]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(LabError::Invariant("trajectories have different snapshot counts".into()));
    }
    let mut worst: f64 = 0.0;
    for (fa, fb) in a.fields.iter().zip(&b.fields) {
        let d = fa.sub(fb)?;
        for p in probes {
            worst = worst.max(pairing(p, &d)?.norm());
        }
    }
    Ok(worst)
}

pub fn run_weak_wp(cfg: &WeakWpConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let probes = cfg.probes(&grid)?;
    let f = cfg.bump(&grid, cfg.f_amplitude, 0.0)?;
    let limit = solve(&f, &cfg.solver(Truncation::None)?)?;

    let mut rep = ExperimentReport::new("weak-wp");
    rep.note("escape", cfg.escape.name());
    for (i, &n) in cfg.cutoffs.iter().enumerate() {
        let g = cfg.escape_term(&grid, i + 1)?;
        let run = solve(&f.add(&g)?, &cfg.solver(Truncation::LowPass(n))?)?;
        rep.push("n_freq", n);
        rep.push("discrepancy", pairing_discrepancy(&run, &limit, &probes)?);
    }
    let last = *rep.get_series("discrepancy").and_then(|s| s.last()).expect("non-empty");
    rep.scalar("final_discrepancy", last);
    let control = solve(&f, &cfg.solver(Truncation::LowPass(cfg.control_cutoff))?)?;
    rep.scalar("control_discrepancy", pairing_discrepancy(&control, &limit, &probes)?);
    rep.judge("discrepancy_decreasing", Rule::Decreasing("discrepancy".into()));
    rep.judge("control_small", Rule::AtMost("control_discrepancy".into(), 1e-6));
    Ok(rep)
}
