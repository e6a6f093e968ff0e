//! A single solve with conservation, closed-form and Duhamel checks.

use num_complex::Complex64;

use super::data::{DataGenerator, DataSpec};
use crate::diagnostics::energy;
use crate::dynamics::{duhamel_residual, solve, solve_symmetric, Sign, SolverConfig, Trajectory, Truncation};
use crate::error::Result;
use crate::report::{ExperimentReport, Rule};
use crate::spectral::{ComplexField, Grid, MultiplierSymbol};

#[derive(Debug, Clone, PartialEq)]
pub struct SolveTolerances {
    /// `None`: `1e-12` untruncated, `1e-8` truncated.
    pub mass_drift: Option<f64>,
    pub energy_drift: f64,
    /// `None`: `1e-10` for plane waves, `1e-5` for the soliton.
    pub closed_form: Option<f64>,
    pub duhamel: f64,
    /// Fewest snapshots for which the Duhamel residual is judged.
    pub duhamel_snapshots: usize,
}

impl Default for SolveTolerances {
    fn default() -> Self {
        SolveTolerances {
            mass_drift: None,
            energy_drift: 1e-6,
            closed_form: None,
            duhamel: 1e-6,
            duhamel_snapshots: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub circumference: f64,
    pub points: usize,
    pub solver: SolverConfig,
    pub data: DataSpec,
    /// Spectral band of random data; `None` uses `2N`, or the grid limit untruncated.
    pub band: Option<f64>,
    pub symmetric: bool,
    pub tolerances: SolveTolerances,
}

impl SolveConfig {
    pub fn new(circumference: f64, points: usize, solver: SolverConfig, data: DataSpec) -> Self {
        SolveConfig {
            circumference,
            points,
            solver,
            data,
            band: None,
            symmetric: false,
            tolerances: SolveTolerances::default(),
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.circumference, self.points)
    }

    pub fn data_band(&self, grid: &Grid) -> f64 {
        self.band
            .or(self.solver.truncation.cutoff().map(|n| 2.0 * n))
            .unwrap_or_else(|| grid.max_wavenumber())
    }
}

/// Exact solution when one is known: a plane wave under any truncation, or
/// the focusing soliton without truncation.
pub fn closed_form(cfg: &SolveConfig, grid: &Grid, t: f64) -> Result<Option<ComplexField>> {
    let s = &cfg.solver;
    match cfg.data.generator {
        DataGenerator::PlaneWave { xi } if cfg.data.norm.is_none() => {
            let k = (xi * grid.circumference() / (2.0 * std::f64::consts::PI)).round();
            let kx = 2.0 * std::f64::consts::PI * k / grid.circumference();
            let p = s
                .truncation
                .cutoff()
                .map_or(1.0, |n| MultiplierSymbol::LowPass { cutoff: n }.eval(kx).re);
            let a = cfg.data.amplitude;
            let omega = kx * kx + s.coupling() * p.powi(4) * a * a;
            ComplexField::from_fn(grid, |x| Complex64::from_polar(a, kx * x - omega * t)).map(Some)
        }
        DataGenerator::Soliton { center }
            if s.sign == Sign::Focusing
                && s.truncation == Truncation::None
                && s.nonlinear
                && cfg.data.norm.is_none()
                && cfg.data.amplitude == 1.0 =>
        {
            ComplexField::from_fn(grid, |x| Complex64::from_polar(2f64.sqrt() / (x - center).cosh(), t)).map(Some)
        }
        _ => Ok(None),
    }
}

pub fn run_solve(cfg: &SolveConfig) -> Result<(Trajectory, ExperimentReport)> {
    let grid = cfg.grid()?;
    let u0 = cfg.data.generate(&grid, cfg.data_band(&grid))?;
    let traj = if cfg.symmetric {
        solve_symmetric(&u0, &cfg.solver)?
    } else {
        solve(&u0, &cfg.solver)?
    };
    let mut rep = ExperimentReport::new("solve");
    if cfg.data.generator.is_random() {
        rep = rep.with_seed(cfg.data.seed);
    }
    rep.note("generator", cfg.data.generator.name());
    rep.scalar("snapshots", traj.len() as f64);
    rep.scalar("mass", traj.fields[0].mass());
    rep.scalar("mass_drift", traj.mass_drift);
    let e0 = energy(&traj.fields[0], &cfg.solver);
    let energy_drift = traj
        .fields
        .iter()
        .map(|f| (energy(f, &cfg.solver) - e0).abs() / e0.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    rep.scalar("energy", e0);
    rep.scalar("energy_drift", energy_drift);
    rep.series("mass_series", traj.fields.iter().map(|f| f.mass()).collect());

    let tol = &cfg.tolerances;
    let mass_tol = tol.mass_drift.unwrap_or(match cfg.solver.truncation {
        Truncation::None => 1e-12,
        _ => 1e-8,
    });
    rep.judge("mass_conserved", Rule::AtMost("mass_drift".into(), mass_tol));
    rep.judge("energy_conserved", Rule::AtMost("energy_drift".into(), tol.energy_drift));

    let t_end = traj.end_time();
    if let Some(exact) = closed_form(cfg, &grid, t_end)? {
        let last = traj.fields.last().expect("non-empty");
        let err = last.sub(&exact)?.l2_norm() / exact.l2_norm();
        rep.scalar("closed_form_error", err);
        let default = match cfg.data.generator {
            DataGenerator::PlaneWave { .. } => 1e-10,
            _ => 1e-5,
        };
        rep.judge("closed_form", Rule::AtMost("closed_form_error".into(), tol.closed_form.unwrap_or(default)));
    }
    if traj.len() >= tol.duhamel_snapshots.max(3) {
        rep.scalar("duhamel_residual", duhamel_residual(&traj)?);
        rep.judge("duhamel", Rule::AtMost("duhamel_residual".into(), tol.duhamel));
    }
    Ok((traj, rep))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncated_plane_wave_phase_includes_the_multiplier() {
        let solver = SolverConfig::new(Sign::Defocusing, Truncation::LowPass(2.0), 1e-3, 0.2).unwrap();
        let data = DataSpec::new(DataGenerator::PlaneWave { xi: 2.0 * std::f64::consts::PI * 6.0 / 16.0 }, 0)
            .with_amplitude(0.5);
        let (_, rep) = run_solve(&SolveConfig::new(16.0, 64, solver, data)).unwrap();
        assert!(rep.get_scalar("closed_form_error").unwrap() < 1e-12);
        assert!(rep.all_pass(), "{:?}", rep.failing());
    }

    #[test]
    fn closed_form_absent_for_general_data() {
        let solver = SolverConfig::new(Sign::Focusing, Truncation::None, 1e-2, 0.1).unwrap();
        let data = DataSpec::new(DataGenerator::Gaussian { width: 1.0, center: 0.0 }, 0);
        let (_, rep) = run_solve(&SolveConfig::new(32.0, 128, solver, data)).unwrap();
        assert!(rep.get_scalar("closed_form_error").is_none());
        assert!(rep.verdicts.contains_key("mass_conserved"));
    }
}
