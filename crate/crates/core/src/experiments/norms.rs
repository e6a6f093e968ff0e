//! Norm report of one solve plus the equicontinuity moduli of a seeded ensemble.

use rayon::prelude::*;

use super::data::{DataGenerator, DataSpec};
use crate::diagnostics::{equicontinuity_modulus, loglog_fit, norm_report};
use crate::dynamics::{solve_symmetric, Sign, SolverConfig, Truncation};
use crate::error::{LabError, Result};
use crate::report::{ExperimentReport, Rule};
use crate::spectral::{sharp_truncate, Grid};

#[derive(Debug, Clone, PartialEq)]
pub struct NormsConfig {
    pub circumference: f64,
    pub points: usize,
    pub truncation: Truncation,
    pub sign: Sign,
    pub data: DataSpec,
    pub ensemble: usize,
    /// Modulus window `[-T, T]`; the solve covers `T + max |tau|`.
    pub horizon: f64,
    pub dt: f64,
    pub radius: f64,
    pub taus: Vec<f64>,
    pub shifts: Vec<f64>,
    pub min_tau_slope: f64,
    pub min_shift_slope: f64,
    pub min_r2: f64,
}

fn dyadic(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|k| 2f64.powi(-k)).collect()
}

impl Default for NormsConfig {
    fn default() -> Self {
        NormsConfig {
            circumference: 32.0,
            points: 256,
            truncation: Truncation::TorusLowPass(4.0),
            sign: Sign::Defocusing,
            data: DataSpec::new(DataGenerator::Spread, 7).with_norm(1.0),
            ensemble: 16,
            horizon: 0.25,
            dt: 2f64.powi(-14),
            radius: 4.0,
            taus: dyadic(4, 10),
            shifts: dyadic(4, 10),
            min_tau_slope: 0.2,
            min_shift_slope: 1.0 / 3.0,
            min_r2: 0.9,
        }
    }
}

impl NormsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ensemble == 0 {
            return Err(LabError::config("norms.ensemble must be >= 1"));
        }
        if self.taus.len() < 2 || self.shifts.len() < 2 {
            return Err(LabError::config("norms.taus and norms.shifts need at least two values"));
        }
        if self.taus.iter().chain(&self.shifts).any(|v| !(*v > 0.0)) {
            return Err(LabError::config("norms.taus and norms.shifts must be positive"));
        }
        self.solver()?;
        Ok(())
    }

    fn reach(&self) -> f64 {
        self.taus.iter().cloned().fold(0.0, f64::max)
    }

    fn solver(&self) -> Result<SolverConfig> {
        let total = self.horizon + self.reach();
        let steps = (total / self.dt).round() as usize;
        // a power of two keeps dyadic windows and shifts on the sampling lattice
        let room = (self.taus.iter().cloned().fold(f64::INFINITY, f64::min) / (10.0 * self.dt)).floor().max(1.0);
        let mut stride = 1usize << (room.log2().floor() as u32);
        while !steps.is_multiple_of(stride) {
            stride /= 2;
        }
        SolverConfig::new(self.sign, self.truncation, self.dt, total)?.with_stride(stride)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemberModuli {
    pub tau_moduli: Vec<f64>,
    pub shift_moduli: Vec<f64>,
    pub tau_slope: f64,
    pub tau_r2: f64,
    pub shift_slope: f64,
    pub shift_r2: f64,
}

pub fn run_norms(cfg: &NormsConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let grid = Grid::new(cfg.circumference, cfg.points)?;
    let solver = cfg.solver()?;
    let band = cfg.truncation.cutoff().map_or(grid.max_wavenumber(), |n| 2.0 * n);
    let members: Vec<(MemberModuli, Option<crate::diagnostics::NormReport>)> = (0..cfg.ensemble)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.data.seed.wrapping_add(i as u64);
            let u0 = sharp_truncate(&cfg.data.generate_with_seed(&grid, band, seed)?, band).into_physical();
            let traj = solve_symmetric(&u0, &solver)?;
            let tau_moduli = cfg
                .taus
                .iter()
                .map(|&t| equicontinuity_modulus(&traj, t, 0.0, cfg.radius, cfg.horizon))
                .collect::<Result<Vec<_>>>()?;
            let shift_moduli = cfg
                .shifts
                .iter()
                .map(|&y| equicontinuity_modulus(&traj, 0.0, y, cfg.radius, cfg.horizon))
                .collect::<Result<Vec<_>>>()?;
            let (tau_slope, tau_r2) = loglog_fit(&cfg.taus, &tau_moduli)?;
            let (shift_slope, shift_r2) = loglog_fit(&cfg.shifts, &shift_moduli)?;
            let norms = if i == 0 { Some(norm_report(&traj, cfg.radius)?) } else { None };
            Ok((
                MemberModuli {
                    tau_moduli,
                    shift_moduli,
                    tau_slope,
                    tau_r2,
                    shift_slope,
                    shift_r2,
                },
                norms,
            ))
        })
        .collect::<Result<_>>()?;

    let mut rep = ExperimentReport::new("norms").with_seed(cfg.data.seed);
    if let Some(norms) = &members[0].1 {
        for (k, v) in &norms.values {
            rep.scalar(k, *v);
        }
    }
    rep.series("tau", cfg.taus.clone());
    rep.series("shift", cfg.shifts.clone());
    rep.series("tau_modulus.0", members[0].0.tau_moduli.clone());
    rep.series("shift_modulus.0", members[0].0.shift_moduli.clone());
    let col = |f: fn(&MemberModuli) -> f64| members.iter().map(|(m, _)| f(m)).collect::<Vec<_>>();
    let min = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min);
    let (ts, tr, ss, sr) = (
        col(|m| m.tau_slope),
        col(|m| m.tau_r2),
        col(|m| m.shift_slope),
        col(|m| m.shift_r2),
    );
    rep.scalar("min_tau_slope", min(&ts));
    rep.scalar("min_shift_slope", min(&ss));
    rep.scalar("min_r2", min(&tr).min(min(&sr)));
    rep.series("tau_slope", ts);
    rep.series("tau_r2", tr);
    rep.series("shift_slope", ss);
    rep.series("shift_r2", sr);
    rep.scalar("ensemble", cfg.ensemble as f64);
    rep.judge("tau_slope", Rule::AtLeast("min_tau_slope".into(), cfg.min_tau_slope));
    rep.judge("shift_slope", Rule::AtLeast("min_shift_slope".into(), cfg.min_shift_slope));
    rep.judge("fit_quality", Rule::AtLeast("min_r2".into(), cfg.min_r2));
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_ensemble_passes() {
        let cfg = NormsConfig {
            ensemble: 2,
            horizon: 0.0625,
            dt: 2f64.powi(-13),
            taus: dyadic(5, 8),
            shifts: dyadic(4, 8),
            ..Default::default()
        };
        let rep = run_norms(&cfg).unwrap();
        assert!(rep.all_pass(), "{:?}", rep.failing());
        for key in ["mass", "energy", "s_norm", "l6_norm", "local_smoothing_ratio", "tilde_s_norm"] {
            assert!(rep.get_scalar(key).is_some(), "{key}");
        }
        assert!((rep.get_scalar("mass").unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stride_respects_shortest_tau() {
        let cfg = NormsConfig::default();
        let s = cfg.solver().unwrap();
        assert!(s.dt * s.stride as f64 <= 2f64.powi(-10) / 10.0);
        assert_eq!(s.steps() % s.stride, 0);
    }
}
