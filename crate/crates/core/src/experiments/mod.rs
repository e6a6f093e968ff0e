//! Numerical experiments over dyadic schedules, each producing an
//! [`ExperimentReport`](crate::report::ExperimentReport) whose verdicts are
//! rules over the recorded numbers.

pub mod approximation;
pub mod data;
pub mod lp;
pub mod norms;
pub mod perturbation;
pub mod pigeonhole;
pub mod solve;
pub mod weak_wp;
pub mod witness;

pub use approximation::{run_approximation, run_mass_localization, ApproxConfig};
pub use data::{DataGenerator, DataSpec};
pub use lp::{run_lp_estimates, LpConfig};
pub use norms::{run_norms, NormsConfig};
pub use perturbation::{run_perturbation, PerturbConfig};
pub use pigeonhole::{run_pigeonhole, PigeonholeConfig};
pub use solve::{run_solve, SolveConfig, SolveTolerances};
pub use weak_wp::{run_weak_wp, Escape, WeakWpConfig};
pub use witness::{run_witness_search, OptimizerConfig, WitnessConfig, WitnessProblem};

use crate::cutoffs::torus_admits;
use crate::error::{LabError, Result};
use crate::spectral::Grid;

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleEntry {
    pub n: usize,
    pub n_freq: f64,
    pub circumference: f64,
    pub eta: f64,
    /// Line surrogate length in units of `circumference`.
    pub kappa: usize,
    /// Torus grid points.
    pub points: usize,
}

impl ScheduleEntry {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.circumference, self.points)
    }

    pub fn line_grid(&self) -> Result<Grid> {
        Grid::new(self.kappa as f64 * self.circumference, self.kappa * self.points)
    }
}

fn entry(n: usize, n_freq: f64, circumference: f64, eta: f64, kappa: usize, points: usize) -> ScheduleEntry {
    ScheduleEntry {
        n,
        n_freq,
        circumference,
        eta,
        kappa,
        points,
    }
}

/// `(N, L, eta) = (2, 2048, 1/2), (4, 8192, 1/4), (8, 32768, 1/8)` with
/// `dx = 1/4, 1/8, 1/16`.
pub fn default_schedule() -> Vec<ScheduleEntry> {
    vec![
        entry(1, 2.0, 2048.0, 0.5, 4, 8192),
        entry(2, 4.0, 8192.0, 0.25, 4, 65536),
        entry(3, 8.0, 32768.0, 0.125, 4, 524_288),
    ]
}

/// Smaller tori for operator norms, so the torus mode space stays within 4096.
pub fn default_lp_schedule() -> Vec<ScheduleEntry> {
    vec![
        entry(1, 1.0, 64.0, 0.5, 4, 128),
        entry(2, 2.0, 256.0, 0.25, 4, 1024),
        entry(3, 4.0, 1024.0, 0.125, 4, 4096),
    ]
}

/// Builds entries from parallel lists.
pub fn schedule_from_lists(
    n_freq: &[f64],
    circumference: &[f64],
    eta: &[f64],
    points: &[f64],
    kappa: usize,
) -> Result<Vec<ScheduleEntry>> {
    let len = n_freq.len();
    if len == 0 || circumference.len() != len || eta.len() != len || points.len() != len {
        return Err(LabError::config(format!(
            "schedule lists must be non-empty and of equal length (got {}, {}, {}, {})",
            n_freq.len(),
            circumference.len(),
            eta.len(),
            points.len()
        )));
    }
    (0..len)
        .map(|i| {
            let p = points[i];
            if p < 1.0 || p.fract() != 0.0 {
                return Err(LabError::config(format!("schedule.points must be integers, got {p}")));
            }
            Ok(entry(i + 1, n_freq[i], circumference[i], eta[i], kappa, p as usize))
        })
        .collect()
}

/// Structural checks shared by every schedule: monotone `N` and `eta`,
/// power-of-two grids, `kappa >= 4`, and a grid resolving `|xi| <= min_xi_factor * N`.
pub fn validate_schedule(schedule: &[ScheduleEntry], min_xi_factor: f64) -> Result<()> {
    if schedule.is_empty() {
        return Err(LabError::config("schedule is empty"));
    }
    for (i, e) in schedule.iter().enumerate() {
        if !(e.n_freq > 0.0 && e.circumference > 0.0 && e.eta > 0.0 && e.eta < 1.0) {
            return Err(LabError::config(format!(
                "schedule entry {}: need N > 0, L > 0 and 0 < eta < 1",
                e.n
            )));
        }
        if e.kappa < 4 {
            return Err(LabError::config(format!("schedule.kappa must be >= 4, got {}", e.kappa)));
        }
        if !e.points.is_power_of_two() {
            return Err(LabError::config(format!(
                "schedule.points must be a power of two, got {}",
                e.points
            )));
        }
        let xi_max = std::f64::consts::PI * e.points as f64 / e.circumference;
        if xi_max <= min_xi_factor * e.n_freq {
            return Err(LabError::config(format!(
                "schedule entry {}: grid resolves |xi| < {xi_max:.3}, need more than {min_xi_factor} N = {}",
                e.n,
                min_xi_factor * e.n_freq
            )));
        }
        if i > 0 {
            let p = &schedule[i - 1];
            if e.n_freq <= p.n_freq {
                return Err(LabError::config("schedule N must be strictly increasing"));
            }
            if e.eta >= p.eta {
                return Err(LabError::config("schedule eta must be strictly decreasing"));
            }
        }
    }
    Ok(())
}

/// The pigeonhole count guard `K >= 16 M^2 / eta` on every entry.
pub fn check_width_guard(schedule: &[ScheduleEntry], mass_bound: f64, horizon: f64) -> Result<()> {
    for e in schedule {
        if !torus_admits(e.circumference, e.eta, e.n_freq, horizon, mass_bound) {
            return Err(LabError::config(format!(
                "schedule entry {}: torus too small for (M={mass_bound}, eta={}, N={}, T={horizon}); \
                 need (L/4) / (20 N T / eta) >= 16 M^2 / eta",
                e.n, e.eta, e.n_freq
            )));
        }
    }
    Ok(())
}

/// Runs a parsed job; `solve` also returns its trajectory.
pub fn run_job(job: &crate::io::Job) -> Result<(crate::report::ExperimentReport, Option<crate::dynamics::Trajectory>)> {
    use crate::io::Job;
    Ok(match job {
        Job::Solve(c) => {
            let (traj, rep) = run_solve(c)?;
            (rep, Some(traj))
        }
        Job::Approx(c) => (run_approximation(c)?, None),
        Job::MassLoc(c) => (run_mass_localization(c)?, None),
        Job::WeakWp(c) => (run_weak_wp(c)?, None),
        Job::Perturb(c) => (run_perturbation(c)?, None),
        Job::LpCheck(c) => (run_lp_estimates(c)?, None),
        Job::Pigeonhole(c) => (run_pigeonhole(c)?, None),
        Job::Witness(c) => (run_witness_search(c)?, None),
        Job::Norms(c) => (run_norms(c)?, None),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schedules_are_valid() {
        let s = default_schedule();
        validate_schedule(&s, 4.0).unwrap();
        check_width_guard(&s, 1.0, 0.05).unwrap();
        assert!(check_width_guard(&s, 1.0, 0.06).is_err());
        validate_schedule(&default_lp_schedule(), 2.0).unwrap();
    }

    #[test]
    fn schedule_structure_errors() {
        let mut s = default_schedule();
        s[1].n_freq = 1.0;
        assert!(validate_schedule(&s, 4.0).is_err());
        let mut s = default_schedule();
        s[2].points = 100;
        assert!(validate_schedule(&s, 4.0).is_err());
        let mut s = default_schedule();
        s[0].kappa = 2;
        assert!(validate_schedule(&s, 4.0).is_err());
        assert!(schedule_from_lists(&[1.0], &[2.0, 3.0], &[0.5], &[8.0], 4).is_err());
    }
}
