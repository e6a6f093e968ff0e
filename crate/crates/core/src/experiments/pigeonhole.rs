//! Repeated pigeonhole selection on seeded data, each result re-verified by
//! an independent windowed sum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::data::{DataGenerator, DataSpec};
use crate::cutoffs::{pigeonhole_interval, torus_admits};
use crate::error::{LabError, Result};
use crate::report::{ExperimentReport, Rule};
use crate::spectral::{sharp_truncate, ComplexField, Grid};

#[derive(Debug, Clone, PartialEq)]
pub struct PigeonholeConfig {
    pub trials: usize,
    pub circumference: f64,
    pub points: usize,
    pub n_freq: f64,
    pub eta: f64,
    pub horizon: f64,
    pub mass_bound: f64,
    pub seed: u64,
}

impl Default for PigeonholeConfig {
    fn default() -> Self {
        PigeonholeConfig {
            trials: 100,
            circumference: 2048.0,
            points: 8192,
            n_freq: 2.0,
            eta: 0.5,
            horizon: 0.05,
            mass_bound: 1.0,
            seed: 7,
        }
    }
}

impl PigeonholeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(LabError::config("pigeonhole.trials must be >= 1"));
        }
        if !torus_admits(self.circumference, self.eta, self.n_freq, self.horizon, self.mass_bound) {
            return Err(LabError::config(format!(
                "torus too small for (M={}, eta={}, N={}, T={})",
                self.mass_bound, self.eta, self.n_freq, self.horizon
            )));
        }
        Ok(())
    }
}

/// Trial `i` cycles through spread data, data localized at the origin, and
/// data localized at a random point of `[L/4, L/2]`, the adversarial case.
fn trial_data(cfg: &PigeonholeConfig, grid: &Grid, i: usize) -> Result<ComplexField> {
    let seed = cfg.seed.wrapping_add(i as u64);
    let band = 2.0 * cfg.n_freq;
    let l = cfg.circumference;
    let generator = match i % 3 {
        0 => DataGenerator::Spread,
        1 => DataGenerator::Localized {
            scale: 4.0,
            center: 0.0,
            period: 32.0,
        },
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
            DataGenerator::Localized {
                scale: 2.0,
                center: rng.random_range(l / 4.0..l / 2.0),
                period: 16.0,
            }
        }
    };
    let u = DataSpec::new(generator, seed).with_norm(cfg.mass_bound).generate(grid, band)?;
    Ok(sharp_truncate(&u, band).into_physical())
}

/// `(dx sum_{a <= x_m < b} |u_m|^2)^{1/2}` by direct index arithmetic.
fn interval_norm(u: &ComplexField, a: f64, b: f64) -> f64 {
    let g = u.grid();
    let dx = g.dx();
    let half = g.points() as f64 / 2.0;
    let first = ((a / dx) + half).ceil().max(0.0) as usize;
    let last = ((b / dx) + half).ceil().min(g.points() as f64) as usize;
    let s: f64 = u.values()[first..last.max(first)].iter().map(|v| v.norm_sqr()).sum();
    (dx * s).sqrt()
}

pub fn run_pigeonhole(cfg: &PigeonholeConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let grid = Grid::new(cfg.circumference, cfg.points)?;
    let threshold = cfg.eta.sqrt() / 4.0;
    let mut rep = ExperimentReport::new("pigeonhole").with_seed(cfg.seed);
    let mut passed = 0usize;
    for i in 0..cfg.trials {
        let u = trial_data(cfg, &grid, i)?;
        let sel = pigeonhole_interval(&u, cfg.eta, cfg.n_freq, cfg.horizon, cfg.mass_bound)?;
        let (a, b) = sel.interval();
        let measured = interval_norm(&u.to_physical(), a, b);
        let inside = a >= cfg.circumference / 4.0 - 1e-9 && b <= cfg.circumference / 2.0 + 1e-9;
        if inside && measured <= threshold {
            passed += 1;
        }
        rep.push("boundary_mass", measured);
        rep.push("ratio", measured / threshold);
        rep.push("index", sel.index as f64);
    }
    rep.scalar("trials", cfg.trials as f64);
    rep.scalar("passed", passed as f64);
    rep.scalar("threshold", threshold);
    rep.scalar(
        "subintervals",
        crate::cutoffs::subinterval_count(cfg.circumference, cfg.eta, cfg.n_freq, cfg.horizon) as f64,
    );
    rep.judge("all_trials_pass", Rule::AtLeast("passed".into(), cfg.trials as f64));
    rep.judge("ratio_bounded", Rule::AllAtMost("ratio".into(), 1.0));
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_norm_matches_filtered_sum() {
        let g = Grid::new(64.0, 256).unwrap();
        let u = ComplexField::from_fn(&g, |x| num_complex::Complex64::new((0.3 * x).sin() + 1.0, 0.0)).unwrap();
        for (a, b) in [(16.0, 20.0), (16.1, 19.9), (-32.0, 32.0), (31.0, 40.0)] {
            let fast = interval_norm(&u, a, b);
            let slow = crate::cutoffs::windowed_norm(&u, a, b);
            assert!((fast - slow).abs() < 1e-12, "{a} {b}");
        }
    }

    #[test]
    fn small_run_passes() {
        let cfg = PigeonholeConfig {
            trials: 6,
            ..Default::default()
        };
        let rep = run_pigeonhole(&cfg).unwrap();
        assert!(rep.all_pass(), "{:?}", rep.failing());
        assert!(PigeonholeConfig {
            horizon: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
