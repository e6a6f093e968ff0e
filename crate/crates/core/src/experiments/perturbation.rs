//! Stability of the truncated torus flow under small data and forcing errors.
//!
//! The exact solution `u` starts from `u0`; the approximate solution `w`
//! starts from `u0 + eps d` and carries the forcing `e = eps scale phi / (T ||phi||)`,
//! so both errors have size `eps`. The ratio `||u - w||_S / eps` should be
//! flat in `eps` once `eps` is below the admissible threshold.

use num_complex::Complex64;

use super::data::{DataGenerator, DataSpec};
use crate::diagnostics::strichartz_norm;
use crate::dynamics::{solve, solve_forced, Sign, SolverConfig, Trajectory, Truncation};
use crate::error::{LabError, Result};
use crate::report::{ExperimentReport, Rule};
use crate::spectral::{sharp_truncate, ComplexField, Grid};

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbConfig {
    pub circumference: f64,
    pub points: usize,
    pub n_freq: f64,
    pub horizon: f64,
    pub dt: f64,
    pub stride: usize,
    pub sign: Sign,
    pub eps: Vec<f64>,
    pub data: DataSpec,
    /// Multiplies the forcing; `0` leaves only the data perturbation.
    pub forcing_scale: f64,
    pub nonlinear: bool,
    /// Entries whose ratio exceeds this multiple of the smallest-`eps`
    /// ratio are flagged as beyond the admissible threshold.
    pub flag_factor: f64,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        PerturbConfig {
            circumference: 64.0,
            points: 512,
            n_freq: 4.0,
            horizon: 1.0,
            dt: 1e-3,
            stride: 10,
            sign: Sign::Defocusing,
            eps: vec![1e-1, 1e-2, 1e-3],
            data: DataSpec::new(DataGenerator::Spread, 7).with_norm(1.0),
            forcing_scale: 1.0,
            nonlinear: true,
            flag_factor: 10.0,
        }
    }
}

impl PerturbConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eps.is_empty() || self.eps.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
            return Err(LabError::config("perturb.eps must be a non-empty list of finite values >= 0"));
        }
        if !(self.flag_factor > 1.0) {
            return Err(LabError::config("perturb.flag-factor must exceed 1"));
        }
        self.solver()?;
        Ok(())
    }

    fn solver(&self) -> Result<SolverConfig> {
        let cfg = SolverConfig::new(self.sign, Truncation::TorusLowPass(self.n_freq), self.dt, self.horizon)?
            .with_stride(self.stride)?;
        Ok(if self.nonlinear { cfg } else { cfg.linear() })
    }
}

fn unit(f: ComplexField) -> Result<ComplexField> {
    let n = f.l2_norm();
    if n == 0.0 {
        return Err(LabError::config("perturbation direction vanished on this grid"));
    }
    Ok(f.scaled(Complex64::new(1.0 / n, 0.0)))
}

fn difference(a: &Trajectory, b: &Trajectory) -> Result<Trajectory> {
    let fields = a.fields.iter().zip(&b.fields).map(|(x, y)| x.sub(y)).collect::<Result<Vec<_>>>()?;
    Trajectory::new(a.config.clone(), a.grid.clone(), a.t0, a.spacing, fields)
}

pub fn run_perturbation(cfg: &PerturbConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let grid = Grid::new(cfg.circumference, cfg.points)?;
    let solver = cfg.solver()?;
    let band = 2.0 * cfg.n_freq;
    let u0 = sharp_truncate(&cfg.data.generate(&grid, band)?, band).into_physical();
    let spread = DataSpec::new(DataGenerator::Spread, 0);
    let d = unit(spread.generate_with_seed(&grid, band, cfg.data.seed.wrapping_add(1))?)?;
    let phi = unit(spread.generate_with_seed(&grid, band, cfg.data.seed.wrapping_add(2))?)?;
    let exact = solve(&u0, &solver)?;
    let (t1, t2) = (0.0, cfg.horizon);

    let mut rep = ExperimentReport::new("perturb").with_seed(cfg.data.seed);
    let mut isometry_defect: f64 = 0.0;
    for &eps in &cfg.eps {
        if eps == 0.0 {
            rep.note("eps_zero", "exact-match");
            continue;
        }
        let w0 = u0.add(&d.scaled(Complex64::new(eps, 0.0)))?;
        let forcing = phi.scaled(Complex64::new(eps * cfg.forcing_scale / cfg.horizon, 0.0));
        let approx = solve_forced(&w0, &solver, &forcing)?;
        let diff = difference(&exact, &approx)?;
        let s = strichartz_norm(&diff, t1, t2)?;
        let sup = diff.fields.iter().map(|f| f.l2_norm()).fold(0.0, f64::max);
        isometry_defect = isometry_defect.max((sup / eps - 1.0).abs());
        rep.push("eps", eps);
        rep.push("difference", s);
        rep.push("ratio", s / eps);
        rep.push("forcing_size", cfg.horizon * forcing.l2_norm());
    }
    let eps = rep.get_series("eps").map(|v| v.to_vec()).unwrap_or_default();
    let ratio = rep.get_series("ratio").map(|v| v.to_vec()).unwrap_or_default();
    if let Some(smallest) = (0..eps.len()).min_by(|&a, &b| eps[a].total_cmp(&eps[b])) {
        let reference = ratio[smallest];
        let mut admissible = Vec::new();
        for (i, r) in ratio.iter().enumerate() {
            let flagged = *r > cfg.flag_factor * reference;
            rep.push("flagged", if flagged { 1.0 } else { 0.0 });
            if !flagged {
                admissible.push(ratio[i]);
            }
        }
        rep.series("ratio_admissible", admissible);
        rep.judge("ratio_flat", Rule::SpreadAtMost("ratio_admissible".into(), 3.0));
    }
    rep.scalar("isometry_defect", isometry_defect);
    if !cfg.nonlinear && cfg.forcing_scale == 0.0 && !eps.is_empty() {
        rep.judge("linear_isometry", Rule::AtMost("isometry_defect".into(), 1e-10));
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> PerturbConfig {
        PerturbConfig {
            points: 256,
            horizon: 0.25,
            ..Default::default()
        }
    }

    #[test]
    fn linear_control_is_an_isometry() {
        let cfg = PerturbConfig {
            nonlinear: false,
            forcing_scale: 0.0,
            ..small()
        };
        let rep = run_perturbation(&cfg).unwrap();
        assert!(rep.get_scalar("isometry_defect").unwrap() < 1e-10);
        assert!(rep.all_pass(), "{:?}", rep.failing());
    }

    #[test]
    fn nonlinear_ratio_is_flat() {
        let rep = run_perturbation(&small()).unwrap();
        assert!(rep.all_pass(), "{:?} {:?}", rep.failing(), rep.get_series("ratio"));
    }

    #[test]
    fn zero_eps_is_recorded() {
        let cfg = PerturbConfig {
            eps: vec![0.0, 1e-2],
            ..small()
        };
        let rep = run_perturbation(&cfg).unwrap();
        assert_eq!(rep.notes.get("eps_zero").map(String::as_str), Some("exact-match"));
        assert_eq!(rep.get_series("eps").unwrap(), &[1e-2]);
        assert!(PerturbConfig { eps: vec![], ..small() }.validate().is_err());
    }
}
