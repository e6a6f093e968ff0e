//! Norms on fields and discrete trajectories.
//!
//! Time integrals use the left-point rectangle rule at snapshot resolution
//! over half-open windows `[t1, t2)`; space integrals are exact grid sums
//! over `[-R, R)`.

mod operator;

pub use operator::{operator_norm, Factor, LinearMap, LinearOperator, PowerIteration};

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::dynamics::{nonlinear_term, SolverConfig, Trajectory};
use crate::error::{LabError, Result};
use crate::spectral::{apply_symbol, ComplexField, Grid, MultiplierSymbol};

pub fn mass(f: &ComplexField) -> f64 {
    f.mass()
}

/// `int 1/2 |u_x|^2 + sigma/4 |P u|^4`.
pub fn energy(f: &ComplexField, cfg: &SolverConfig) -> f64 {
    let g = f.grid();
    let spec = f.to_spectral();
    let kinetic: f64 = spec
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| g.wavenumber(i).powi(2) * v.norm_sqr())
        .sum::<f64>()
        * g.dx();
    let coupling = cfg.coupling();
    let potential = if coupling == 0.0 {
        0.0
    } else {
        let pu = match cfg.projector(g) {
            Some(p) => spec.multiply_spectral(&p).into_physical(),
            None => spec.into_physical(),
        };
        pu.values().iter().map(|v| v.norm_sqr().powi(2)).sum::<f64>() * g.dx()
    };
    0.5 * kinetic + 0.25 * coupling * potential
}

fn window_indices(traj: &Trajectory, t1: f64, t2: f64) -> Result<Vec<usize>> {
    let eps = 1e-9 * traj.spacing.abs().max(f64::MIN_POSITIVE);
    let idx: Vec<usize> = (0..traj.len())
        .filter(|&s| {
            let t = traj.time(s);
            t >= t1 - eps && t < t2 - eps
        })
        .collect();
    if idx.is_empty() {
        return Err(LabError::config(format!(
            "time window [{t1}, {t2}) contains no snapshots of [{}, {}]",
            traj.t0,
            traj.end_time()
        )));
    }
    Ok(idx)
}

/// Whole trajectory as a window: every snapshot but the last.
fn full_window(traj: &Trajectory) -> (f64, f64) {
    (traj.t0, traj.end_time())
}

fn spatial_mask(grid: &Grid, radius: Option<f64>) -> Result<Vec<bool>> {
    match radius {
        None => Ok(vec![true; grid.points()]),
        Some(r) => {
            if !(r > 0.0) || r > grid.circumference() / 2.0 {
                return Err(LabError::config(format!(
                    "spatial window radius {r} must lie in (0, L/2] = (0, {}]",
                    grid.circumference() / 2.0
                )));
            }
            Ok((0..grid.points())
                .map(|m| {
                    let x = grid.position(m);
                    x >= -r && x < r
                })
                .collect())
        }
    }
}

/// Streaming `max_t ||u||_2 + (sum dt ||u||_inf^4)^{1/4}`, optionally over `[-R, R)` only.
#[derive(Debug, Clone)]
pub struct StrichartzAccumulator {
    dt: f64,
    mask: Option<Vec<bool>>,
    max_l2: f64,
    quartic: f64,
}

impl StrichartzAccumulator {
    pub fn new(dt: f64) -> Self {
        StrichartzAccumulator {
            dt,
            mask: None,
            max_l2: 0.0,
            quartic: 0.0,
        }
    }

    pub fn windowed(dt: f64, grid: &Grid, radius: f64) -> Result<Self> {
        Ok(StrichartzAccumulator {
            mask: Some(spatial_mask(grid, Some(radius))?),
            ..Self::new(dt)
        })
    }

    pub fn push(&mut self, f: &ComplexField) {
        match &self.mask {
            None => {
                self.max_l2 = self.max_l2.max(f.l2_norm());
                self.quartic += self.dt * f.sup_norm().powi(4);
            }
            Some(mask) => {
                let phys = f.to_physical();
                let (mut sq, mut sup) = (0.0, 0.0f64);
                for (v, _) in phys.values().iter().zip(mask).filter(|(_, &k)| k) {
                    sq += v.norm_sqr();
                    sup = sup.max(v.norm());
                }
                self.max_l2 = self.max_l2.max((f.grid().dx() * sq).sqrt());
                self.quartic += self.dt * sup.powi(4);
            }
        }
    }

    pub fn value(&self) -> f64 {
        self.max_l2 + self.quartic.powf(0.25)
    }
}

/// Exponent pairs for mixed space-time norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LpExponent {
    Six,
    SixFifths,
    Four,
    /// `L^1_t L^2_x`
    OneTwo,
}

impl LpExponent {
    pub fn name(self) -> &'static str {
        match self {
            LpExponent::Six => "L6",
            LpExponent::SixFifths => "L6/5",
            LpExponent::Four => "L4",
            LpExponent::OneTwo => "L1L2",
        }
    }

    fn p(self) -> f64 {
        match self {
            LpExponent::Six => 6.0,
            LpExponent::SixFifths => 1.2,
            LpExponent::Four => 4.0,
            LpExponent::OneTwo => 1.0,
        }
    }
}

/// Streaming mixed-norm quadrature restricted to a spatial window.
#[derive(Debug, Clone)]
pub struct SpacetimeAccumulator {
    exponent: LpExponent,
    dt: f64,
    mask: Option<Vec<bool>>,
    radius: Option<f64>,
    acc: f64,
}

impl SpacetimeAccumulator {
    pub fn new(exponent: LpExponent, dt: f64, radius: Option<f64>) -> Self {
        SpacetimeAccumulator {
            exponent,
            dt,
            mask: None,
            radius,
            acc: 0.0,
        }
    }

    pub fn push(&mut self, f: &ComplexField) -> Result<()> {
        if self.mask.is_none() {
            self.mask = Some(spatial_mask(f.grid(), self.radius)?);
        }
        let mask = self.mask.as_ref().unwrap();
        if mask.len() != f.grid().points() {
            return Err(LabError::GridMismatch("accumulator fed fields from different grids".into()));
        }
        let phys = f.to_physical();
        let dx = f.grid().dx();
        let vals = phys.values().iter().zip(mask).filter(|(_, &keep)| keep).map(|(v, _)| v.norm());
        self.acc += self.dt
            * match self.exponent {
                LpExponent::OneTwo => (dx * vals.map(|a| a * a).sum::<f64>()).sqrt(),
                e => dx * vals.map(|a| a.powf(e.p())).sum::<f64>(),
            };
        Ok(())
    }

    pub fn value(&self) -> f64 {
        match self.exponent {
            LpExponent::OneTwo => self.acc,
            e => self.acc.powf(1.0 / e.p()),
        }
    }
}

/// Discrete `C_t L^2_x + L^4_t L^inf_x` norm over `[t1, t2)`.
pub fn strichartz_norm(traj: &Trajectory, t1: f64, t2: f64) -> Result<f64> {
    let idx = window_indices(traj, t1, t2)?;
    let mut acc = StrichartzAccumulator::new(traj.spacing);
    for s in idx {
        acc.push(&traj.fields[s]);
    }
    Ok(acc.value())
}

/// Mixed norm over `[t1, t2) x [-R, R)`.
pub fn spacetime_lp_norm(traj: &Trajectory, exponent: LpExponent, t1: f64, t2: f64, radius: f64) -> Result<f64> {
    let idx = window_indices(traj, t1, t2)?;
    let mut acc = SpacetimeAccumulator::new(exponent, traj.spacing, Some(radius));
    for s in idx {
        acc.push(&traj.fields[s])?;
    }
    Ok(acc.value())
}

fn inverse_sqrt_gradient_norm(f: &ComplexField) -> Result<f64> {
    let sym = MultiplierSymbol::inverse_sqrt_gradient(f.grid());
    Ok(apply_symbol(f, &sym)?.l2_norm())
}

/// `||u||_{L^2([t0,T) x [-R,R))} / (R^{1/2} (|| |D|^{-1/2} u0 || + sum dt || |D|^{-1/2} G ||))`
/// with `G = P F(P u)` evaluated on the snapshots.
pub fn local_smoothing_ratio(traj: &Trajectory, radius: f64) -> Result<f64> {
    let (t1, t2) = full_window(traj);
    let idx = window_indices(traj, t1, t2)?;
    let mask = spatial_mask(&traj.grid, Some(radius))?;
    let dx = traj.grid.dx();
    let mut l2 = 0.0;
    let mut forcing = 0.0;
    for &s in &idx {
        let f = &traj.fields[s];
        l2 += traj.spacing
            * dx
            * f.values()
                .iter()
                .zip(&mask)
                .filter(|(_, &k)| k)
                .map(|(v, _)| v.norm_sqr())
                .sum::<f64>();
        if traj.config.coupling() != 0.0 {
            forcing += traj.spacing * inverse_sqrt_gradient_norm(&nonlinear_term(f, &traj.config))?;
        }
    }
    let rhs = radius.sqrt() * (inverse_sqrt_gradient_norm(&traj.fields[0])? + forcing);
    let lhs = l2.sqrt();
    Ok(if lhs == 0.0 { 0.0 } else { lhs / rhs })
}

/// `||u(t + tau, x + y) - u(t, x)||_{L^2([-T, T) x [-R, R))}`.
///
/// The time shift is taken to the nearest snapshot and requires a sampling
/// spacing of at most `|tau| / 10`; the space shift is applied exactly as the
/// multiplier `e^{i xi y}`.
pub fn equicontinuity_modulus(traj: &Trajectory, tau: f64, y: f64, radius: f64, horizon: f64) -> Result<f64> {
    if tau.abs() > horizon {
        return Err(LabError::config(format!("|tau| = {} exceeds T = {horizon}", tau.abs())));
    }
    if tau != 0.0 && traj.spacing > tau.abs() / 10.0 * (1.0 + 1e-9) {
        return Err(LabError::config(format!(
            "snapshot spacing {} is too coarse for tau = {tau} (need <= |tau|/10)",
            traj.spacing
        )));
    }
    let shift = if tau == 0.0 { 0 } else { (tau / traj.spacing).round() as i64 };
    let idx = window_indices(traj, -horizon, horizon)?;
    let first = traj.time(idx[0]);
    let last = traj.time(*idx.last().unwrap());
    if (first - (-horizon)).abs() > 0.5 * traj.spacing || (last + traj.spacing - horizon).abs() > 0.5 * traj.spacing {
        return Err(LabError::config(format!(
            "trajectory [{}, {}] does not cover [-T, T] = [{}, {horizon}]",
            traj.t0,
            traj.end_time(),
            -horizon
        )));
    }
    let mask = spatial_mask(&traj.grid, Some(radius))?;
    let modulation = MultiplierSymbol::custom("translation", move |xi| Complex64::from_polar(1.0, xi * y));
    let dx = traj.grid.dx();
    let mut acc = 0.0;
    for s in idx {
        let target = s as i64 + shift;
        if target < 0 || target as usize >= traj.len() {
            return Err(LabError::config(format!(
                "trajectory [{}, {}] does not cover [-T - |tau|, T + |tau|] for tau = {tau}",
                traj.t0,
                traj.end_time()
            )));
        }
        let shifted = &traj.fields[target as usize];
        let shifted = if y == 0.0 {
            shifted.clone()
        } else {
            apply_symbol(shifted, &modulation)?.into_physical()
        };
        let base = &traj.fields[s];
        acc += traj.spacing
            * dx
            * shifted
                .values()
                .iter()
                .zip(base.values())
                .zip(&mask)
                .filter(|(_, &k)| k)
                .map(|((a, b), _)| (a - b).norm_sqr())
                .sum::<f64>();
    }
    Ok(acc.sqrt())
}

/// `||u||_{L^inf_t L^2_x} + ||P F(P u)||_{L^2_{t,x}}` over the whole trajectory.
pub fn tilde_s_norm(traj: &Trajectory) -> Result<f64> {
    let (t1, t2) = full_window(traj);
    let idx = window_indices(traj, t1, t2)?;
    let sup = traj.fields.iter().map(|f| f.l2_norm()).fold(0.0, f64::max);
    let mut forcing = 0.0;
    if traj.config.coupling() != 0.0 {
        for s in idx {
            forcing += traj.spacing * nonlinear_term(&traj.fields[s], &traj.config).mass();
        }
    }
    Ok(sup + forcing.sqrt())
}

/// Least-squares slope and `R^2` of `log y` against `log x`.
pub fn loglog_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(LabError::config("log-log fit needs two equal series of length >= 2"));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(LabError::numeric("log-log fit needs positive values"));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = ly.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok((slope, r2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormReport {
    pub values: BTreeMap<String, f64>,
    pub window: (f64, f64),
    pub radius: f64,
}

impl NormReport {
    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }
}

/// The standard set of norms over the whole trajectory.
pub fn norm_report(traj: &Trajectory, radius: f64) -> Result<NormReport> {
    let (t1, t2) = full_window(traj);
    let first = traj
        .fields
        .first()
        .ok_or_else(|| LabError::config("norm report of an empty trajectory"))?;
    let mut values = BTreeMap::new();
    values.insert("mass".to_string(), mass(first));
    values.insert("energy".to_string(), energy(first, &traj.config));
    values.insert("s_norm".to_string(), strichartz_norm(traj, t1, t2)?);
    values.insert("l6_norm".to_string(), spacetime_lp_norm(traj, LpExponent::Six, t1, t2, radius)?);
    values.insert("local_smoothing_ratio".to_string(), local_smoothing_ratio(traj, radius)?);
    values.insert("tilde_s_norm".to_string(), tilde_s_norm(traj)?);
    Ok(NormReport {
        values,
        window: (t1, t2),
        radius,
    })
}
