//! Search for a point of a small ball whose truncated evolution moves a
//! linear functional by more than `r + 4 delta`.
//!
//! Phase space: modes `|xi| <= 2N` of the torus, with real coordinates
//! `a = sqrt(dx) (Re u_hat, Im u_hat)` so that `|a| = ||u||_2`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::dynamics::{Sign, SolverConfig, Stepper, Truncation};
use crate::error::{LabError, Result};
use crate::report::{ExperimentReport, Rule};
use crate::spectral::{free_evolve, pairing, sharp_truncate, smooth_step, ComplexField, Grid, MultiplierSymbol, Representation};

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub starts: usize,
    pub iterations: usize,
    pub fd_step: f64,
    /// First step length as a fraction of the ball radius.
    pub initial_step: f64,
    /// Searches stop once the step falls below this fraction of the radius.
    pub min_step: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            starts: 8,
            iterations: 20,
            fd_step: 1e-6,
            initial_step: 0.25,
            min_step: 1e-6,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessConfig {
    pub circumference: f64,
    pub points: usize,
    pub n_freq: f64,
    pub horizon: f64,
    pub dt: f64,
    pub sign: Sign,
    pub nonlinear: bool,
    pub r: f64,
    pub big_r: f64,
    pub delta: f64,
    /// Width of the Gaussian `z_*`.
    pub center_width: f64,
    pub center_amplitude: f64,
    /// Width and position of the Gaussian functional `l`.
    pub functional_width: f64,
    pub functional_center: f64,
    /// `None` centers the target at `<l~, S(T) z~_*>`.
    pub alpha: Option<Complex64>,
    pub optimizer: OptimizerConfig,
}

impl Default for WitnessConfig {
    fn default() -> Self {
        WitnessConfig {
            circumference: 64.0,
            points: 256,
            n_freq: 2.0,
            horizon: 0.5,
            dt: 5e-3,
            sign: Sign::Defocusing,
            nonlinear: true,
            r: 0.5,
            big_r: 1.0,
            delta: 0.05,
            center_width: 1.0,
            center_amplitude: 1.0,
            functional_width: 1.0,
            functional_center: 2.0,
            alpha: None,
            optimizer: OptimizerConfig::default(),
        }
    }
}

impl WitnessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.big_r > self.r) {
            return Err(LabError::config("witness needs 0 < r < R"));
        }
        if !(self.delta > 0.0 && self.delta < (self.big_r - self.r) / 8.0) {
            return Err(LabError::config(format!(
                "witness.delta = {} must lie in (0, (R - r)/8) = (0, {})",
                self.delta,
                (self.big_r - self.r) / 8.0
            )));
        }
        if self.optimizer.fd_step <= 0.0 || self.optimizer.initial_step <= 0.0 {
            return Err(LabError::config("witness optimizer steps must be positive"));
        }
        self.solver()?;
        Ok(())
    }

    fn solver(&self) -> Result<SolverConfig> {
        let cfg = SolverConfig::new(self.sign, Truncation::TorusLowPass(self.n_freq), self.dt, self.horizon)?
            .with_mass_bound(f64::INFINITY);
        Ok(if self.nonlinear { cfg } else { cfg.linear() })
    }
}

fn gaussian(grid: &Grid, amplitude: f64, width: f64, center: f64) -> Result<ComplexField> {
    ComplexField::from_fn(grid, |x| {
        Complex64::new(amplitude * (-(x - center).powi(2) / (2.0 * width * width)).exp(), 0.0)
    })
}

/// Band-limits to `|xi| <= band`, then applies a window equal to 1 on
/// `|x| <= L/4` and vanishing for `|x| >= 3L/8`.
fn mollify(f: &ComplexField, band: f64) -> ComplexField {
    let eighth = f.grid().circumference() / 8.0;
    let window: Vec<f64> = f
        .grid()
        .positions()
        .iter()
        .map(|x| smooth_step((3.0 * eighth - x.abs()) / eighth))
        .collect();
    sharp_truncate(f, band).into_physical().multiply_real(&window)
}

/// The optimization problem with its checked invariants.
#[derive(Debug, Clone)]
pub struct WitnessProblem {
    pub grid: Grid,
    pub solver: SolverConfig,
    /// `P^L_{<=N} z~_*`
    pub center: ComplexField,
    /// mollified, unit-norm functional
    pub functional: ComplexField,
    /// unmollified unit-norm functional
    pub raw_functional: ComplexField,
    pub alpha: Complex64,
    pub radius: f64,
    pub r: f64,
    pub big_r: f64,
    pub delta: f64,
    pub center_defect: f64,
    pub functional_defect: f64,
    modes: Vec<usize>,
    functional_spec: Vec<Complex64>,
}

impl WitnessProblem {
    pub fn new(cfg: &WitnessConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = Grid::new(cfg.circumference, cfg.points)?;
        let solver = cfg.solver()?;
        let band = 2.0 * cfg.n_freq;
        let z_star = gaussian(&grid, cfg.center_amplitude, cfg.center_width, 0.0)?;
        let z_tilde = mollify(&z_star, band);
        let center_defect = z_star.sub(&z_tilde)?.l2_norm();
        let l_raw = gaussian(&grid, 1.0, cfg.functional_width, cfg.functional_center)?;
        let l_raw = l_raw.scaled(Complex64::new(1.0 / l_raw.l2_norm(), 0.0));
        let l_tilde = mollify(&l_raw, band);
        let l_tilde = l_tilde.scaled(Complex64::new(1.0 / l_tilde.l2_norm(), 0.0));
        let functional_defect = l_raw.sub(&l_tilde)?.l2_norm();
        if center_defect > cfg.delta || functional_defect > cfg.delta {
            return Err(LabError::config(format!(
                "mollification moves z_* by {center_defect:.3e} and l by {functional_defect:.3e}, need <= delta = {}",
                cfg.delta
            )));
        }
        let center = crate::spectral::apply_symbol(&z_tilde, &MultiplierSymbol::LowPass { cutoff: cfg.n_freq })?
            .into_physical();
        let modes: Vec<usize> = (0..grid.points()).filter(|&i| grid.wavenumber(i).abs() <= band).collect();
        let functional_spec = l_tilde.to_spectral().into_values();
        let mut p = WitnessProblem {
            grid,
            solver,
            center,
            functional: l_tilde,
            raw_functional: l_raw,
            alpha: Complex64::new(0.0, 0.0),
            radius: (cfg.big_r - 4.0 * cfg.delta).max(0.0),
            r: cfg.r,
            big_r: cfg.big_r,
            delta: cfg.delta,
            center_defect,
            functional_defect,
            modes,
            functional_spec,
        };
        p.alpha = match cfg.alpha {
            Some(a) => a,
            None => p.pairing_at(&vec![0.0; p.dimension()])?,
        };
        Ok(p)
    }

    /// Number of real coordinates.
    pub fn dimension(&self) -> usize {
        2 * self.modes.len()
    }

    pub fn threshold(&self) -> f64 {
        self.r + 4.0 * self.delta
    }

    /// Data `center + v(a)` in spectral form.
    fn data(&self, a: &[f64]) -> Vec<Complex64> {
        let mut spec = self.center.to_spectral().into_values();
        let s = 1.0 / self.grid.dx().sqrt();
        for (j, &i) in self.modes.iter().enumerate() {
            spec[i] += Complex64::new(a[2 * j], a[2 * j + 1]) * s;
        }
        spec
    }

    pub fn initial_data(&self, a: &[f64]) -> ComplexField {
        ComplexField::from_parts_unchecked(self.grid.clone(), self.data(a), Representation::Spectral).into_physical()
    }

    fn evolve(&self, a: &[f64]) -> Result<Vec<Complex64>> {
        let mut state = self.data(a);
        let mut st = Stepper::new(&self.grid, &self.solver)?;
        for i in 1..=self.solver.steps() {
            st.step(&mut state);
            if i % 16 == 0 && state.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
                return Err(LabError::numeric(format!("witness evolution blew up at step {i}")));
            }
        }
        Ok(state)
    }

    /// `<l~, S(T)(center + v(a))>`
    pub fn pairing_at(&self, a: &[f64]) -> Result<Complex64> {
        let state = self.evolve(a)?;
        let s: Complex64 = self.functional_spec.iter().zip(&state).map(|(l, u)| l.conj() * u).sum();
        Ok(s * self.grid.dx())
    }

    /// `J(a) = |<l~, S(T)(center + v(a))> - alpha|`
    pub fn objective(&self, a: &[f64]) -> Result<f64> {
        Ok((self.pairing_at(a)? - self.alpha).norm())
    }

    /// `|<l, S(T) u0> - alpha|` with the unmollified functional.
    pub fn raw_margin(&self, a: &[f64]) -> Result<f64> {
        let state = ComplexField::from_parts_unchecked(self.grid.clone(), self.evolve(a)?, Representation::Spectral);
        Ok((pairing(&self.raw_functional, &state)? - self.alpha).norm())
    }

    /// `rho ||Pi_H e^{-iT Delta} l~||`, the exact maximum without the nonlinearity.
    pub fn linear_optimum(&self) -> Result<f64> {
        let back = free_evolve(&self.functional.to_spectral(), -self.solver.horizon)?;
        let band: f64 = self.modes.iter().map(|&i| back.values()[i].norm_sqr()).sum::<f64>() * self.grid.dx();
        Ok(self.radius * band.sqrt())
    }

    fn project(&self, a: &mut [f64]) {
        let n = norm(a);
        if n > self.radius {
            let s = self.radius / n;
            a.iter_mut().for_each(|v| *v *= s);
        }
    }

    fn gradient(&self, a: &[f64], h: f64) -> Result<Vec<f64>> {
        (0..a.len())
            .into_par_iter()
            .map(|k| {
                let mut p = a.to_vec();
                let mut m = a.to_vec();
                p[k] += h;
                m[k] -= h;
                Ok((self.objective(&p)? - self.objective(&m)?) / (2.0 * h))
            })
            .collect()
    }
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

/// Normalized projected gradient ascent from one start.
fn ascend(p: &WitnessProblem, opts: &OptimizerConfig, start: Vec<f64>) -> Result<SearchResult> {
    let mut a = start;
    p.project(&mut a);
    let mut value = p.objective(&a)?;
    let mut step = opts.initial_step * p.radius;
    let mut iterations = 0;
    'outer: for _ in 0..opts.iterations {
        iterations += 1;
        let g = p.gradient(&a, opts.fd_step)?;
        let gn = norm(&g);
        if !(gn > 0.0) {
            break;
        }
        loop {
            let mut cand: Vec<f64> = a.iter().zip(&g).map(|(x, d)| x + step * d / gn).collect();
            p.project(&mut cand);
            let v = p.objective(&cand)?;
            if v > value {
                let gain = v - value;
                a = cand;
                value = v;
                step *= 1.5;
                if gain <= 1e-10 * value {
                    break 'outer;
                }
                break;
            }
            step *= 0.5;
            if step < opts.min_step * p.radius {
                break 'outer;
            }
        }
    }
    Ok(SearchResult {
        point: a,
        value,
        iterations,
    })
}

/// Best result over seeded starts.
pub fn search(p: &WitnessProblem, opts: &OptimizerConfig) -> Result<Option<SearchResult>> {
    if p.radius == 0.0 || opts.starts == 0 {
        return Ok(None);
    }
    let dim = p.dimension();
    let results = (0..opts.starts)
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(s as u64));
            let mut a: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let n = norm(&a);
            a.iter_mut().for_each(|v| *v *= 0.5 * p.radius / n);
            ascend(p, opts, a)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(results.into_iter().max_by(|x, y| x.value.total_cmp(&y.value)))
}

pub fn run_witness_search(cfg: &WitnessConfig) -> Result<ExperimentReport> {
    let p = WitnessProblem::new(cfg)?;
    let mut rep = ExperimentReport::new("witness").with_seed(cfg.optimizer.seed);
    rep.scalar("radius", p.radius);
    rep.scalar("threshold", p.threshold());
    rep.scalar("dimension", p.dimension() as f64);
    rep.scalar("center_defect", p.center_defect);
    rep.scalar("functional_defect", p.functional_defect);
    rep.scalar("alpha_re", p.alpha.re);
    rep.scalar("alpha_im", p.alpha.im);

    let zero = vec![0.0; p.dimension()];
    let best = search(&p, &cfg.optimizer)?;
    let (point, value) = match &best {
        Some(b) => (b.point.clone(), b.value),
        None => {
            rep.note("search", "degenerate ball, objective evaluated at the center only");
            (zero.clone(), p.objective(&zero)?)
        }
    };
    rep.scalar("best_j", value);
    rep.scalar("starts", best.as_ref().map_or(0.0, |_| cfg.optimizer.starts as f64));
    let distance = p.initial_data(&point).sub(&p.center)?.l2_norm();
    rep.scalar("distance", distance);
    rep.scalar("radius_excess", (distance - p.radius).max(0.0));
    rep.judge("inside_ball", Rule::AtMost("radius_excess".into(), 1e-12));

    let margin = p.raw_margin(&point)?;
    rep.scalar("margin", margin);
    let found = value > p.threshold();
    if found {
        rep.judge("witness_found", Rule::Exceeds("best_j".into(), p.threshold()));
        rep.judge("margin", Rule::Exceeds("margin".into(), p.r));
    } else {
        rep.note(
            "witness",
            "best value found stays below the threshold; this is a search result, not a refutation",
        );
    }
    if !cfg.nonlinear {
        let exact = p.linear_optimum()?;
        rep.scalar("linear_optimum", exact);
        let gap = if exact > 0.0 { (exact - value).abs() / exact } else { value };
        rep.scalar("linear_gap", gap);
        rep.judge("linear_optimum", Rule::AtMost("linear_gap".into(), 0.01));
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> WitnessConfig {
        WitnessConfig {
            optimizer: OptimizerConfig {
                starts: 2,
                iterations: 8,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn coordinates_are_isometric() {
        let p = WitnessProblem::new(&quick()).unwrap();
        assert_eq!(p.dimension(), 2 * 81);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a: Vec<f64> = (0..p.dimension()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let v = p.initial_data(&a).sub(&p.center).unwrap();
        assert!((v.l2_norm() - norm(&a)).abs() < 1e-12 * norm(&a));
        assert!((p.functional.l2_norm() - 1.0).abs() < 1e-12);
        assert!(p.objective(&vec![0.0; p.dimension()]).unwrap() < 1e-14);
    }

    #[test]
    fn linear_search_reaches_closed_form() {
        let cfg = WitnessConfig {
            nonlinear: false,
            ..quick()
        };
        let rep = run_witness_search(&cfg).unwrap();
        assert!(rep.all_pass(), "{:?} gap {:?}", rep.failing(), rep.get_scalar("linear_gap"));
        assert!(rep.get_scalar("radius_excess").unwrap() <= 1e-12);
    }

    #[test]
    fn degenerate_and_invalid_problems() {
        assert!(WitnessConfig {
            delta: 0.1,
            ..quick()
        }
        .validate()
        .is_err());
        // R = 4 delta exactly gives a zero-radius ball
        let cfg = WitnessConfig {
            r: 0.05,
            big_r: 0.45,
            delta: 0.04,
            ..quick()
        };
        let mut p = WitnessProblem::new(&cfg).unwrap();
        p.radius = 0.0;
        assert!(search(&p, &cfg.optimizer).unwrap().is_none());
    }
}
