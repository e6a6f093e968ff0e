//! Torus versus line-surrogate approximation of the truncated flow, and the
//! mass-localization series measured on the same runs.
//!
//! For each schedule entry the torus solution `u` (projection `P^L_{<=N}`) and
//! the line solution `v` (projection `P_{<=N}`, data `chi^0 u0`) are advanced
//! in lockstep. At every snapshot `z = P^L_{<=2N}(chi^2 v)` is read back on the
//! torus and compared with `u`.

use num_complex::Complex64;
use rayon::prelude::*;

use super::data::{DataGenerator, DataSpec};
use super::{check_width_guard, default_schedule, validate_schedule, ScheduleEntry};
use crate::cutoffs::{build_cutoff, build_line_cutoff, pigeonhole_interval, spectral_derivative, LEVELS};
use crate::diagnostics::{LpExponent, SpacetimeAccumulator, StrichartzAccumulator};
use crate::dynamics::{Sign, SolverConfig, Stepper, Truncation};
use crate::error::{LabError, Result};
use crate::report::{ExperimentReport, Rule};
use crate::spectral::{sharp_truncate, ComplexField, Grid, MultiplierSymbol, Representation, WindowEmbedding};

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxConfig {
    pub schedule: Vec<ScheduleEntry>,
    pub mass_bound: f64,
    pub horizon: f64,
    pub dt: f64,
    pub stride: usize,
    pub sign: Sign,
    /// Cutoff level `j` of the mass-localization series.
    pub level: usize,
    pub data: DataSpec,
    pub nonlinear: bool,
    /// Interior window `|x| <= fraction * L` for the restricted error.
    pub interior_fraction: f64,
    /// Run on `[-T, T]` rather than `[0, T]`.
    pub symmetric: bool,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        ApproxConfig {
            schedule: default_schedule(),
            mass_bound: 1.0,
            horizon: 0.05,
            dt: 1e-3,
            stride: 5,
            sign: Sign::Defocusing,
            level: 2,
            data: DataSpec::new(
                DataGenerator::Localized {
                    scale: 4.0,
                    center: 0.0,
                    period: 32.0,
                },
                7,
            )
            .with_norm(1.0),
            nonlinear: true,
            interior_fraction: 0.125,
            symmetric: true,
        }
    }
}

impl ApproxConfig {
    pub fn validate(&self) -> Result<()> {
        validate_schedule(&self.schedule, 4.0)?;
        check_width_guard(&self.schedule, self.mass_bound, self.horizon)?;
        if self.level >= LEVELS {
            return Err(LabError::config(format!("approx.level must be in 0..=4, got {}", self.level)));
        }
        if !(self.interior_fraction > 0.0 && self.interior_fraction <= 0.5) {
            return Err(LabError::config("approx.interior-fraction must lie in (0, 1/2]"));
        }
        self.solver(Truncation::None)?;
        Ok(())
    }

    fn solver(&self, truncation: Truncation) -> Result<SolverConfig> {
        let cfg = SolverConfig::new(self.sign, truncation, self.dt, self.horizon)?
            .with_stride(self.stride)?
            .with_mass_bound(self.mass_bound);
        Ok(if self.nonlinear { cfg } else { cfg.linear() })
    }
}

/// Everything measured on one schedule entry.
#[derive(Debug, Clone, PartialEq)]
pub struct EntryResult {
    pub error: f64,
    pub interior_error: f64,
    pub initial_error: f64,
    pub mass_localization: f64,
    pub deriv_l1l2: f64,
    pub deriv_l65: f64,
    pub p2p_l1l2: f64,
    pub p2p_l65: f64,
    pub comm_l1l2: f64,
    pub comm_l65: f64,
    /// `||z(0)||` restricted to `|xi| > 2N`.
    pub z0_high_band: f64,
    pub interval_center: f64,
    pub boundary_mass: f64,
    pub data_norm: f64,
}

struct Buffers {
    torus: Grid,
    line: Grid,
    emb: WindowEmbedding,
    chi2_line: Vec<f64>,
    compl_j_line: Vec<f64>,
    chi2_torus: Vec<f64>,
    chi3_torus: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
    p_torus: Vec<f64>,
    p2_torus: Vec<f64>,
    p_line: Vec<f64>,
    coupling: f64,
    band: f64,
}

struct Meters {
    err: StrichartzAccumulator,
    interior: StrichartzAccumulator,
    deriv: [SpacetimeAccumulator; 2],
    p2p: [SpacetimeAccumulator; 2],
    comm: [SpacetimeAccumulator; 2],
    mass_loc: f64,
    initial_error: f64,
    z0_high: f64,
}

fn pair(dt: f64) -> [SpacetimeAccumulator; 2] {
    [
        SpacetimeAccumulator::new(LpExponent::OneTwo, dt, None),
        SpacetimeAccumulator::new(LpExponent::SixFifths, dt, None),
    ]
}

fn push_pair(acc: &mut [SpacetimeAccumulator; 2], f: &ComplexField) -> Result<()> {
    acc[0].push(f)?;
    acc[1].push(f)
}

fn physical(grid: &Grid, spec: &[Complex64]) -> ComplexField {
    ComplexField::from_parts_unchecked(grid.clone(), spec.to_vec(), Representation::Spectral).into_physical()
}

impl Buffers {
    fn observe(&self, m: &mut Meters, t: f64, in_window: bool, ut: &[Complex64], ul: &[Complex64]) -> Result<()> {
        let v = physical(&self.line, ul);
        m.mass_loc = m.mass_loc.max(v.multiply_real(&self.compl_j_line).l2_norm());
        if !in_window {
            return Ok(());
        }
        let u = physical(&self.torus, ut);
        let z2 = self.emb.restrict(&v.multiply_real(&self.chi2_line))?;
        let z = z2.multiply_spectral(&self.p2_torus);
        let diff = z.sub(&u)?.into_physical();
        m.err.push(&diff);
        m.interior.push(&diff);
        if t == 0.0 {
            m.initial_error = diff.l2_norm();
            let all = z.l2_norm().powi(2);
            let low = sharp_truncate(&z, self.band).l2_norm().powi(2);
            m.z0_high = (all - low).max(0.0).sqrt();
        }

        // 2 chi' v' + chi'' v
        let xi = self.line.wavenumbers();
        let dv: Vec<Complex64> = ul.iter().zip(&xi).map(|(c, k)| Complex64::new(0.0, *k) * c).collect();
        let dv = physical(&self.line, &dv);
        let deriv: Vec<Complex64> = dv
            .values()
            .iter()
            .zip(v.values())
            .zip(self.d1.iter().zip(&self.d2))
            .map(|((a, b), (c1, c2))| 2.0 * c1 * a + c2 * b)
            .collect();
        push_pair(
            &mut m.deriv,
            &ComplexField::from_parts_unchecked(self.line.clone(), deriv, Representation::Physical),
        )?;

        if self.coupling != 0.0 {
            let pz = z2.multiply_spectral(&self.p_torus).into_physical();
            let w: Vec<Complex64> = pz.values().iter().map(|a| self.coupling * a.norm_sqr() * a).collect();
            let g = ComplexField::from_parts_unchecked(self.torus.clone(), w, Representation::Physical)
                .multiply_real(&self.chi3_torus);
            let on_line = self
                .emb
                .restrict(&self.emb.lift(&g)?.multiply_spectral(&self.p_line).into_physical())?;
            let on_torus = g.multiply_spectral(&self.p_torus).into_physical();
            let p2p = on_line.sub(&on_torus)?.multiply_real(&self.chi2_torus);
            let comm = on_torus
                .multiply_real(&self.chi2_torus)
                .sub(&g.multiply_real(&self.chi2_torus).multiply_spectral(&self.p_torus))?
                .into_physical();
            push_pair(&mut m.p2p, &p2p)?;
            push_pair(&mut m.comm, &comm)?;
        }
        Ok(())
    }
}

fn finite(state: &[Complex64]) -> bool {
    state.iter().all(|v| v.re.is_finite() && v.im.is_finite())
}

/// Runs one schedule entry.
pub fn run_entry(cfg: &ApproxConfig, e: &ScheduleEntry) -> Result<EntryResult> {
    let torus = e.grid()?;
    let line = e.line_grid()?;
    let band = 2.0 * e.n_freq;
    // data are taken in H = {P^L_{>2N} f = 0}
    let u0 = sharp_truncate(&cfg.data.generate(&torus, band)?, band).into_physical();
    if u0.l2_norm() > cfg.mass_bound * (1.0 + 1e-12) {
        return Err(LabError::config(format!(
            "initial data norm {} exceeds approx.mass-bound {}",
            u0.l2_norm(),
            cfg.mass_bound
        )));
    }
    let sel = pigeonhole_interval(&u0, e.eta, e.n_freq, cfg.horizon, cfg.mass_bound)?;
    let emb = WindowEmbedding::new(&torus, &line, sel.center)?;
    let chi0_line = build_line_cutoff(&sel, 0, &line)?;
    let chi2_line = build_line_cutoff(&sel, 2, &line)?;
    let chij_line = build_line_cutoff(&sel, cfg.level, &line)?;
    let torus_cfg = cfg.solver(Truncation::TorusLowPass(e.n_freq))?;
    let line_cfg = cfg.solver(Truncation::LowPass(e.n_freq))?;
    let bufs = Buffers {
        d1: spectral_derivative(&line, &chi2_line.values, 1),
        d2: spectral_derivative(&line, &chi2_line.values, 2),
        compl_j_line: chij_line.complement(),
        chi2_torus: build_cutoff(&sel, 2, &torus)?.values,
        chi3_torus: build_cutoff(&sel, 3, &torus)?.values,
        p_torus: torus_cfg.projector(&torus).expect("truncated"),
        p2_torus: MultiplierSymbol::LowPass { cutoff: band }.sample_real(&torus),
        p_line: line_cfg.projector(&line).expect("truncated"),
        chi2_line: chi2_line.values,
        coupling: torus_cfg.coupling(),
        band,
        torus: torus.clone(),
        line: line.clone(),
        emb: emb.clone(),
    };
    let v0 = chi0_line.apply(&emb.lift(&u0)?);

    let spacing = cfg.dt * cfg.stride as f64;
    let interior = cfg.interior_fraction * e.circumference;
    let mut m = Meters {
        err: StrichartzAccumulator::new(spacing),
        interior: StrichartzAccumulator::windowed(spacing, &torus, interior)?,
        deriv: pair(spacing),
        p2p: pair(spacing),
        comm: pair(spacing),
        mass_loc: 0.0,
        initial_error: 0.0,
        z0_high: 0.0,
    };
    let steps = torus_cfg.steps();
    let eps = 1e-9 * cfg.dt;
    let directions: &[f64] = if cfg.symmetric { &[1.0, -1.0] } else { &[1.0] };
    for &dir in directions {
        let (mut st, mut sl) = if dir > 0.0 {
            (Stepper::new(&torus, &torus_cfg)?, Stepper::new(&line, &line_cfg)?)
        } else {
            (Stepper::backward(&torus, &torus_cfg)?, Stepper::backward(&line, &line_cfg)?)
        };
        let mut ut = u0.to_spectral().into_values();
        let mut ul = v0.to_spectral().into_values();
        for i in 0..=steps {
            if i > 0 {
                st.step(&mut ut);
                sl.step(&mut ul);
                if !finite(&ut) || !finite(&ul) {
                    return Err(LabError::numeric(format!(
                        "approximation entry {} blew up at step {i} (t = {})",
                        e.n,
                        dir * i as f64 * cfg.dt
                    )));
                }
            }
            if i % cfg.stride != 0 {
                continue;
            }
            let t = dir * i as f64 * cfg.dt;
            let duplicate = dir < 0.0 && i == 0;
            let in_window = !duplicate && t < cfg.horizon - eps;
            if duplicate {
                continue;
            }
            bufs.observe(&mut m, t, in_window, &ut, &ul)?;
        }
    }
    Ok(EntryResult {
        error: m.err.value(),
        interior_error: m.interior.value(),
        initial_error: m.initial_error,
        mass_localization: m.mass_loc,
        deriv_l1l2: m.deriv[0].value(),
        deriv_l65: m.deriv[1].value(),
        p2p_l1l2: m.p2p[0].value(),
        p2p_l65: m.p2p[1].value(),
        comm_l1l2: m.comm[0].value(),
        comm_l65: m.comm[1].value(),
        z0_high_band: m.z0_high,
        interval_center: sel.center,
        boundary_mass: sel.boundary_mass.unwrap_or(0.0),
        data_norm: u0.l2_norm(),
    })
}

fn run_all(cfg: &ApproxConfig) -> Result<Vec<EntryResult>> {
    cfg.validate()?;
    cfg.schedule.par_iter().map(|e| run_entry(cfg, e)).collect()
}

fn base_report(name: &str, cfg: &ApproxConfig, results: &[EntryResult]) -> ExperimentReport {
    let mut rep = ExperimentReport::new(name).with_seed(cfg.data.seed);
    let col = |f: fn(&EntryResult) -> f64| results.iter().map(f).collect::<Vec<_>>();
    rep.series("n_freq", cfg.schedule.iter().map(|e| e.n_freq).collect());
    rep.series("circumference", cfg.schedule.iter().map(|e| e.circumference).collect());
    rep.series("eta", cfg.schedule.iter().map(|e| e.eta).collect());
    rep.series("mass_localization", col(|r| r.mass_localization));
    rep.series("interval_center", col(|r| r.interval_center));
    rep.series("boundary_mass", col(|r| r.boundary_mass));
    rep.series("data_norm", col(|r| r.data_norm));
    rep.scalar("mass_bound", cfg.mass_bound);
    rep.scalar("horizon", cfg.horizon);
    rep.scalar("level", cfg.level as f64);
    rep.note("generator", cfg.data.generator.name());
    rep
}

/// `||P^L_{<=2N}(chi^2 v) - u||_S` per schedule entry, with the residual terms
/// of the stability argument and the mass-localization series.
pub fn run_approximation(cfg: &ApproxConfig) -> Result<ExperimentReport> {
    let results = run_all(cfg)?;
    let mut rep = base_report("approx", cfg, &results);
    let col = |f: fn(&EntryResult) -> f64| results.iter().map(f).collect::<Vec<_>>();
    rep.series("error", col(|r| r.error));
    rep.series("interior_error", col(|r| r.interior_error));
    rep.series("initial_error", col(|r| r.initial_error));
    rep.series("z0_high_band", col(|r| r.z0_high_band));
    rep.series("deriv_l1l2", col(|r| r.deriv_l1l2));
    rep.series("deriv_l6_5", col(|r| r.deriv_l65));
    rep.series("p2p_l1l2", col(|r| r.p2p_l1l2));
    rep.series("p2p_l6_5", col(|r| r.p2p_l65));
    rep.series("comm_l1l2", col(|r| r.comm_l1l2));
    rep.series("comm_l6_5", col(|r| r.comm_l65));
    let last = results.last().expect("schedule is non-empty");
    rep.scalar("final_error", last.error);
    rep.scalar("final_interior_error", last.interior_error);
    rep.judge("error_decreasing", Rule::Decreasing("error".into()));
    rep.judge("final_error_small", Rule::AtMost("final_error".into(), 0.1 * cfg.mass_bound));
    rep.judge("mass_localization_decreasing", Rule::Decreasing("mass_localization".into()));
    Ok(rep)
}

/// `sup_t ||(1 - chi^j) v(t)||_2` per schedule entry.
pub fn run_mass_localization(cfg: &ApproxConfig) -> Result<ExperimentReport> {
    let results = run_all(cfg)?;
    let mut rep = base_report("mass-loc", cfg, &results);
    rep.scalar("final_mass_localization", results.last().expect("non-empty").mass_localization);
    rep.judge("mass_localization_decreasing", Rule::Decreasing("mass_localization".into()));
    Ok(rep)
}
