//! Split-step integration of `(i d_t + Delta) u = P F(P u) + e`.
//!
//! Each step is a Strang splitting: half a step of the exact linear
//! propagator, a full nonlinear substep, another linear half step. Without a
//! projection the cubic substep is the exact phase rotation
//! `u -> u exp(-i sigma |u|^2 dt)`; with `P = P_{<=N}` the substep is one
//! classical RK4 step, since the projected nonlinearity is no longer a
//! pointwise phase flow. The state is kept in spectral form between steps.

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::spectral::{free_evolve, ComplexField, Grid, MultiplierSymbol, Representation};

const DEFAULT_MASS_BOUND: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Defocusing,
    Focusing,
}

impl Sign {
    pub fn sigma(self) -> f64 {
        match self {
            Sign::Defocusing => 1.0,
            Sign::Focusing => -1.0,
        }
    }
}

/// Which projection `P` wraps the nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    None,
    /// `P_{<=N}` of the line, realized on a surrogate torus.
    LowPass(f64),
    /// `P^L_{<=N}` of the torus the grid lives on.
    TorusLowPass(f64),
}

impl Truncation {
    pub fn cutoff(self) -> Option<f64> {
        match self {
            Truncation::None => None,
            Truncation::LowPass(n) | Truncation::TorusLowPass(n) => Some(n),
        }
    }

    /// Same cutoff on the other domain.
    pub fn on_line(self) -> Self {
        match self {
            Truncation::TorusLowPass(n) => Truncation::LowPass(n),
            t => t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegratorKind {
    StrangExactPhase,
    StrangRk4,
}

impl IntegratorKind {
    pub fn for_truncation(t: Truncation) -> Self {
        match t {
            Truncation::None => IntegratorKind::StrangExactPhase,
            _ => IntegratorKind::StrangRk4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub sign: Sign,
    pub truncation: Truncation,
    pub dt: f64,
    pub horizon: f64,
    pub stride: usize,
    pub integrator: IntegratorKind,
    /// Test hook: `false` drops the cubic term entirely.
    pub nonlinear: bool,
    /// Largest admissible `||u0||_2`.
    pub mass_bound: f64,
}

impl SolverConfig {
    pub fn new(sign: Sign, truncation: Truncation, dt: f64, horizon: f64) -> Result<Self> {
        let cfg = SolverConfig {
            sign,
            truncation,
            dt,
            horizon,
            stride: 1,
            integrator: IntegratorKind::for_truncation(truncation),
            nonlinear: true,
            mass_bound: DEFAULT_MASS_BOUND,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_stride(mut self, stride: usize) -> Result<Self> {
        self.stride = stride;
        self.validate()?;
        Ok(self)
    }

    pub fn with_mass_bound(mut self, bound: f64) -> Self {
        self.mass_bound = bound;
        self
    }

    /// Disables the nonlinearity (linear control runs).
    pub fn linear(mut self) -> Self {
        self.nonlinear = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(LabError::config(format!("solver.dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(LabError::config(format!("solver.horizon must be positive, got {}", self.horizon)));
        }
        if self.dt > self.horizon {
            return Err(LabError::config("solver.dt must not exceed solver.horizon"));
        }
        if self.stride == 0 {
            return Err(LabError::config("solver.stride must be >= 1"));
        }
        if let Some(n) = self.truncation.cutoff() {
            if !(n > 0.0 && n.is_finite()) {
                return Err(LabError::config(format!("solver.cutoff must be positive, got {n}")));
            }
        }
        if self.integrator != IntegratorKind::for_truncation(self.truncation) {
            return Err(LabError::config(format!(
                "integrator {:?} is incompatible with truncation {:?}",
                self.integrator, self.truncation
            )));
        }
        let steps = self.horizon / self.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return Err(LabError::config(format!(
                "solver.horizon {} is not an integer multiple of solver.dt {}",
                self.horizon, self.dt
            )));
        }
        if !(steps.round() as usize).is_multiple_of(self.stride) {
            return Err(LabError::config(format!(
                "solver.stride {} does not divide the {} steps",
                self.stride,
                steps.round()
            )));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    /// Effective nonlinear coefficient (0 when the nonlinearity is disabled).
    pub fn coupling(&self) -> f64 {
        if self.nonlinear {
            self.sign.sigma()
        } else {
            0.0
        }
    }

    pub fn projector(&self, grid: &Grid) -> Option<Vec<f64>> {
        self.truncation
            .cutoff()
            .map(|cutoff| MultiplierSymbol::LowPass { cutoff }.sample_real(grid))
    }
}

/// Uniformly sampled solution, snapshots in physical representation.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub config: SolverConfig,
    pub grid: Grid,
    pub t0: f64,
    pub spacing: f64,
    pub fields: Vec<ComplexField>,
    /// Largest relative mass deviation from the first snapshot.
    pub mass_drift: f64,
}

impl Trajectory {
    pub fn new(config: SolverConfig, grid: Grid, t0: f64, spacing: f64, fields: Vec<ComplexField>) -> Result<Self> {
        if fields.len() > 1 && !(spacing > 0.0 && spacing.is_finite()) {
            return Err(LabError::config(format!("snapshot spacing must be positive, got {spacing}")));
        }
        let mut phys = Vec::with_capacity(fields.len());
        for f in fields {
            grid.ensure_same(f.grid())?;
            phys.push(f.into_physical());
        }
        let mass_drift = mass_drift(&phys);
        Ok(Trajectory {
            config,
            grid,
            t0,
            spacing,
            fields: phys,
            mass_drift,
        })
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn time(&self, s: usize) -> f64 {
        self.t0 + s as f64 * self.spacing
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.fields.len()).map(|s| self.time(s)).collect()
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.fields.len().saturating_sub(1))
    }

    /// Index of the snapshot at time `t`, if `t` is on the sampling lattice.
    pub fn index_at(&self, t: f64) -> Option<usize> {
        let s = (t - self.t0) / self.spacing;
        let r = s.round();
        if (s - r).abs() > 1e-6 || r < 0.0 || r as usize >= self.fields.len() {
            None
        } else {
            Some(r as usize)
        }
    }
}

fn mass_drift(fields: &[ComplexField]) -> f64 {
    let Some(first) = fields.first() else { return 0.0 };
    let m0 = first.mass();
    if m0 == 0.0 {
        return fields.iter().map(|f| f.mass()).fold(0.0, f64::max);
    }
    fields
        .iter()
        .map(|f| (f.mass() - m0).abs() / m0)
        .fold(0.0, f64::max)
}

/// Reusable integrator for one grid and configuration.
pub struct Stepper {
    grid: Grid,
    dt: f64,
    coupling: f64,
    kind: IntegratorKind,
    half_phase: Vec<Complex64>,
    projector: Option<Vec<f64>>,
    forcing: Option<Vec<Complex64>>,
    scratch: Scratch,
}

struct Scratch {
    work: Vec<Complex64>,
    stage: Vec<Complex64>,
    k: [Vec<Complex64>; 4],
}

impl Scratch {
    fn new(n: usize) -> Self {
        let z = || vec![Complex64::new(0.0, 0.0); n];
        Scratch {
            work: z(),
            stage: z(),
            k: [z(), z(), z(), z()],
        }
    }
}

/// `out = -i (coupling * P(|P u|^2 P u) + e)`, all spectral.
fn rhs(
    grid: &Grid,
    coupling: f64,
    projector: Option<&[f64]>,
    forcing: Option<&[Complex64]>,
    input: &[Complex64],
    out: &mut [Complex64],
    work: &mut [Complex64],
) {
    let minus_i = Complex64::new(0.0, -1.0);
    if coupling != 0.0 {
        match projector {
            Some(p) => work.iter_mut().zip(input).zip(p).for_each(|((w, u), m)| *w = u * m),
            None => work.copy_from_slice(input),
        }
        grid.fft_inverse(work);
        work.iter_mut().for_each(|w| *w *= coupling * w.norm_sqr());
        grid.fft_forward(work);
        if let Some(p) = projector {
            work.iter_mut().zip(p).for_each(|(w, m)| *w *= m);
        }
        out.iter_mut().zip(work.iter()).for_each(|(o, w)| *o = minus_i * w);
    } else {
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
    }
    if let Some(e) = forcing {
        out.iter_mut().zip(e).for_each(|(o, e)| *o += minus_i * e);
    }
}

impl Stepper {
    pub fn new(grid: &Grid, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self::with_dt(grid, cfg, cfg.dt))
    }

    fn with_dt(grid: &Grid, cfg: &SolverConfig, dt: f64) -> Self {
        let half_phase = MultiplierSymbol::FreePropagator { time: dt / 2.0 }.sample(grid);
        Stepper {
            grid: grid.clone(),
            dt,
            coupling: cfg.coupling(),
            kind: cfg.integrator,
            half_phase,
            projector: cfg.projector(grid),
            forcing: None,
            scratch: Scratch::new(grid.points()),
        }
    }

    /// A stepper running the same scheme backwards in time.
    pub fn backward(grid: &Grid, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self::with_dt(grid, cfg, -cfg.dt))
    }

    /// Adds a time-independent forcing `e` to the right-hand side.
    pub fn with_forcing(mut self, forcing: &ComplexField) -> Result<Self> {
        self.grid.ensure_same(forcing.grid())?;
        if self.kind == IntegratorKind::StrangExactPhase {
            return Err(LabError::config("forcing requires the strang-rk4 integrator"));
        }
        self.forcing = Some(forcing.to_spectral().into_values());
        Ok(self)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn linear_half(&self, state: &mut [Complex64]) {
        state.iter_mut().zip(&self.half_phase).for_each(|(u, p)| *u *= p);
    }

    fn nonlinear_substep(&mut self, state: &mut [Complex64]) {
        if self.coupling == 0.0 && self.forcing.is_none() {
            return;
        }
        let dt = self.dt;
        match self.kind {
            IntegratorKind::StrangExactPhase => {
                let c = self.coupling;
                self.grid.fft_inverse(state);
                state
                    .iter_mut()
                    .for_each(|u| *u *= Complex64::from_polar(1.0, -c * u.norm_sqr() * dt));
                self.grid.fft_forward(state);
            }
            IntegratorKind::StrangRk4 => {
                let Scratch { work, stage, k } = &mut self.scratch;
                let proj = self.projector.as_deref();
                let forcing = self.forcing.as_deref();
                let [k1, k2, k3, k4] = k;
                rhs(&self.grid, self.coupling, proj, forcing, state, k1, work);
                stage.iter_mut().zip(state.iter()).zip(k1.iter()).for_each(|((s, u), k)| *s = u + 0.5 * dt * k);
                rhs(&self.grid, self.coupling, proj, forcing, stage, k2, work);
                stage.iter_mut().zip(state.iter()).zip(k2.iter()).for_each(|((s, u), k)| *s = u + 0.5 * dt * k);
                rhs(&self.grid, self.coupling, proj, forcing, stage, k3, work);
                stage.iter_mut().zip(state.iter()).zip(k3.iter()).for_each(|((s, u), k)| *s = u + dt * k);
                rhs(&self.grid, self.coupling, proj, forcing, stage, k4, work);
                for i in 0..state.len() {
                    state[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
        }
    }

    /// Advances a spectral state by one step.
    pub fn step(&mut self, state: &mut [Complex64]) {
        self.linear_half(state);
        self.nonlinear_substep(state);
        self.linear_half(state);
    }
}

/// `P(sigma |P u|^2 P u)` in physical representation.
pub fn nonlinear_term(u: &ComplexField, cfg: &SolverConfig) -> ComplexField {
    let grid = u.grid().clone();
    let n = grid.points();
    let spec = u.to_spectral().into_values();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    let mut work = vec![Complex64::new(0.0, 0.0); n];
    let proj = cfg.projector(&grid);
    rhs(&grid, cfg.coupling(), proj.as_deref(), None, &spec, &mut out, &mut work);
    // rhs returns -i N(u)
    out.iter_mut().for_each(|v| *v *= Complex64::i());
    ComplexField::from_parts_unchecked(grid, out, Representation::Spectral).into_physical()
}

/// One step of length `cfg.dt`, returned in the input representation.
pub fn step(u: &ComplexField, cfg: &SolverConfig) -> Result<ComplexField> {
    let mut stepper = Stepper::new(u.grid(), cfg)?;
    let repr = u.representation();
    let mut state = u.to_spectral().into_values();
    stepper.step(&mut state);
    let out = ComplexField::new(u.grid().clone(), state, Representation::Spectral)
        .map_err(|e| LabError::numeric(format!("step 1: {e}")))?;
    Ok(out.into_representation(repr))
}

fn check_data(u0: &ComplexField, cfg: &SolverConfig) -> Result<()> {
    if !u0.is_finite() {
        return Err(LabError::numeric("initial data is not finite"));
    }
    let norm = u0.l2_norm();
    if norm > cfg.mass_bound * (1.0 + 1e-12) {
        return Err(LabError::config(format!(
            "initial L2 norm {norm} exceeds solver.mass-bound {}",
            cfg.mass_bound
        )));
    }
    Ok(())
}

/// Result of a streaming solve.
#[derive(Debug, Clone)]
pub struct SolveSummary {
    pub final_state: ComplexField,
    pub snapshots: usize,
    pub mass_drift: f64,
}

/// Runs `stepper` for `steps` steps from `u0`, calling `observer` with every
/// `stride`-th state (including the first) in physical representation.
pub fn run_observed(
    stepper: &mut Stepper,
    u0: &ComplexField,
    steps: usize,
    stride: usize,
    mut observer: impl FnMut(usize, f64, &ComplexField) -> Result<()>,
) -> Result<SolveSummary> {
    let grid = u0.grid().clone();
    let mut state = u0.to_spectral().into_values();
    let m0 = u0.mass();
    let mut drift: f64 = 0.0;
    let mut snap = 0;
    let mut emit = |state: &[Complex64], t: f64, snap: &mut usize, drift: &mut f64| -> Result<()> {
        let f = ComplexField::from_parts_unchecked(grid.clone(), state.to_vec(), Representation::Spectral);
        let m = f.mass();
        *drift = drift.max(if m0 > 0.0 { (m - m0).abs() / m0 } else { m });
        observer(*snap, t, &f.into_physical())?;
        *snap += 1;
        Ok(())
    };
    let dt = stepper.dt();
    emit(&state, 0.0, &mut snap, &mut drift)?;
    for i in 1..=steps {
        stepper.step(&mut state);
        if state.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(LabError::numeric(format!(
                "solution blew up at step {i} (t = {})",
                i as f64 * dt
            )));
        }
        if i % stride == 0 {
            emit(&state, i as f64 * dt, &mut snap, &mut drift)?;
        }
    }
    let final_state = ComplexField::from_parts_unchecked(grid, state, Representation::Spectral).into_physical();
    Ok(SolveSummary {
        final_state,
        snapshots: snap,
        mass_drift: drift,
    })
}

fn collect(mut stepper: Stepper, u0: &ComplexField, cfg: &SolverConfig) -> Result<Trajectory> {
    let mut fields = Vec::with_capacity(cfg.steps() / cfg.stride + 1);
    let summary = run_observed(&mut stepper, u0, cfg.steps(), cfg.stride, |_, _, f| {
        fields.push(f.clone());
        Ok(())
    })?;
    let spacing = stepper.dt() * cfg.stride as f64;
    Ok(Trajectory {
        config: cfg.clone(),
        grid: u0.grid().clone(),
        t0: 0.0,
        spacing,
        fields,
        mass_drift: summary.mass_drift,
    })
}

/// Solution on `[0, T]` sampled every `stride` steps.
pub fn solve(u0: &ComplexField, cfg: &SolverConfig) -> Result<Trajectory> {
    check_data(u0, cfg)?;
    collect(Stepper::new(u0.grid(), cfg)?, u0, cfg)
}

/// As [`solve`], with a time-independent forcing on the right-hand side.
pub fn solve_forced(u0: &ComplexField, cfg: &SolverConfig, forcing: &ComplexField) -> Result<Trajectory> {
    check_data(u0, cfg)?;
    collect(Stepper::new(u0.grid(), cfg)?.with_forcing(forcing)?, u0, cfg)
}

/// Solution on `[-T, T]` from two independent solves started at `t = 0`.
pub fn solve_symmetric(u0: &ComplexField, cfg: &SolverConfig) -> Result<Trajectory> {
    check_data(u0, cfg)?;
    let fwd = collect(Stepper::new(u0.grid(), cfg)?, u0, cfg)?;
    let bwd = collect(Stepper::backward(u0.grid(), cfg)?, u0, cfg)?;
    let spacing = fwd.spacing;
    let mut fields: Vec<ComplexField> = bwd.fields.into_iter().skip(1).rev().collect();
    fields.extend(fwd.fields);
    Ok(Trajectory {
        config: cfg.clone(),
        grid: u0.grid().clone(),
        t0: -cfg.horizon,
        spacing,
        fields,
        mass_drift: fwd.mass_drift.max(bwd.mass_drift),
    })
}

/// `||u(T) - [e^{iT Delta} u(t0) - i int e^{i(T-s) Delta} P F(P u(s)) ds]||_2 / ||u(t0)||_2`
/// with the integral taken by the trapezoid rule over the snapshots.
pub fn duhamel_residual(traj: &Trajectory) -> Result<f64> {
    if traj.len() < 3 {
        return Err(LabError::config(format!(
            "duhamel residual needs >= 3 snapshots, got {}",
            traj.len()
        )));
    }
    let n = traj.len();
    let span = traj.end_time() - traj.t0;
    let u0 = &traj.fields[0];
    let mut duhamel = free_evolve(&u0.to_spectral(), span)?;
    let h = traj.spacing;
    for (s, field) in traj.fields.iter().enumerate() {
        let w = if s == 0 || s == n - 1 { 0.5 * h } else { h };
        let g = nonlinear_term(field, &traj.config);
        let lag = traj.end_time() - traj.time(s);
        let propagated = free_evolve(&g.to_spectral(), lag)?;
        duhamel = duhamel.add(&propagated.scaled(Complex64::new(0.0, -w)))?;
    }
    let resid = traj.fields[n - 1].sub(&duhamel)?.l2_norm();
    let norm = u0.l2_norm();
    Ok(if norm == 0.0 { resid } else { resid / norm })
}
