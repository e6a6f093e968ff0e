//! Run configuration files.
//!
//! Flat `section.key = value` lines (TOML syntax), `#` comments. Every key is
//! consumed by the reader of the selected subcommand; anything left over is
//! an error naming its line.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use super::report::{format_float, quote};
use super::snapshot::fnv1a;
use crate::diagnostics::PowerIteration;
use crate::dynamics::{Sign, SolverConfig, Truncation};
use crate::error::{LabError, Result};
use crate::experiments::witness::WitnessProblem;
use crate::experiments::{
    schedule_from_lists, ApproxConfig, DataGenerator, DataSpec, Escape, LpConfig, NormsConfig, OptimizerConfig,
    PerturbConfig, PigeonholeConfig, ScheduleEntry, SolveConfig, SolveTolerances, WeakWpConfig, WitnessConfig,
};

pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Command {
    Solve,
    Approx,
    MassLoc,
    WeakWp,
    Perturb,
    LpCheck,
    Pigeonhole,
    Witness,
    Norms,
}

impl Command {
    pub const ALL: [Command; 9] = [
        Command::Solve,
        Command::Approx,
        Command::MassLoc,
        Command::WeakWp,
        Command::Perturb,
        Command::LpCheck,
        Command::Pigeonhole,
        Command::Witness,
        Command::Norms,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Approx => "approx",
            Command::MassLoc => "mass-loc",
            Command::WeakWp => "weak-wp",
            Command::Perturb => "perturb",
            Command::LpCheck => "lp-check",
            Command::Pigeonhole => "pigeonhole",
            Command::Witness => "witness",
            Command::Norms => "norms",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Command::ALL.into_iter().find(|c| c.name() == name)
    }

    /// Keys without a default.
    pub fn required_keys(self) -> &'static [&'static str] {
        match self {
            Command::Solve => &[
                "grid.circumference",
                "grid.points",
                "solver.dt",
                "solver.horizon",
                "data.generator",
            ],
            _ => &[],
        }
    }
}

/// A parsed scalar or array value.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigValue {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
    List(Vec<f64>),
}

impl ConfigValue {
    fn kind(&self) -> &'static str {
        match self {
            ConfigValue::Int(_) => "an integer",
            ConfigValue::Float(_) => "a number",
            ConfigValue::Bool(_) => "a boolean",
            ConfigValue::Str(_) => "a string",
            ConfigValue::List(_) => "an array",
        }
    }
}

/// The typed configuration of one subcommand.
#[derive(Debug, Clone, PartialEq)]
pub enum Job {
    Solve(SolveConfig),
    Approx(ApproxConfig),
    MassLoc(ApproxConfig),
    WeakWp(WeakWpConfig),
    Perturb(PerturbConfig),
    LpCheck(LpConfig),
    Pigeonhole(PigeonholeConfig),
    Witness(WitnessConfig),
    Norms(NormsConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    /// Snapshot file name written by `solve`.
    pub snapshot: String,
    pub job: Job,
}

/// 1-based line on which `key` is assigned, honouring `[table]` headers.
pub fn line_of(text: &str, key: &str) -> Option<usize> {
    let mut table = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.starts_with('[') && line.ends_with(']') {
            table = normalize_key(line.trim_matches(|c| c == '[' || c == ']'));
            continue;
        }
        let Some((lhs, _)) = line.split_once('=') else { continue };
        let lhs = normalize_key(lhs);
        let full = if table.is_empty() { lhs } else { format!("{table}.{lhs}") };
        if full == key {
            return Some(i + 1);
        }
    }
    None
}

fn normalize_key(k: &str) -> String {
    k.split('.')
        .map(|s| s.trim().trim_matches('"'))
        .collect::<Vec<_>>()
        .join(".")
}

pub fn describe_toml_error(text: &str, e: &toml::de::Error) -> String {
    let msg = e.message().trim().to_string();
    match e.span() {
        Some(span) => format!("line {}: {msg}", text[..span.start.min(text.len())].matches('\n').count() + 1),
        None => msg,
    }
}

fn flatten(prefix: &str, v: toml::Value, out: &mut Vec<(String, toml::Value)>) {
    match v {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let name = if prefix.is_empty() { k } else { format!("{prefix}.{k}") };
                flatten(&name, v, out);
            }
        }
        other => out.push((prefix.to_string(), other)),
    }
}

/// Parses config text into dotted keys with their line numbers.
pub fn parse_entries(text: &str) -> Result<BTreeMap<String, (ConfigValue, usize)>> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| LabError::config(describe_toml_error(text, &e)))?;
    let mut flat = Vec::new();
    flatten("", toml::Value::Table(table), &mut flat);
    let mut out = BTreeMap::new();
    for (key, v) in flat {
        let line = line_of(text, &key).unwrap_or(0);
        let bad = |what: &str| LabError::config(format!("line {line}: key '{key}': {what}"));
        let value = match v {
            toml::Value::Integer(i) => ConfigValue::Int(i),
            toml::Value::Float(f) => ConfigValue::Float(f),
            toml::Value::Boolean(b) => ConfigValue::Bool(b),
            toml::Value::String(s) => ConfigValue::Str(s),
            toml::Value::Array(a) => ConfigValue::List(
                a.iter()
                    .map(|x| match x {
                        toml::Value::Integer(i) => Ok(*i as f64),
                        toml::Value::Float(f) => Ok(*f),
                        _ => Err(bad("arrays may contain numbers only")),
                    })
                    .collect::<Result<_>>()?,
            ),
            _ => return Err(bad("unsupported value type")),
        };
        out.insert(key, (value, line));
    }
    Ok(out)
}

/// Typed access to the entries; every read marks the key as used.
struct Reader<'a> {
    entries: &'a BTreeMap<String, (ConfigValue, usize)>,
    used: BTreeSet<String>,
}

impl<'a> Reader<'a> {
    fn new(entries: &'a BTreeMap<String, (ConfigValue, usize)>) -> Self {
        Reader {
            entries,
            used: BTreeSet::new(),
        }
    }

    fn err(&self, key: &str, what: impl std::fmt::Display) -> LabError {
        match self.entries.get(key) {
            Some((_, line)) => LabError::config(format!("line {line}: key '{key}': {what}")),
            None => LabError::config(format!("key '{key}': {what}")),
        }
    }

    fn get(&mut self, key: &str) -> Option<&'a ConfigValue> {
        let v = self.entries.get(key).map(|(v, _)| v);
        if v.is_some() {
            self.used.insert(key.to_string());
        }
        v
    }

    fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn opt_f64(&mut self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(ConfigValue::Float(f)) => Ok(Some(*f)),
            Some(ConfigValue::Int(i)) => Ok(Some(*i as f64)),
            Some(v) => Err(self.err(key, format!("expected a number, found {}", v.kind()))),
        }
    }

    fn f64(&mut self, key: &str, default: f64) -> Result<f64> {
        Ok(self.opt_f64(key)?.unwrap_or(default))
    }

    fn required_f64(&mut self, key: &str) -> Result<f64> {
        self.opt_f64(key)?.ok_or_else(|| self.err(key, "is required"))
    }

    fn opt_u64(&mut self, key: &str) -> Result<Option<u64>> {
        match self.get(key) {
            None => Ok(None),
            Some(ConfigValue::Int(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(v) => Err(self.err(key, format!("expected a non-negative integer, found {}", v.kind()))),
        }
    }

    fn usize(&mut self, key: &str, default: usize) -> Result<usize> {
        Ok(self.opt_u64(key)?.map_or(default, |v| v as usize))
    }

    fn pow2(&mut self, key: &str, default: Option<usize>) -> Result<usize> {
        let v = match (self.opt_u64(key)?, default) {
            (Some(v), _) => v as usize,
            (None, Some(d)) => d,
            (None, None) => return Err(self.err(key, "is required")),
        };
        if !v.is_power_of_two() {
            return Err(self.err(key, format!("must be a power of two, got {v}")));
        }
        Ok(v)
    }

    fn bool(&mut self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some(ConfigValue::Bool(b)) => Ok(*b),
            Some(v) => Err(self.err(key, format!("expected a boolean, found {}", v.kind()))),
        }
    }

    fn opt_str(&mut self, key: &str) -> Result<Option<&'a str>> {
        match self.get(key) {
            None => Ok(None),
            Some(ConfigValue::Str(s)) => Ok(Some(s.as_str())),
            Some(v) => Err(self.err(key, format!("expected a string, found {}", v.kind()))),
        }
    }

    fn opt_list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.get(key) {
            None => Ok(None),
            Some(ConfigValue::List(v)) => Ok(Some(v.clone())),
            Some(v) => Err(self.err(key, format!("expected an array of numbers, found {}", v.kind()))),
        }
    }

    fn list(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        Ok(self.opt_list(key)?.unwrap_or_else(|| default.to_vec()))
    }

    fn sign(&mut self, key: &str, default: Sign) -> Result<Sign> {
        match self.opt_str(key)? {
            None => Ok(default),
            Some("defocusing") => Ok(Sign::Defocusing),
            Some("focusing") => Ok(Sign::Focusing),
            Some(other) => Err(self.err(key, format!("expected \"defocusing\" or \"focusing\", got \"{other}\""))),
        }
    }

    /// Wraps a validation error with the line of `key`.
    fn check<T>(&self, key: &str, r: Result<T>) -> Result<T> {
        r.map_err(|e| match e {
            LabError::Config(m) => self.err(key, m),
            other => other,
        })
    }

    fn finish(&self, command: Command) -> Result<()> {
        for (key, (_, line)) in self.entries {
            if self.used.contains(key) {
                continue;
            }
            let known = Command::ALL.iter().any(|c| c.sections().iter().any(|s| key.starts_with(&format!("{s}."))));
            let what = if key.starts_with("data.") && command.sections().contains(&"data") {
                "does not apply to the selected data generator".to_string()
            } else if known {
                format!("is not used by subcommand {}", command.name())
            } else {
                "unknown key".to_string()
            };
            return Err(LabError::config(format!("line {line}: key '{key}': {what}")));
        }
        Ok(())
    }
}

impl Command {
    fn sections(self) -> &'static [&'static str] {
        match self {
            Command::Solve => &["run", "output", "grid", "solver", "data", "tolerance"],
            Command::Approx | Command::MassLoc => &["run", "output", "schedule", "approx", "data"],
            Command::WeakWp => &["run", "output", "weak"],
            Command::Perturb => &["run", "output", "perturb", "data"],
            Command::LpCheck => &["run", "output", "lp"],
            Command::Pigeonhole => &["run", "output", "pigeonhole"],
            Command::Witness => &["run", "output", "witness"],
            Command::Norms => &["run", "output", "norms", "data"],
        }
    }
}

/// Emits `key = value` lines.
#[derive(Default)]
struct Writer {
    out: String,
    section: String,
}

impl Writer {
    fn line(&mut self, key: &str, value: String) {
        let section = key.split('.').next().unwrap_or("").to_string();
        if !self.out.is_empty() && section != self.section {
            self.out.push('\n');
        }
        self.section = section;
        self.out += &format!("{key} = {value}\n");
    }

    fn f64(&mut self, key: &str, v: f64) {
        self.line(key, format_float(v));
    }

    fn int(&mut self, key: &str, v: u64) {
        self.line(key, v.to_string());
    }

    fn bool(&mut self, key: &str, v: bool) {
        self.line(key, v.to_string());
    }

    fn str(&mut self, key: &str, v: &str) {
        self.line(key, quote(v));
    }

    fn list(&mut self, key: &str, v: &[f64]) {
        let items: Vec<String> = v.iter().map(|x| format_float(*x)).collect();
        self.line(key, format!("[{}]", items.join(", ")));
    }

    fn sign(&mut self, key: &str, s: Sign) {
        self.str(key, sign_name(s));
    }
}

fn sign_name(s: Sign) -> &'static str {
    match s {
        Sign::Defocusing => "defocusing",
        Sign::Focusing => "focusing",
    }
}

fn truncation_name(t: Truncation) -> &'static str {
    match t {
        Truncation::None => "none",
        Truncation::LowPass(_) => "low-pass",
        Truncation::TorusLowPass(_) => "torus-low-pass",
    }
}

fn read_truncation(r: &mut Reader, prefix: &str, default: Truncation) -> Result<Truncation> {
    let tkey = format!("{prefix}.truncation");
    let ckey = format!("{prefix}.cutoff");
    let name = r.opt_str(&tkey)?.unwrap_or(truncation_name(default));
    let cutoff = r.opt_f64(&ckey)?;
    let t = match name {
        "none" => {
            if cutoff.is_some() {
                return Err(r.err(&ckey, "given but the truncation is \"none\""));
            }
            Truncation::None
        }
        "low-pass" | "torus-low-pass" => {
            let n = cutoff.or(default.cutoff()).ok_or_else(|| r.err(&ckey, "is required for a low-pass truncation"))?;
            if name == "low-pass" {
                Truncation::LowPass(n)
            } else {
                Truncation::TorusLowPass(n)
            }
        }
        other => {
            return Err(r.err(
                &tkey,
                format!("expected \"none\", \"low-pass\" or \"torus-low-pass\", got \"{other}\""),
            ))
        }
    };
    Ok(t)
}

fn write_truncation(w: &mut Writer, prefix: &str, t: Truncation) {
    w.str(&format!("{prefix}.truncation"), truncation_name(t));
    if let Some(n) = t.cutoff() {
        w.f64(&format!("{prefix}.cutoff"), n);
    }
}

fn generator_default(name: &str) -> Option<DataGenerator> {
    Some(match name {
        "zero" => DataGenerator::Zero,
        "plane-wave" => DataGenerator::PlaneWave { xi: 0.0 },
        "soliton" => DataGenerator::Soliton { center: 0.0 },
        "gaussian" => DataGenerator::Gaussian { width: 1.0, center: 0.0 },
        "localized" => DataGenerator::Localized {
            scale: 4.0,
            center: 0.0,
            period: 32.0,
        },
        "spread" => DataGenerator::Spread,
        _ => return None,
    })
}

fn read_data(r: &mut Reader, default: Option<&DataSpec>, seed: u64) -> Result<DataSpec> {
    let base = match (r.opt_str("data.generator")?, default) {
        (Some(name), d) => {
            let g = generator_default(name).ok_or_else(|| {
                r.err(
                    "data.generator",
                    format!("unknown generator \"{name}\" (zero, plane-wave, soliton, gaussian, localized, spread)"),
                )
            })?;
            match d {
                Some(d) if d.generator.name() == name => d.generator.clone(),
                _ => g,
            }
        }
        (None, Some(d)) => d.generator.clone(),
        (None, None) => return Err(r.err("data.generator", "is required")),
    };
    let generator = match base {
        DataGenerator::Zero => DataGenerator::Zero,
        DataGenerator::Spread => DataGenerator::Spread,
        DataGenerator::PlaneWave { xi } => DataGenerator::PlaneWave { xi: r.f64("data.xi", xi)? },
        DataGenerator::Soliton { center } => DataGenerator::Soliton {
            center: r.f64("data.center", center)?,
        },
        DataGenerator::Gaussian { width, center } => DataGenerator::Gaussian {
            width: r.f64("data.width", width)?,
            center: r.f64("data.center", center)?,
        },
        DataGenerator::Localized { scale, center, period } => DataGenerator::Localized {
            scale: r.f64("data.scale", scale)?,
            center: r.f64("data.center", center)?,
            period: r.f64("data.period", period)?,
        },
    };
    let norm = match r.opt_f64("data.norm")? {
        Some(n) => Some(n),
        None => default.and_then(|d| d.norm),
    };
    if let Some(n) = norm {
        if !(n >= 0.0 && n.is_finite()) {
            return Err(r.err("data.norm", "must be finite and >= 0"));
        }
    }
    let amplitude = r.f64("data.amplitude", default.map_or(1.0, |d| d.amplitude))?;
    Ok(DataSpec {
        generator,
        seed,
        norm,
        amplitude,
    })
}

fn write_data(w: &mut Writer, d: &DataSpec) {
    w.str("data.generator", d.generator.name());
    match &d.generator {
        DataGenerator::Zero | DataGenerator::Spread => {}
        DataGenerator::PlaneWave { xi } => w.f64("data.xi", *xi),
        DataGenerator::Soliton { center } => w.f64("data.center", *center),
        DataGenerator::Gaussian { width, center } => {
            w.f64("data.width", *width);
            w.f64("data.center", *center);
        }
        DataGenerator::Localized { scale, center, period } => {
            w.f64("data.scale", *scale);
            w.f64("data.center", *center);
            w.f64("data.period", *period);
        }
    }
    if let Some(n) = d.norm {
        w.f64("data.norm", n);
    }
    w.f64("data.amplitude", d.amplitude);
}

/// Reads `<prefix>.{n-freq, circumference, eta, points, kappa}` as a schedule.
fn read_schedule(r: &mut Reader, prefix: &str, default: &[ScheduleEntry]) -> Result<Vec<ScheduleEntry>> {
    let keys = ["n-freq", "circumference", "eta", "points"].map(|k| format!("{prefix}.{k}"));
    let kkey = format!("{prefix}.kappa");
    let kappa = r.usize(&kkey, default.first().map_or(4, |e| e.kappa))?;
    let given: Vec<bool> = keys.iter().map(|k| r.has(k)).collect();
    if !given.iter().any(|g| *g) {
        let mut s = default.to_vec();
        s.iter_mut().for_each(|e| e.kappa = kappa);
        return Ok(s);
    }
    if let Some(i) = given.iter().position(|g| !*g) {
        let present = keys.iter().zip(&given).find(|(_, g)| **g).map(|(k, _)| k.clone()).unwrap_or_default();
        return Err(r.err(&present, format!("schedule lists must be given together; missing {}", keys[i])));
    }
    let lists = keys.iter().map(|k| Ok(r.opt_list(k)?.expect("present"))).collect::<Result<Vec<_>>>()?;
    let s = r.check(&keys[0], schedule_from_lists(&lists[0], &lists[1], &lists[2], &lists[3], kappa))?;
    if let Some(e) = s.iter().find(|e| !e.points.is_power_of_two()) {
        return Err(r.err(&keys[3], format!("schedule.points must be a power of two, got {}", e.points)));
    }
    Ok(s)
}

fn write_schedule(w: &mut Writer, prefix: &str, s: &[ScheduleEntry]) {
    let col = |f: fn(&ScheduleEntry) -> f64| s.iter().map(f).collect::<Vec<_>>();
    w.list(&format!("{prefix}.n-freq"), &col(|e| e.n_freq));
    w.list(&format!("{prefix}.circumference"), &col(|e| e.circumference));
    w.list(&format!("{prefix}.eta"), &col(|e| e.eta));
    w.list(&format!("{prefix}.points"), &col(|e| e.points as f64));
    w.int(&format!("{prefix}.kappa"), s.first().map_or(4, |e| e.kappa) as u64);
}

fn read_solve(r: &mut Reader, seed: u64) -> Result<SolveConfig> {
    let circumference = r.required_f64("grid.circumference")?;
    let points = r.pow2("grid.points", None)?;
    let truncation = read_truncation(r, "solver", Truncation::None)?;
    let sign = r.sign("solver.sign", Sign::Defocusing)?;
    let dt = r.required_f64("solver.dt")?;
    let horizon = r.required_f64("solver.horizon")?;
    let mut solver = r.check("solver.dt", SolverConfig::new(sign, truncation, dt, horizon))?;
    let stride = r.usize("solver.stride", 1)?;
    solver = r.check("solver.stride", solver.with_stride(stride))?;
    let mass_bound = r.f64("solver.mass-bound", solver.mass_bound)?;
    solver = solver.with_mass_bound(mass_bound);
    if !r.bool("solver.nonlinear", true)? {
        solver = solver.linear();
    }
    let data = read_data(r, None, seed)?;
    let tol_default = SolveTolerances::default();
    let cfg = SolveConfig {
        circumference,
        points,
        solver,
        data,
        band: r.opt_f64("data.band")?,
        symmetric: r.bool("solver.symmetric", false)?,
        tolerances: SolveTolerances {
            mass_drift: r.opt_f64("tolerance.mass-drift")?,
            energy_drift: r.f64("tolerance.energy-drift", tol_default.energy_drift)?,
            closed_form: r.opt_f64("tolerance.closed-form")?,
            duhamel: r.f64("tolerance.duhamel", tol_default.duhamel)?,
            duhamel_snapshots: r.usize("tolerance.duhamel-snapshots", tol_default.duhamel_snapshots)?,
        },
    };
    let grid = r.check("grid.circumference", cfg.grid())?;
    let u0 = r.check("data.generator", cfg.data.generate(&grid, cfg.data_band(&grid)))?;
    if u0.l2_norm() > cfg.solver.mass_bound {
        return Err(r.err(
            "solver.mass-bound",
            format!("initial data norm {} exceeds the bound {}", u0.l2_norm(), cfg.solver.mass_bound),
        ));
    }
    Ok(cfg)
}

fn write_solve(w: &mut Writer, c: &SolveConfig) {
    w.f64("grid.circumference", c.circumference);
    w.int("grid.points", c.points as u64);
    let s = &c.solver;
    w.sign("solver.sign", s.sign);
    write_truncation(w, "solver", s.truncation);
    w.f64("solver.dt", s.dt);
    w.f64("solver.horizon", s.horizon);
    w.int("solver.stride", s.stride as u64);
    w.bool("solver.nonlinear", s.nonlinear);
    w.f64("solver.mass-bound", s.mass_bound);
    w.bool("solver.symmetric", c.symmetric);
    write_data(w, &c.data);
    if let Some(b) = c.band {
        w.f64("data.band", b);
    }
    let t = &c.tolerances;
    if let Some(v) = t.mass_drift {
        w.f64("tolerance.mass-drift", v);
    }
    w.f64("tolerance.energy-drift", t.energy_drift);
    if let Some(v) = t.closed_form {
        w.f64("tolerance.closed-form", v);
    }
    w.f64("tolerance.duhamel", t.duhamel);
    w.int("tolerance.duhamel-snapshots", t.duhamel_snapshots as u64);
}

fn read_approx(r: &mut Reader, seed: u64) -> Result<ApproxConfig> {
    let d = ApproxConfig::default();
    let cfg = ApproxConfig {
        schedule: read_schedule(r, "schedule", &d.schedule)?,
        mass_bound: r.f64("approx.mass-bound", d.mass_bound)?,
        horizon: r.f64("approx.horizon", d.horizon)?,
        dt: r.f64("approx.dt", d.dt)?,
        stride: r.usize("approx.stride", d.stride)?,
        sign: r.sign("approx.sign", d.sign)?,
        level: r.usize("approx.level", d.level)?,
        data: read_data(r, Some(&d.data), seed)?,
        nonlinear: r.bool("approx.nonlinear", d.nonlinear)?,
        interior_fraction: r.f64("approx.interior-fraction", d.interior_fraction)?,
        symmetric: r.bool("approx.symmetric", d.symmetric)?,
    };
    r.check("approx.horizon", cfg.validate())?;
    Ok(cfg)
}

fn write_approx(w: &mut Writer, c: &ApproxConfig) {
    write_schedule(w, "schedule", &c.schedule);
    w.f64("approx.mass-bound", c.mass_bound);
    w.f64("approx.horizon", c.horizon);
    w.f64("approx.dt", c.dt);
    w.int("approx.stride", c.stride as u64);
    w.sign("approx.sign", c.sign);
    w.int("approx.level", c.level as u64);
    w.bool("approx.nonlinear", c.nonlinear);
    w.f64("approx.interior-fraction", c.interior_fraction);
    w.bool("approx.symmetric", c.symmetric);
    write_data(w, &c.data);
}

fn read_weak(r: &mut Reader) -> Result<WeakWpConfig> {
    let d = WeakWpConfig::default();
    let escape = match r.opt_str("weak.escape")? {
        None => d.escape,
        Some("modulation") => Escape::Modulation,
        Some("translation") => Escape::Translation,
        Some("none") => Escape::None,
        Some(other) => {
            return Err(r.err(
                "weak.escape",
                format!("expected \"modulation\", \"translation\" or \"none\", got \"{other}\""),
            ))
        }
    };
    let cfg = WeakWpConfig {
        domain: r.f64("weak.domain", d.domain)?,
        points: r.pow2("weak.points", Some(d.points))?,
        window: r.f64("weak.window", d.window)?,
        horizon: r.f64("weak.horizon", d.horizon)?,
        dt: r.f64("weak.dt", d.dt)?,
        stride: r.usize("weak.stride", d.stride)?,
        sign: r.sign("weak.sign", d.sign)?,
        nonlinear: r.bool("weak.nonlinear", d.nonlinear)?,
        cutoffs: r.list("weak.cutoffs", &d.cutoffs)?,
        escape,
        width: r.f64("weak.width", d.width)?,
        f_amplitude: r.f64("weak.f-amplitude", d.f_amplitude)?,
        h_amplitude: r.f64("weak.h-amplitude", d.h_amplitude)?,
        probe_centers: r.list("weak.probe-centers", &d.probe_centers)?,
        probe_radius: r.f64("weak.probe-radius", d.probe_radius)?,
        control_cutoff: r.f64("weak.control-cutoff", d.control_cutoff)?,
    };
    r.check("weak.probe-centers", cfg.validate())?;
    Ok(cfg)
}

fn write_weak(w: &mut Writer, c: &WeakWpConfig) {
    w.f64("weak.domain", c.domain);
    w.int("weak.points", c.points as u64);
    w.f64("weak.window", c.window);
    w.f64("weak.horizon", c.horizon);
    w.f64("weak.dt", c.dt);
    w.int("weak.stride", c.stride as u64);
    w.sign("weak.sign", c.sign);
    w.bool("weak.nonlinear", c.nonlinear);
    w.list("weak.cutoffs", &c.cutoffs);
    w.str("weak.escape", c.escape.name());
    w.f64("weak.width", c.width);
    w.f64("weak.f-amplitude", c.f_amplitude);
    w.f64("weak.h-amplitude", c.h_amplitude);
    w.list("weak.probe-centers", &c.probe_centers);
    w.f64("weak.probe-radius", c.probe_radius);
    w.f64("weak.control-cutoff", c.control_cutoff);
}

fn read_perturb(r: &mut Reader, seed: u64) -> Result<PerturbConfig> {
    let d = PerturbConfig::default();
    let cfg = PerturbConfig {
        circumference: r.f64("perturb.circumference", d.circumference)?,
        points: r.pow2("perturb.points", Some(d.points))?,
        n_freq: r.f64("perturb.n-freq", d.n_freq)?,
        horizon: r.f64("perturb.horizon", d.horizon)?,
        dt: r.f64("perturb.dt", d.dt)?,
        stride: r.usize("perturb.stride", d.stride)?,
        sign: r.sign("perturb.sign", d.sign)?,
        eps: r.list("perturb.eps", &d.eps)?,
        data: read_data(r, Some(&d.data), seed)?,
        forcing_scale: r.f64("perturb.forcing-scale", d.forcing_scale)?,
        nonlinear: r.bool("perturb.nonlinear", d.nonlinear)?,
        flag_factor: r.f64("perturb.flag-factor", d.flag_factor)?,
    };
    r.check("perturb.eps", cfg.validate())?;
    Ok(cfg)
}

fn write_perturb(w: &mut Writer, c: &PerturbConfig) {
    w.f64("perturb.circumference", c.circumference);
    w.int("perturb.points", c.points as u64);
    w.f64("perturb.n-freq", c.n_freq);
    w.f64("perturb.horizon", c.horizon);
    w.f64("perturb.dt", c.dt);
    w.int("perturb.stride", c.stride as u64);
    w.sign("perturb.sign", c.sign);
    w.list("perturb.eps", &c.eps);
    w.f64("perturb.forcing-scale", c.forcing_scale);
    w.bool("perturb.nonlinear", c.nonlinear);
    w.f64("perturb.flag-factor", c.flag_factor);
    write_data(w, &c.data);
}

fn read_lp(r: &mut Reader) -> Result<LpConfig> {
    let d = LpConfig::default();
    let levels = r.list("lp.levels", &d.levels.iter().map(|&j| j as f64).collect::<Vec<_>>())?;
    if levels.iter().any(|v| v.fract() != 0.0 || *v < 0.0) {
        return Err(r.err("lp.levels", "levels must be non-negative integers"));
    }
    let cfg = LpConfig {
        schedule: read_schedule(r, "lp", &d.schedule)?,
        horizon: r.f64("lp.horizon", d.horizon)?,
        levels: levels.iter().map(|v| *v as usize).collect(),
        power: PowerIteration {
            tol: r.f64("lp.tol", d.power.tol)?,
            atol: r.f64("lp.atol", d.power.atol)?,
            max_iter: r.usize("lp.max-iter", d.power.max_iter)?,
            seed: d.power.seed,
        },
    };
    r.check("lp.points", cfg.validate())?;
    Ok(cfg)
}

fn write_lp(w: &mut Writer, c: &LpConfig) {
    write_schedule(w, "lp", &c.schedule);
    w.f64("lp.horizon", c.horizon);
    w.list("lp.levels", &c.levels.iter().map(|&j| j as f64).collect::<Vec<_>>());
    w.f64("lp.tol", c.power.tol);
    w.f64("lp.atol", c.power.atol);
    w.int("lp.max-iter", c.power.max_iter as u64);
}

fn read_pigeonhole(r: &mut Reader, seed: u64) -> Result<PigeonholeConfig> {
    let d = PigeonholeConfig::default();
    let cfg = PigeonholeConfig {
        trials: r.usize("pigeonhole.trials", d.trials)?,
        circumference: r.f64("pigeonhole.circumference", d.circumference)?,
        points: r.pow2("pigeonhole.points", Some(d.points))?,
        n_freq: r.f64("pigeonhole.n-freq", d.n_freq)?,
        eta: r.f64("pigeonhole.eta", d.eta)?,
        horizon: r.f64("pigeonhole.horizon", d.horizon)?,
        mass_bound: r.f64("pigeonhole.mass-bound", d.mass_bound)?,
        seed,
    };
    r.check("pigeonhole.circumference", cfg.validate())?;
    Ok(cfg)
}

fn write_pigeonhole(w: &mut Writer, c: &PigeonholeConfig) {
    w.int("pigeonhole.trials", c.trials as u64);
    w.f64("pigeonhole.circumference", c.circumference);
    w.int("pigeonhole.points", c.points as u64);
    w.f64("pigeonhole.n-freq", c.n_freq);
    w.f64("pigeonhole.eta", c.eta);
    w.f64("pigeonhole.horizon", c.horizon);
    w.f64("pigeonhole.mass-bound", c.mass_bound);
}

fn read_witness(r: &mut Reader, seed: u64) -> Result<WitnessConfig> {
    let d = WitnessConfig::default();
    let o = OptimizerConfig::default();
    let alpha = match (r.opt_f64("witness.alpha-re")?, r.opt_f64("witness.alpha-im")?) {
        (None, None) => None,
        (Some(re), Some(im)) => Some(Complex64::new(re, im)),
        _ => return Err(r.err("witness.alpha-re", "witness.alpha-re and witness.alpha-im must be given together")),
    };
    let cfg = WitnessConfig {
        circumference: r.f64("witness.circumference", d.circumference)?,
        points: r.pow2("witness.points", Some(d.points))?,
        n_freq: r.f64("witness.n-freq", d.n_freq)?,
        horizon: r.f64("witness.horizon", d.horizon)?,
        dt: r.f64("witness.dt", d.dt)?,
        sign: r.sign("witness.sign", d.sign)?,
        nonlinear: r.bool("witness.nonlinear", d.nonlinear)?,
        r: r.f64("witness.r", d.r)?,
        big_r: r.f64("witness.big-r", d.big_r)?,
        delta: r.f64("witness.delta", d.delta)?,
        center_width: r.f64("witness.center-width", d.center_width)?,
        center_amplitude: r.f64("witness.center-amplitude", d.center_amplitude)?,
        functional_width: r.f64("witness.functional-width", d.functional_width)?,
        functional_center: r.f64("witness.functional-center", d.functional_center)?,
        alpha,
        optimizer: OptimizerConfig {
            starts: r.usize("witness.starts", o.starts)?,
            iterations: r.usize("witness.iterations", o.iterations)?,
            fd_step: r.f64("witness.fd-step", o.fd_step)?,
            initial_step: r.f64("witness.initial-step", o.initial_step)?,
            min_step: r.f64("witness.min-step", o.min_step)?,
            seed,
        },
    };
    r.check("witness.delta", WitnessProblem::new(&cfg).map(|_| ()))?;
    Ok(cfg)
}

fn write_witness(w: &mut Writer, c: &WitnessConfig) {
    w.f64("witness.circumference", c.circumference);
    w.int("witness.points", c.points as u64);
    w.f64("witness.n-freq", c.n_freq);
    w.f64("witness.horizon", c.horizon);
    w.f64("witness.dt", c.dt);
    w.sign("witness.sign", c.sign);
    w.bool("witness.nonlinear", c.nonlinear);
    w.f64("witness.r", c.r);
    w.f64("witness.big-r", c.big_r);
    w.f64("witness.delta", c.delta);
    w.f64("witness.center-width", c.center_width);
    w.f64("witness.center-amplitude", c.center_amplitude);
    w.f64("witness.functional-width", c.functional_width);
    w.f64("witness.functional-center", c.functional_center);
    if let Some(a) = c.alpha {
        w.f64("witness.alpha-re", a.re);
        w.f64("witness.alpha-im", a.im);
    }
    let o = &c.optimizer;
    w.int("witness.starts", o.starts as u64);
    w.int("witness.iterations", o.iterations as u64);
    w.f64("witness.fd-step", o.fd_step);
    w.f64("witness.initial-step", o.initial_step);
    w.f64("witness.min-step", o.min_step);
}

fn read_norms(r: &mut Reader, seed: u64) -> Result<NormsConfig> {
    let d = NormsConfig::default();
    let cfg = NormsConfig {
        circumference: r.f64("norms.circumference", d.circumference)?,
        points: r.pow2("norms.points", Some(d.points))?,
        truncation: read_truncation(r, "norms", d.truncation)?,
        sign: r.sign("norms.sign", d.sign)?,
        data: read_data(r, Some(&d.data), seed)?,
        ensemble: r.usize("norms.ensemble", d.ensemble)?,
        horizon: r.f64("norms.horizon", d.horizon)?,
        dt: r.f64("norms.dt", d.dt)?,
        radius: r.f64("norms.radius", d.radius)?,
        taus: r.list("norms.taus", &d.taus)?,
        shifts: r.list("norms.shifts", &d.shifts)?,
        min_tau_slope: r.f64("norms.min-tau-slope", d.min_tau_slope)?,
        min_shift_slope: r.f64("norms.min-shift-slope", d.min_shift_slope)?,
        min_r2: r.f64("norms.min-r2", d.min_r2)?,
    };
    r.check("norms.dt", cfg.validate())?;
    Ok(cfg)
}

fn write_norms(w: &mut Writer, c: &NormsConfig) {
    w.f64("norms.circumference", c.circumference);
    w.int("norms.points", c.points as u64);
    write_truncation(w, "norms", c.truncation);
    w.sign("norms.sign", c.sign);
    w.int("norms.ensemble", c.ensemble as u64);
    w.f64("norms.horizon", c.horizon);
    w.f64("norms.dt", c.dt);
    w.f64("norms.radius", c.radius);
    w.list("norms.taus", &c.taus);
    w.list("norms.shifts", &c.shifts);
    w.f64("norms.min-tau-slope", c.min_tau_slope);
    w.f64("norms.min-shift-slope", c.min_shift_slope);
    w.f64("norms.min-r2", c.min_r2);
    write_data(w, &c.data);
}

impl Job {
    fn set_seed(&mut self, seed: u64) {
        match self {
            Job::Solve(c) => c.data.seed = seed,
            Job::Approx(c) | Job::MassLoc(c) => c.data.seed = seed,
            Job::Perturb(c) => c.data.seed = seed,
            Job::Pigeonhole(c) => c.seed = seed,
            Job::Witness(c) => c.optimizer.seed = seed,
            Job::Norms(c) => c.data.seed = seed,
            Job::WeakWp(_) | Job::LpCheck(_) => {}
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str, command: Command) -> Result<Self> {
        let entries = parse_entries(text)?;
        let mut r = Reader::new(&entries);
        if let Some(name) = r.opt_str("run.experiment")? {
            if name != command.name() {
                return Err(r.err(
                    "run.experiment",
                    format!("config is for \"{name}\" but the subcommand is {}", command.name()),
                ));
            }
        }
        let seed = r.opt_u64("run.seed")?.unwrap_or(DEFAULT_SEED);
        let output_dir = r.opt_str("output.dir")?.map(PathBuf::from);
        let snapshot = match command {
            Command::Solve => r.opt_str("output.snapshot")?.unwrap_or("solve.nls").to_string(),
            _ => "solve.nls".to_string(),
        };
        let job = match command {
            Command::Solve => Job::Solve(read_solve(&mut r, seed)?),
            Command::Approx => Job::Approx(read_approx(&mut r, seed)?),
            Command::MassLoc => Job::MassLoc(read_approx(&mut r, seed)?),
            Command::WeakWp => Job::WeakWp(read_weak(&mut r)?),
            Command::Perturb => Job::Perturb(read_perturb(&mut r, seed)?),
            Command::LpCheck => Job::LpCheck(read_lp(&mut r)?),
            Command::Pigeonhole => Job::Pigeonhole(read_pigeonhole(&mut r, seed)?),
            Command::Witness => Job::Witness(read_witness(&mut r, seed)?),
            Command::Norms => Job::Norms(read_norms(&mut r, seed)?),
        };
        r.finish(command)?;
        Ok(RunConfig {
            command,
            seed,
            output_dir,
            snapshot,
            job,
        })
    }

    pub fn load(path: &Path, command: Command) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::parse(&text, command)
    }

    /// Replaces the seed everywhere it is used.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.job.set_seed(seed);
        self
    }

    pub fn to_text(&self) -> String {
        let mut w = Writer::default();
        w.str("run.experiment", self.command.name());
        w.int("run.seed", self.seed);
        if let Some(d) = &self.output_dir {
            w.str("output.dir", &d.to_string_lossy());
        }
        if self.command == Command::Solve {
            w.str("output.snapshot", &self.snapshot);
        }
        match &self.job {
            Job::Solve(c) => write_solve(&mut w, c),
            Job::Approx(c) | Job::MassLoc(c) => write_approx(&mut w, c),
            Job::WeakWp(c) => write_weak(&mut w, c),
            Job::Perturb(c) => write_perturb(&mut w, c),
            Job::LpCheck(c) => write_lp(&mut w, c),
            Job::Pigeonhole(c) => write_pigeonhole(&mut w, c),
            Job::Witness(c) => write_witness(&mut w, c),
            Job::Norms(c) => write_norms(&mut w, c),
        }
        w.out
    }

    /// FNV-1a of the canonical text, as 16 hex digits.
    pub fn hash(&self) -> String {
        format!("{:016x}", fnv1a(self.to_text().as_bytes()))
    }
}
