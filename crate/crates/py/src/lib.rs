//! Python bindings: grids, solver configs, trajectories, snapshots and
//! experiment runs.

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

use nls_lab::diagnostics;
use nls_lab::dynamics::{self, Sign, SolverConfig, Trajectory, Truncation};
use nls_lab::experiments::run_job;
use nls_lab::io::{self, Command, RunConfig};
use nls_lab::report::ExperimentReport;
use nls_lab::spectral::{ComplexField, Grid};
use nls_lab::LabError;

fn err(e: LabError) -> PyErr {
    match e {
        LabError::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

#[pyclass(name = "Grid", frozen)]
struct PyGrid {
    inner: Grid,
}

#[pymethods]
impl PyGrid {
    #[new]
    fn new(circumference: f64, points: usize) -> PyResult<Self> {
        Ok(PyGrid {
            inner: Grid::new(circumference, points).map_err(err)?,
        })
    }

    #[getter]
    fn circumference(&self) -> f64 {
        self.inner.circumference()
    }

    #[getter]
    fn points(&self) -> usize {
        self.inner.points()
    }

    #[getter]
    fn dx(&self) -> f64 {
        self.inner.dx()
    }

    fn positions(&self) -> Vec<f64> {
        self.inner.positions()
    }

    fn wavenumbers(&self) -> Vec<f64> {
        self.inner.wavenumbers()
    }

    fn __repr__(&self) -> String {
        format!("Grid(circumference={}, points={})", self.inner.circumference(), self.inner.points())
    }
}

fn field(grid: &PyGrid, values: Vec<Complex64>) -> PyResult<ComplexField> {
    ComplexField::from_physical(grid.inner.clone(), values).map_err(err)
}

#[pyclass(name = "SolverConfig", frozen)]
struct PySolverConfig {
    inner: SolverConfig,
}

#[pymethods]
impl PySolverConfig {
    #[new]
    #[pyo3(signature = (dt, horizon, sign = "defocusing", truncation = "none", cutoff = None, stride = 1, nonlinear = true, mass_bound = None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        dt: f64,
        horizon: f64,
        sign: &str,
        truncation: &str,
        cutoff: Option<f64>,
        stride: usize,
        nonlinear: bool,
        mass_bound: Option<f64>,
    ) -> PyResult<Self> {
        let sign = match sign {
            "defocusing" => Sign::Defocusing,
            "focusing" => Sign::Focusing,
            other => return Err(PyValueError::new_err(format!("unknown sign {other:?}"))),
        };
        let need = |c: Option<f64>| c.ok_or_else(|| PyValueError::new_err("cutoff is required for a low-pass truncation"));
        let truncation = match truncation {
            "none" => Truncation::None,
            "low-pass" => Truncation::LowPass(need(cutoff)?),
            "torus-low-pass" => Truncation::TorusLowPass(need(cutoff)?),
            other => return Err(PyValueError::new_err(format!("unknown truncation {other:?}"))),
        };
        let mut cfg = SolverConfig::new(sign, truncation, dt, horizon)
            .and_then(|c| c.with_stride(stride))
            .map_err(err)?;
        if let Some(b) = mass_bound {
            cfg = cfg.with_mass_bound(b);
        }
        if !nonlinear {
            cfg = cfg.linear();
        }
        Ok(PySolverConfig { inner: cfg })
    }

    #[getter]
    fn steps(&self) -> usize {
        self.inner.steps()
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

#[pyclass(name = "Trajectory", frozen)]
struct PyTrajectory {
    inner: Trajectory,
}

#[pymethods]
impl PyTrajectory {
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn times(&self) -> Vec<f64> {
        self.inner.times()
    }

    /// Physical samples of snapshot `index`.
    fn snapshot(&self, index: usize) -> PyResult<Vec<Complex64>> {
        let f = self
            .inner
            .fields
            .get(index)
            .ok_or_else(|| PyValueError::new_err(format!("snapshot {index} out of range")))?;
        Ok(f.to_physical().into_values())
    }

    fn masses(&self) -> Vec<f64> {
        self.inner.fields.iter().map(|f| f.mass()).collect()
    }

    #[getter]
    fn mass_drift(&self) -> f64 {
        self.inner.mass_drift
    }

    fn duhamel_residual(&self) -> PyResult<f64> {
        dynamics::duhamel_residual(&self.inner).map_err(err)
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &io::encode_snapshot(&self.inner))
    }

    #[staticmethod]
    fn from_bytes(data: &[u8], config: &PySolverConfig) -> PyResult<Self> {
        Ok(PyTrajectory {
            inner: io::decode_snapshot(data, &config.inner).map_err(err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        io::write_snapshot(&path, &self.inner).map_err(err)
    }

    #[staticmethod]
    fn load(path: PathBuf, config: &PySolverConfig) -> PyResult<Self> {
        Ok(PyTrajectory {
            inner: io::read_snapshot(&path, &config.inner).map_err(err)?,
        })
    }
}

#[pyfunction]
fn solve(grid: &PyGrid, values: Vec<Complex64>, config: &PySolverConfig) -> PyResult<PyTrajectory> {
    let u0 = field(grid, values)?;
    Ok(PyTrajectory {
        inner: dynamics::solve(&u0, &config.inner).map_err(err)?,
    })
}

#[pyfunction]
fn energy(grid: &PyGrid, values: Vec<Complex64>, config: &PySolverConfig) -> PyResult<f64> {
    Ok(diagnostics::energy(&field(grid, values)?, &config.inner))
}

#[pyclass(name = "Report", frozen)]
struct PyReport {
    inner: ExperimentReport,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn seed(&self) -> Option<u64> {
        self.inner.seed
    }

    #[getter]
    fn scalars(&self) -> BTreeMap<String, f64> {
        self.inner.scalars.clone()
    }

    #[getter]
    fn series(&self) -> BTreeMap<String, Vec<f64>> {
        self.inner.series.clone()
    }

    /// `name -> (rule, passed)`
    #[getter]
    fn verdicts(&self) -> BTreeMap<String, (String, bool)> {
        self.inner
            .verdicts
            .iter()
            .map(|(k, v)| (k.clone(), (v.rule.to_string(), v.passed)))
            .collect()
    }

    #[getter]
    fn notes(&self) -> BTreeMap<String, String> {
        self.inner.notes.clone()
    }

    fn all_pass(&self) -> bool {
        self.inner.all_pass()
    }

    fn to_text(&self) -> String {
        io::emit_report(&self.inner)
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PyReport {
            inner: io::parse_report(text).map_err(err)?,
        })
    }
}

/// Runs one subcommand from config text and returns its report.
#[pyfunction]
#[pyo3(signature = (command, config = "", seed = None))]
fn run(command: &str, config: &str, seed: Option<u64>) -> PyResult<PyReport> {
    let command =
        Command::from_name(command).ok_or_else(|| PyValueError::new_err(format!("unknown command {command:?}")))?;
    let mut rc = RunConfig::parse(config, command).map_err(err)?;
    if let Some(s) = seed {
        rc = rc.with_seed(s);
    }
    let (mut rep, _) = run_job(&rc.job).map_err(err)?;
    rep.config_hash = rc.hash();
    Ok(PyReport { inner: rep })
}

#[pyfunction]
fn commands() -> Vec<&'static str> {
    Command::ALL.iter().map(|c| c.name()).collect()
}

#[pymodule]
fn nls_lab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PySolverConfig>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(energy, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(commands, m)?)?;
    Ok(())
}
