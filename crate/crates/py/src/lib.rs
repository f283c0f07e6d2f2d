//! Python bindings: experiment configurations, the solver and the studies
//! built on it.
//!
//! States cross the boundary as lists of interior rows, each row holding
//! the `n_vars` conserved variables of one cell.

use std::path::PathBuf;
use std::str::FromStr;

use gfswme_core::experiments::{self, ExperimentConfig, Scenario};
use gfswme_core::mesh_state::l2_error;
use gfswme_core::models::PrimitiveState;
use gfswme_core::solver::Solver;
use gfswme_core::{Error, Mesh, ModelId, StateField};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config(_)
        | Error::InvalidInput(_)
        | Error::InvalidBoundary(_)
        | Error::UnsupportedOrder(_)
        | Error::Unsupported { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse<T: FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

/// Interior rows of `state`, trimmed to `n_vars` entries.
pub fn state_to_rows(state: &StateField) -> Vec<Vec<f64>> {
    let m = state.n_vars();
    state.interior().iter().map(|r| r[..m].to_vec()).collect()
}

/// Builds a ghosted state from interior rows.
pub fn rows_to_state(rows: &[Vec<f64>], mesh: &Mesh, n_vars: usize) -> Result<StateField, Error> {
    if rows.len() != mesh.n_cells {
        return Err(Error::InvalidInput(format!("expected {} rows, got {}", mesh.n_cells, rows.len())));
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != n_vars) {
        return Err(Error::InvalidInput(format!("row {bad} has {} entries, expected {n_vars}", rows[bad].len())));
    }
    let ng = mesh.n_ghost;
    Ok(StateField::from_fn(mesh, n_vars, |j, _| {
        let mut v = [0.0; 4];
        v[..n_vars].copy_from_slice(&rows[j - ng]);
        v
    }))
}

/// A scenario preset with optional `key = value` overrides.
#[pyclass(name = "Config", module = "gfswme", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: ExperimentConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (scenario = "supercritical"))]
    fn new(scenario: &str) -> PyResult<Self> {
        Ok(Self { inner: ExperimentConfig::preset(parse::<Scenario>(scenario)?) })
    }

    #[staticmethod]
    fn from_key_values(text: &str) -> PyResult<Self> {
        Ok(Self { inner: ExperimentConfig::from_key_values(text).map_err(to_py)? })
    }

    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: ExperimentConfig::from_file(&path).map_err(to_py)? })
    }

    /// Overrides one key, with the same names as the configuration files.
    fn set(&mut self, key: &str, value: &str) -> PyResult<()> {
        self.inner.set(key, value).map_err(to_py)
    }

    #[getter]
    fn scenario(&self) -> String {
        self.inner.scenario.to_string()
    }

    #[getter]
    fn model(&self) -> String {
        self.inner.model.to_string()
    }

    #[getter]
    fn models(&self) -> Vec<String> {
        self.inner.models.iter().map(|m| m.to_string()).collect()
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order.as_usize()
    }

    #[getter]
    fn flux(&self) -> String {
        self.inner.flux.to_string()
    }

    #[getter]
    fn mesh_sizes(&self) -> Vec<usize> {
        self.inner.mesh_sizes.clone()
    }

    #[getter]
    fn g(&self) -> f64 {
        self.inner.g
    }

    #[getter]
    fn t_end(&self) -> f64 {
        self.inner.t_end
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(scenario={}, model={}, order={}, flux={}, mesh_sizes={:?})",
            self.inner.scenario,
            self.inner.model,
            self.inner.order.as_usize(),
            self.inner.flux,
            self.inner.mesh_sizes
        )
    }
}

/// Outcome of [`PySolver::advance`].
#[pyclass(name = "Run", module = "gfswme", get_all)]
struct PyRun {
    state: Vec<Vec<f64>>,
    time: f64,
    steps: usize,
    steady: bool,
    residual: f64,
}

#[pyclass(name = "Solver", module = "gfswme")]
struct PySolver {
    solver: Solver,
    initial: StateField,
    reference: Option<StateField>,
}

impl PySolver {
    fn state(&self, rows: &[Vec<f64>]) -> PyResult<StateField> {
        rows_to_state(rows, &self.solver.mesh, self.solver.model.n_vars()).map_err(to_py)
    }
}

#[pymethods]
impl PySolver {
    /// The solver, initial data and exact equilibrium (when known) of
    /// `config` for `model` on `n_cells` cells.
    #[new]
    fn new(config: &PyConfig, model: &str, n_cells: usize) -> PyResult<Self> {
        let case = config.inner.case(parse(model)?, n_cells).map_err(to_py)?;
        Ok(Self { solver: case.solver, initial: case.initial, reference: case.reference })
    }

    #[getter]
    fn model(&self) -> String {
        self.solver.model.to_string()
    }

    #[getter]
    fn n_vars(&self) -> usize {
        self.solver.model.n_vars()
    }

    #[getter]
    fn n_cells(&self) -> usize {
        self.solver.mesh.n_cells
    }

    #[getter]
    fn dx(&self) -> f64 {
        self.solver.mesh.dx
    }

    fn centers(&self) -> Vec<f64> {
        let mesh = &self.solver.mesh;
        mesh.interior().map(|j| mesh.center(j)).collect()
    }

    /// Cell averages of the bottom on the interior cells.
    fn bottom(&self) -> Vec<f64> {
        self.solver.bottom()[self.solver.mesh.interior()].to_vec()
    }

    fn initial_state(&self) -> Vec<Vec<f64>> {
        state_to_rows(&self.initial)
    }

    fn reference_state(&self) -> Option<Vec<Vec<f64>>> {
        self.reference.as_ref().map(state_to_rows)
    }

    /// `dU/dt` on the interior cells.
    fn residual(&self, state: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let mut s = self.state(&state)?;
        let mut out = Vec::new();
        self.solver.residual(&mut s, &mut out).map_err(to_py)?;
        let m = self.solver.model.n_vars();
        Ok(out.iter().map(|r| r[..m].to_vec()).collect())
    }

    fn max_speed(&self, state: Vec<Vec<f64>>) -> PyResult<f64> {
        self.solver.max_speed(&self.state(&state)?).map_err(to_py)
    }

    /// Advances `state` by `t_end`, stopping early once steady.
    fn advance(&self, py: Python<'_>, state: Vec<Vec<f64>>, t_end: f64) -> PyResult<PyRun> {
        let s = self.state(&state)?;
        let run = py.detach(|| self.solver.advance(s, t_end)).map_err(to_py)?;
        Ok(PyRun {
            state: state_to_rows(&run.state),
            time: run.time,
            steps: run.steps,
            steady: run.steady,
            residual: run.last_residual().unwrap_or(0.0),
        })
    }

    /// Per-component L2 error of `state` against the exact equilibrium.
    fn error(&self, state: Vec<Vec<f64>>) -> PyResult<Option<Vec<f64>>> {
        let s = self.state(&state)?;
        Ok(self.reference.as_ref().map(|r| l2_error(&s, r, &self.solver.mesh)))
    }
}

/// Eigenvalues of `model` at one state, in descending order.
#[pyfunction]
#[pyo3(signature = (model, h, u, alpha = vec![], g = 9.812))]
fn eigenvalues(model: &str, h: f64, u: f64, alpha: Vec<f64>, g: f64) -> PyResult<Vec<f64>> {
    let model: ModelId = parse(model)?;
    if alpha.len() > model.n_moments() {
        return Err(PyValueError::new_err(format!("{model} has {} moments", model.n_moments())));
    }
    let ev = model.eigenvalues(&PrimitiveState::new(h, u, &alpha), g).map_err(to_py)?;
    Ok(ev[..model.n_vars()].to_vec())
}

/// Runs a mesh-refinement study; returns `(n_cells, errors, orders)` rows,
/// with `None` where no order is available.
#[pyfunction]
fn run_convergence(py: Python<'_>, config: &PyConfig) -> PyResult<Vec<(usize, Vec<f64>, Vec<Option<f64>>)>> {
    let table = py.detach(|| experiments::run_convergence(&config.inner)).map_err(to_py)?;
    Ok(table.rows.into_iter().map(|r| (r.n_cells, r.errors, r.eoa)).collect())
}

/// The convergence study as CSV text.
#[pyfunction]
fn convergence_csv(py: Python<'_>, config: &PyConfig) -> PyResult<String> {
    let table = py.detach(|| experiments::run_convergence(&config.inner)).map_err(to_py)?;
    Ok(table.to_csv())
}

/// Eigenvalue report; one `(model, x, [l1, l2, l3, l4])` tuple per model with
/// `None` in empty slots.
#[pyfunction]
fn eigen_report(py: Python<'_>, config: &PyConfig) -> PyResult<Vec<(String, f64, Vec<Option<f64>>)>> {
    let rows = py.detach(|| experiments::run_eigen_report(&config.inner)).map_err(to_py)?;
    Ok(rows.iter().map(|r| (r.model.to_string(), r.x, r.slots().to_vec())).collect())
}

#[pymodule]
fn gfswme(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PySolver>()?;
    m.add_class::<PyRun>()?;
    m.add_function(wrap_pyfunction!(eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(run_convergence, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_csv, m)?)?;
    m.add_function(wrap_pyfunction!(eigen_report, m)?)?;
    m.add("SCENARIOS", Scenario::ALL.iter().map(|s| s.to_string()).collect::<Vec<_>>())?;
    Ok(())
}
