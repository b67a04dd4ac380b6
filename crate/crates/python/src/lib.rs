//! Python bindings: equations, fields, the path solver, moment estimation,
//! assumption checks, the mode oracle and config-driven runs.

use std::path::Path;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use spectral_spde::assumptions::{check_all, check_burgers_neutrality, SamplePlan};
use spectral_spde::error::Error;
use spectral_spde::functions::ScalarFn;
use spectral_spde::harness::studies::{self, ConvergenceParams, SharpnessParams};
use spectral_spde::harness::{self, ExitKind, ExperimentConfig, Overrides};
use spectral_spde::moments::{estimate, MomentRequest};
use spectral_spde::noise::CounterStream;
use spectral_spde::operators::{DriftSpec, Equation, EquationSpec};
use spectral_spde::oracle::{self, ModeParams};
use spectral_spde::solver::{self, Scheme, SolverConfig};
use spectral_spde::spectral::{l4_norm, synthesize, BasisKind, SpectralField};

fn to_py_err(e: Error) -> PyErr {
    match ExitKind::of_error(&e) {
        ExitKind::Config => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

trait OrPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> OrPy<T> for Result<T, Error> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(to_py_err)
    }
}

/// Converts any serializable report into plain Python dicts and lists.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_scheme(name: Option<&str>, eq: &Equation) -> PyResult<Scheme> {
    match name {
        None => Ok(Scheme::default_for(&eq.spec().drift)),
        Some(s) => serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| PyValueError::new_err(format!("unknown scheme `{s}`"))),
    }
}

fn parse_fn(spec: Option<&str>) -> PyResult<ScalarFn> {
    match spec {
        None => Ok(ScalarFn::Zero),
        Some(s) => serde_json::from_str(s).map_err(|e| PyValueError::new_err(format!("scalar function: {e}"))),
    }
}

fn same_basis(a: &SpectralField, b: &SpectralField) -> PyResult<()> {
    if a.basis() != b.basis() {
        return Err(PyValueError::new_err(format!(
            "fields live in different bases: {:?} vs {:?}",
            a.basis().spec(),
            b.basis().spec()
        )));
    }
    Ok(())
}

/// Galerkin-truncated equation with its constants ledger.
#[pyclass(name = "Equation", module = "spde_galerkin", frozen)]
struct PyEquation {
    inner: Equation,
}

#[pymethods]
impl PyEquation {
    /// Heat equation on the torus with fractional-gradient noise, |k| ≤ max_k.
    #[staticmethod]
    #[pyo3(signature = (max_k, gamma, p0 = 4.0))]
    fn fractional(max_k: usize, gamma: f64, p0: f64) -> PyResult<Self> {
        Self::build(EquationSpec::fractional(max_k, gamma, p0))
    }

    /// Stochastic Burgers on (0,1). `h` is a JSON scalar-function spec such as
    /// '{"kind": "constant", "value": 1.0}'.
    #[staticmethod]
    #[pyo3(signature = (m, gamma, h = None))]
    fn burgers(m: usize, gamma: f64, h: Option<&str>) -> PyResult<Self> {
        Self::build(EquationSpec::burgers(m, gamma, parse_fn(h)?))
    }

    #[staticmethod]
    #[pyo3(signature = (m, gamma, g = None, f = None, h = None))]
    fn semilinear(m: usize, gamma: f64, g: Option<&str>, f: Option<&str>, h: Option<&str>) -> PyResult<Self> {
        Self::build(EquationSpec::semilinear(m, gamma, parse_fn(g)?, parse_fn(f)?, parse_fn(h)?))
    }

    #[staticmethod]
    fn heat(m: usize, gamma: f64) -> PyResult<Self> {
        Self::build(EquationSpec::heat(m, gamma))
    }

    /// Equation section of an experiment config (TOML or JSON text).
    #[staticmethod]
    fn from_config(text: &str) -> PyResult<Self> {
        let cfg = ExperimentConfig::parse(text).py_err()?;
        Self::build(cfg.equation_spec())
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.basis().m()
    }

    #[getter]
    fn basis(&self) -> &'static str {
        match self.inner.basis().kind() {
            BasisKind::DirichletSine => "dirichlet-sine",
            BasisKind::FourierTorus => "fourier-torus",
        }
    }

    #[getter]
    fn grid_points(&self) -> usize {
        self.inner.basis().grid_points()
    }

    fn ledger<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, self.inner.ledger())
    }

    fn grid(&self) -> Vec<f64> {
        self.inner.basis().grid()
    }

    /// A(u) as a new field.
    fn drift(&self, u: &PyField) -> PyResult<PyField> {
        same_basis(&SpectralField::zeros(self.inner.basis()), &u.inner)?;
        self.inner.apply_drift(&u.inner).py_err().map(PyField::from)
    }

    /// B^j(u) as a new field.
    #[pyo3(signature = (u, j = 0))]
    fn diffusion(&self, u: &PyField, j: usize) -> PyResult<PyField> {
        same_basis(&SpectralField::zeros(self.inner.basis()), &u.inner)?;
        self.inner.apply_diffusion(j, &u.inner).py_err().map(PyField::from)
    }

    fn __repr__(&self) -> String {
        format!("Equation(basis={}, m={})", self.basis(), self.m())
    }
}

impl PyEquation {
    fn build(spec: Result<EquationSpec, Error>) -> PyResult<Self> {
        Ok(Self {
            inner: Equation::new(spec.py_err()?).py_err()?,
        })
    }
}

/// Coefficient vector in an equation's Galerkin basis.
#[pyclass(name = "Field", module = "spde_galerkin", frozen)]
struct PyField {
    inner: SpectralField,
}

impl From<SpectralField> for PyField {
    fn from(inner: SpectralField) -> Self {
        Self { inner }
    }
}

#[pymethods]
impl PyField {
    #[staticmethod]
    fn zeros(eq: &PyEquation) -> Self {
        SpectralField::zeros(eq.inner.basis()).into()
    }

    #[staticmethod]
    fn single_mode(eq: &PyEquation, k: usize, amplitude: f64) -> PyResult<Self> {
        SpectralField::single_mode(eq.inner.basis(), k, amplitude).py_err().map(Self::from)
    }

    /// Random field with coefficients decaying like k^(−decay), scaled to H norm `amplitude`.
    #[staticmethod]
    #[pyo3(signature = (eq, decay = 1.5, amplitude = 1.0, seed = 0))]
    fn random(eq: &PyEquation, decay: f64, amplitude: f64, seed: u64) -> Self {
        let mut stream = CounterStream::new(seed, 0, 0);
        SpectralField::random(eq.inner.basis(), decay, amplitude, &mut stream).into()
    }

    /// Packed real coefficients (torus: c_0, Re c_1, Im c_1, ...).
    #[staticmethod]
    fn from_coefficients(eq: &PyEquation, values: Vec<f64>) -> PyResult<Self> {
        SpectralField::from_real_vec(eq.inner.basis(), &values).py_err().map(Self::from)
    }

    fn coefficients(&self) -> Vec<f64> {
        self.inner.to_real_vec()
    }

    /// Point values on the quadrature grid.
    fn values(&self) -> Vec<f64> {
        synthesize(&self.inner)
    }

    #[getter]
    fn h_norm(&self) -> f64 {
        self.inner.h_norm()
    }

    #[getter]
    fn v_norm(&self) -> f64 {
        self.inner.v_norm()
    }

    #[getter]
    fn vstar_norm(&self) -> f64 {
        self.inner.vstar_norm()
    }

    #[getter]
    fn l4_norm(&self) -> f64 {
        l4_norm(&self.inner)
    }

    fn inner(&self, other: &PyField) -> PyResult<f64> {
        same_basis(&self.inner, &other.inner)?;
        Ok(self.inner.inner(&other.inner))
    }

    fn __add__(&self, other: &PyField) -> PyResult<Self> {
        same_basis(&self.inner, &other.inner)?;
        Ok(self.inner.add(&other.inner).into())
    }

    fn __sub__(&self, other: &PyField) -> PyResult<Self> {
        same_basis(&self.inner, &other.inner)?;
        Ok(self.inner.sub(&other.inner).into())
    }

    fn __mul__(&self, a: f64) -> Self {
        self.inner.scaled(a).into()
    }

    fn __len__(&self) -> usize {
        self.inner.basis().m()
    }

    fn __repr__(&self) -> String {
        format!("Field(m={}, h_norm={:.6e})", self.inner.basis().m(), self.inner.h_norm())
    }
}

fn solver_config(eq: &Equation, dt: f64, t_end: f64, seed: u64, scheme: Option<&str>) -> PyResult<SolverConfig> {
    Ok(SolverConfig::new(dt, t_end, parse_scheme(scheme, eq)?).with_seed(seed))
}

#[derive(Serialize)]
struct PathOut {
    times: Vec<f64>,
    coefficients: Vec<Vec<f64>>,
    exploded: Option<u64>,
    sup_h_norm: f64,
    energy_residual: Vec<f64>,
}

/// One path; returns times, packed coefficients per time, explosion step and
/// per-step energy residuals.
#[pyfunction]
#[pyo3(signature = (eq, u0, dt, t_end, seed = 0, path_id = 0, scheme = None))]
#[allow(clippy::too_many_arguments)]
fn solve_path<'py>(
    py: Python<'py>,
    eq: &PyEquation,
    u0: &PyField,
    dt: f64,
    t_end: f64,
    seed: u64,
    path_id: u64,
    scheme: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = solver_config(&eq.inner, dt, t_end, seed, scheme)?.with_path(path_id);
    let (traj, diag) = py.detach(|| solver::solve_path(&eq.inner, &u0.inner, &cfg)).py_err()?;
    let out = PathOut {
        times: traj.times,
        coefficients: traj.fields.iter().map(|f| f.to_real_vec()).collect(),
        exploded: diag.exploded,
        sup_h_norm: diag.sup_h_norm,
        energy_residual: diag.energy_residual,
    };
    to_py(py, &out)
}

/// Monte Carlo moment report over `n_paths` paths.
#[pyfunction]
#[pyo3(signature = (eq, u0, dt, t_end, n_paths, p_list = vec![2.0], seed = 0, track_mode = None, scheme = None))]
#[allow(clippy::too_many_arguments)]
fn estimate_moments<'py>(
    py: Python<'py>,
    eq: &PyEquation,
    u0: &PyField,
    dt: f64,
    t_end: f64,
    n_paths: usize,
    p_list: Vec<f64>,
    seed: u64,
    track_mode: Option<usize>,
    scheme: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = solver_config(&eq.inner, dt, t_end, seed, scheme)?;
    let ledger = eq.inner.ledger();
    let mut req = MomentRequest::new(p_list, ledger.p0, ledger.alpha, n_paths);
    req.track_mode = track_mode;
    let report = py.detach(|| estimate(&eq.inner, &u0.inner, &cfg, &req)).py_err()?;
    to_py(py, &report)
}

/// Samples the structural inequalities; the report says "no violation found
/// over the plan", never that an inequality holds.
#[pyfunction]
#[pyo3(signature = (eq, samples = 1000, seed = 0))]
fn check_assumptions<'py>(py: Python<'py>, eq: &PyEquation, samples: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let plan = SamplePlan::new(samples, seed);
    let report = py
        .detach(|| {
            let mut r = check_all(&eq.inner, &plan)?;
            if matches!(eq.inner.spec().drift, DriftSpec::Burgers) {
                r.merge(check_burgers_neutrality(&eq.inner, &plan)?);
            }
            Ok(r)
        })
        .py_err()?;
    to_py(py, &report)
}

/// E|û_k(t)|^p for the fractional-noise mode started at c0.
#[pyfunction]
#[pyo3(signature = (k, gamma, p, t, c0 = 1.0))]
fn exact_mode_moment(k: u32, gamma: f64, p: f64, t: f64, c0: f64) -> f64 {
    oracle::exact_mode_moment(&ModeParams::new(k, gamma, c0), p, t)
}

#[pyfunction]
fn moment_exponent(k: u32, gamma: f64, p: f64) -> f64 {
    oracle::moment_exponent(k, gamma, p)
}

#[pyfunction]
fn wellposed_predicates<'py>(py: Python<'py>, gamma: f64, p0: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &oracle::wellposed_predicates(gamma, p0))
}

#[pyfunction]
#[pyo3(signature = (gamma2_grid, p_grid = vec![4.0], k = 1, dt = 1e-3, t_end = 0.5, n_paths = 0, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn sharpness_sweep<'py>(
    py: Python<'py>,
    gamma2_grid: Vec<f64>,
    p_grid: Vec<f64>,
    k: usize,
    dt: f64,
    t_end: f64,
    n_paths: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let params = SharpnessParams {
        gamma2_grid,
        p_grid,
        k,
        dt,
        t_end,
        n_paths,
        seed,
    };
    let rows = py.detach(|| studies::sharpness_sweep(&params)).py_err()?;
    to_py(py, &rows)
}

#[pyfunction]
#[pyo3(signature = (gamma, dt_list, k = 1, t_end = 1.0, n_paths = 100, seed = 0))]
fn convergence_study<'py>(
    py: Python<'py>,
    gamma: f64,
    dt_list: Vec<f64>,
    k: usize,
    t_end: f64,
    n_paths: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let params = ConvergenceParams {
        gamma,
        k,
        dt_list,
        t_end,
        n_paths,
        seed,
        scheme: Scheme::SemiImplicitEm,
    };
    let report = py.detach(|| studies::convergence_study(&params)).py_err()?;
    to_py(py, &report)
}

/// Runs an experiment config and returns its manifest. `task` forces a task
/// kind as the matching CLI subcommand would.
#[pyfunction]
#[pyo3(signature = (config, out_dir, seed = None, paths = None, task = None))]
fn run<'py>(
    py: Python<'py>,
    config: &str,
    out_dir: &str,
    seed: Option<u64>,
    paths: Option<usize>,
    task: Option<String>,
) -> PyResult<Bound<'py, PyAny>> {
    let overrides = Overrides { seed, paths, task };
    let outcome = py
        .detach(|| harness::run(Path::new(config), Path::new(out_dir), &overrides))
        .map_err(|e| to_py_err(e.error))?;
    to_py(py, &outcome.manifest)
}

#[pymodule]
fn spde_galerkin(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyEquation>()?;
    m.add_class::<PyField>()?;
    m.add_function(wrap_pyfunction!(solve_path, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_moments, m)?)?;
    m.add_function(wrap_pyfunction!(check_assumptions, m)?)?;
    m.add_function(wrap_pyfunction!(exact_mode_moment, m)?)?;
    m.add_function(wrap_pyfunction!(moment_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(wellposed_predicates, m)?)?;
    m.add_function(wrap_pyfunction!(sharpness_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_study, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
