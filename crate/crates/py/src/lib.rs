//! Python bindings for the solver library.
//!
//! Exposes problem/graph generation, the penalty model, activation
//! schedules, theory constants, and the solver runner. Vectors cross the
//! boundary as plain Python lists of floats in stacked (node-major) order.

use nalgebra::DVector;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use dqn_core::objective::{generate_quadratics, PenaltyModel, QuadraticProblem};
use dqn_core::schedule::ActivationSchedule;
use dqn_core::solver::{LambdaPolicy, RunTrace, Solver, SolverConfig, Variant};
use dqn_core::splitting::TheoryConstants;
use dqn_core::topology::{generate_rgg, metropolis_weights, WeightedGraph, DEFAULT_RETRY_CAP};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Random strongly convex quadratic cost family.
#[pyclass(name = "Problem", from_py_object)]
#[derive(Clone)]
struct PyProblem {
    inner: QuadraticProblem,
}

#[pymethods]
impl PyProblem {
    #[staticmethod]
    fn generate(n: usize, p: usize, seed: u64) -> PyResult<Self> {
        if n == 0 || p == 0 {
            return Err(value_err("n and p must be >= 1"));
        }
        Ok(PyProblem {
            inner: generate_quadratics(n, p, seed),
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyProblem {
            inner: QuadraticProblem::from_json(text).map_err(value_err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.p
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu
    }

    #[getter]
    fn l(&self) -> f64 {
        self.inner.l
    }

    /// Minimizer of the aggregate cost.
    fn global_minimizer(&self) -> Vec<f64> {
        self.inner.global_minimizer().as_slice().to_vec()
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem(n={}, p={}, mu={:.4}, l={:.4})",
            self.inner.n, self.inner.p, self.inner.mu, self.inner.l
        )
    }
}

/// Connected random geometric graph with Metropolis weights.
#[pyclass(name = "Network", from_py_object)]
#[derive(Clone)]
struct PyNetwork {
    inner: WeightedGraph,
}

#[pymethods]
impl PyNetwork {
    #[staticmethod]
    fn generate(n: usize, radius: f64, seed: u64) -> PyResult<Self> {
        let graph = generate_rgg(n, radius, seed, DEFAULT_RETRY_CAP).map_err(value_err)?;
        Ok(PyNetwork {
            inner: metropolis_weights(graph).map_err(value_err)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.graph.edges.clone()
    }

    #[getter]
    fn w_min(&self) -> f64 {
        self.inner.w_min
    }

    #[getter]
    fn w_max(&self) -> f64 {
        self.inner.w_max
    }

    fn weight(&self, i: usize, j: usize) -> PyResult<f64> {
        let n = self.inner.n();
        if i >= n || j >= n {
            return Err(value_err(format!("node index out of range (n = {n})")));
        }
        Ok(self.inner.w[(i, j)])
    }

    fn neighbors(&self, i: usize) -> PyResult<Vec<usize>> {
        if i >= self.inner.n() {
            return Err(value_err("node index out of range"));
        }
        Ok(self.inner.neighbors(i).to_vec())
    }

    fn export_edge_list(&self) -> String {
        self.inner.export_edge_list()
    }

    fn __repr__(&self) -> String {
        format!(
            "Network(n={}, edges={})",
            self.inner.n(),
            self.inner.graph.edges.len()
        )
    }
}

/// The penalty reformulation bound to a problem, network and alpha.
#[pyclass(name = "Model")]
struct PyModel {
    inner: PenaltyModel,
}

fn to_dvector(model: &PenaltyModel, x: Vec<f64>) -> PyResult<DVector<f64>> {
    if x.len() != model.dim() {
        return Err(value_err(format!(
            "expected stacked vector of length {}, got {}",
            model.dim(),
            x.len()
        )));
    }
    Ok(DVector::from_vec(x))
}

#[pymethods]
impl PyModel {
    #[new]
    fn new(problem: PyProblem, network: PyNetwork, alpha: f64) -> PyResult<Self> {
        if !(alpha > 0.0) {
            return Err(value_err("alpha must be > 0"));
        }
        if problem.inner.n != network.inner.n() {
            return Err(value_err("problem and network node counts differ"));
        }
        Ok(PyModel {
            inner: PenaltyModel::new(problem.inner, network.inner, alpha),
        })
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Minimizer of the penalty function (stacked).
    #[getter]
    fn penalty_minimizer(&self) -> Vec<f64> {
        self.inner.x_penalty.as_slice().to_vec()
    }

    fn penalty_value(&self, x: Vec<f64>) -> PyResult<f64> {
        let x = to_dvector(&self.inner, x)?;
        self.inner.penalty_value(&x).map_err(value_err)
    }

    fn penalty_gradient(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        let x = to_dvector(&self.inner, x)?;
        Ok(self
            .inner
            .penalty_gradient(&x)
            .map_err(value_err)?
            .as_slice()
            .to_vec())
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(n={}, p={}, alpha={:.6e})",
            self.inner.n(),
            self.inner.p(),
            self.inner.alpha
        )
    }
}

/// Activation-probability schedule.
#[pyclass(name = "Schedule", skip_from_py_object)]
#[derive(Clone)]
struct PySchedule {
    inner: ActivationSchedule,
}

fn validated(inner: ActivationSchedule) -> PyResult<PySchedule> {
    inner.validate().map_err(value_err)?;
    Ok(PySchedule { inner })
}

#[pymethods]
impl PySchedule {
    #[staticmethod]
    fn always_on() -> Self {
        PySchedule {
            inner: ActivationSchedule::AlwaysOn,
        }
    }

    #[staticmethod]
    fn geometric_to_one(sigma: f64) -> PyResult<Self> {
        validated(ActivationSchedule::GeometricToOne { sigma })
    }

    #[staticmethod]
    fn capped_geometric(p_max: f64, sigma: f64) -> PyResult<Self> {
        validated(ActivationSchedule::CappedGeometric { p_max, sigma })
    }

    #[staticmethod]
    fn constant(p: f64) -> PyResult<Self> {
        validated(ActivationSchedule::Constant { p })
    }

    #[staticmethod]
    fn safeguarded(sigma: f64, p_floor: f64, sigma_cap: f64) -> PyResult<Self> {
        validated(ActivationSchedule::Safeguarded {
            sigma,
            p_floor,
            sigma_cap,
        })
    }

    fn probability_at(&self, k: u64) -> f64 {
        self.inner.probability_at(k)
    }

    #[getter]
    fn p_min(&self) -> f64 {
        self.inner.p_min()
    }

    #[getter]
    fn converges_to_one(&self) -> bool {
        self.inner.converges_to_one()
    }

    fn __repr__(&self) -> String {
        format!("Schedule({:?})", self.inner)
    }
}

/// Completed run record.
#[pyclass(name = "Trace")]
struct PyTrace {
    inner: RunTrace,
}

#[pymethods]
impl PyTrace {
    fn __len__(&self) -> usize {
        self.inner.rows.len()
    }

    #[getter]
    fn rel_errors(&self) -> Vec<f64> {
        self.inner.rows.iter().map(|r| r.rel_error).collect()
    }

    #[getter]
    fn costs(&self) -> Vec<f64> {
        self.inner.rows.iter().map(|r| r.cost_per_node).collect()
    }

    #[getter]
    fn probabilities(&self) -> Vec<f64> {
        self.inner.rows.iter().map(|r| r.p_k).collect()
    }

    #[getter]
    fn phi_gaps(&self) -> Vec<f64> {
        self.inner.rows.iter().map(|r| r.phi_gap).collect()
    }

    #[getter]
    fn reached_target(&self) -> bool {
        self.inner.reached_target
    }

    fn limiting_error(&self, frac: f64) -> PyResult<f64> {
        if self.inner.rows.is_empty() {
            return Err(runtime_err("empty trace"));
        }
        if !(frac > 0.0 && frac <= 1.0) {
            return Err(value_err("frac must be in (0, 1]"));
        }
        Ok(self.inner.limiting_error(frac))
    }

    fn cost_to_target(&self, target: f64) -> Option<f64> {
        self.inner.cost_to_target(target)
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }
}

fn parse_lambda(policy: &str) -> PyResult<LambdaPolicy> {
    match policy {
        "zero" => Ok(LambdaPolicy::Zero),
        "minus_rho_i" => Ok(LambdaPolicy::MinusRhoI),
        "minus_i" => Ok(LambdaPolicy::MinusI),
        other => Err(value_err(format!(
            "unknown lambda policy {other:?}; expected zero, minus_rho_i or minus_i"
        ))),
    }
}

/// Runs the solver and returns the trace.
#[pyfunction]
#[pyo3(signature = (
    model,
    schedule,
    *,
    eps = 1.0,
    rho = 1.0,
    theta = 0.0,
    lambda_policy = "zero",
    max_iters = 1000,
    target_rel_error = None,
    seed = 0,
    path = 0,
    standard = false,
))]
#[allow(clippy::too_many_arguments)]
fn run(
    model: &PyModel,
    schedule: &PySchedule,
    eps: f64,
    rho: f64,
    theta: f64,
    lambda_policy: &str,
    max_iters: u64,
    target_rel_error: Option<f64>,
    seed: u64,
    path: u64,
    standard: bool,
) -> PyResult<PyTrace> {
    let config = SolverConfig {
        alpha: model.inner.alpha,
        eps,
        rho,
        theta,
        lambda_policy: parse_lambda(lambda_policy)?,
        schedule: schedule.inner.clone(),
        variant: if standard {
            Variant::Standard
        } else {
            Variant::Idling
        },
        max_iters,
        target_rel_error,
        seed,
        diagnostics_enabled: false,
        x0: None,
    };
    let solver = Solver::new(&model.inner, config).map_err(value_err)?;
    Ok(PyTrace {
        inner: solver.run(path).map_err(runtime_err)?,
    })
}

/// Bound constants for the convergence analysis.
#[pyclass(name = "Constants")]
struct PyConstants {
    inner: TheoryConstants,
}

#[pymethods]
impl PyConstants {
    #[getter]
    fn c_a(&self) -> f64 {
        self.inner.c_a
    }

    #[getter]
    fn c_g(&self) -> f64 {
        self.inner.c_g
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta
    }

    #[getter]
    fn rho_bar(&self) -> f64 {
        self.inner.rho_bar
    }

    #[getter]
    fn eps_bar(&self) -> f64 {
        self.inner.eps_bar
    }

    #[getter]
    fn nu_eps(&self) -> f64 {
        self.inner.nu_eps
    }

    fn report(&self) -> String {
        self.inner.report()
    }
}

#[pyfunction]
#[pyo3(signature = (alpha, mu, l, *, theta = 0.0, rho = 0.0, w_min, w_max, eps = 1.0))]
#[allow(clippy::too_many_arguments)]
fn compute_constants(
    alpha: f64,
    mu: f64,
    l: f64,
    theta: f64,
    rho: f64,
    w_min: f64,
    w_max: f64,
    eps: f64,
) -> PyResult<PyConstants> {
    let inner =
        dqn_core::splitting::compute_constants(alpha, mu, l, theta, rho, w_min, w_max, eps, 0.5, 0.5)
            .map_err(value_err)?;
    Ok(PyConstants { inner })
}

/// Recommended geometric decay `sigma = 1 - c alpha mu`.
#[pyfunction]
fn tuned_sigma(alpha: f64, mu: f64, c: f64) -> PyResult<f64> {
    dqn_core::schedule::tuned_sigma(alpha, mu, c).map_err(value_err)
}

/// The default connectivity radius `sqrt(ln n / n)`.
#[pyfunction]
fn default_radius(n: usize) -> f64 {
    dqn_core::harness::default_radius(n)
}

#[pymodule]
fn dqn_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProblem>()?;
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PySchedule>()?;
    m.add_class::<PyTrace>()?;
    m.add_class::<PyConstants>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(compute_constants, m)?)?;
    m.add_function(wrap_pyfunction!(tuned_sigma, m)?)?;
    m.add_function(wrap_pyfunction!(default_radius, m)?)?;
    Ok(())
}
