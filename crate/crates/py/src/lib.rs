//! Python bindings. Models travel as `Model` objects, sets as lists of
//! labels or ids, and results come back as plain dicts parsed from the
//! same JSON the CLI writes.

use avreach_core::grid::{build_grid, parse_rect, GridSpec};
use avreach_core::model::{load_model, policy_from_json, save_model};
use avreach_core::reach;
use avreach_core::sim::{estimate_hitting, HittingSpec};
use avreach_core::{Distribution, Error, StateSet};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: Error) -> PyErr {
    match e {
        Error::Numerical(_) | Error::Lp(_) | Error::Infeasible => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn loads<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

/// A finite Markov control model.
#[pyclass(name = "Model", frozen)]
pub struct PyModel {
    inner: avreach_core::Model,
}

#[pymethods]
impl PyModel {
    /// Parse and validate a model from its JSON text.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        load_model(text).map(|inner| PyModel { inner }).map_err(err)
    }

    fn to_json(&self) -> String {
        save_model(&self.inner)
    }

    #[getter]
    fn n_states(&self) -> usize {
        self.inner.n_states()
    }

    #[getter]
    fn n_actions(&self) -> usize {
        self.inner.n_actions()
    }

    #[getter]
    fn state_labels(&self) -> Vec<String> {
        (0..self.inner.n_states()).map(|x| self.inner.state_label(x)).collect()
    }

    /// `Q(y | x, u)` by ids.
    fn prob(&self, x: usize, u: usize, y: usize) -> f64 {
        self.inner.prob(x, u, y)
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(n_states={}, n_actions={})",
            self.inner.n_states(),
            self.inner.n_actions()
        )
    }
}

fn to_set(m: &avreach_core::Model, items: &[Bound<'_, PyAny>]) -> PyResult<StateSet> {
    items
        .iter()
        .map(|it| {
            if let Ok(k) = it.extract::<usize>() {
                return (k < m.n_states())
                    .then_some(k)
                    .ok_or_else(|| PyValueError::new_err(format!("state id {k} out of range")));
            }
            let s: String = it.extract()?;
            m.find_state(&s)
                .ok_or_else(|| PyValueError::new_err(format!("unknown state {s:?}")))
        })
        .collect()
}

fn to_nu(m: &avreach_core::Model, nu: Option<Vec<f64>>) -> PyResult<Distribution> {
    match nu {
        None => Ok(Distribution::uniform(m.n_states())),
        Some(w) => Distribution::new(w).map_err(err),
    }
}

/// The five-state counterexample model.
#[pyfunction]
fn m5() -> PyModel {
    PyModel {
        inner: avreach_core::fixtures::m5(),
    }
}

/// Maximal reach probabilities `V*`, level sets for each `p`, the domain
/// and the escape set of `target`.
#[pyfunction]
#[pyo3(signature = (model, target, ps=vec![]))]
fn p_domain<'py>(
    py: Python<'py>,
    model: &PyModel,
    target: Vec<Bound<'py, PyAny>>,
    ps: Vec<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let m = &model.inner;
    let t = to_set(m, &target)?;
    let r = py.allow_threads(|| reach::p_domain(m, &t, &ps)).map_err(err)?;
    loads(py, &r.to_json(m))
}

/// Maximal probability of reaching `target` before `avoid`.
#[pyfunction]
#[pyo3(signature = (model, target, avoid, nu=None))]
fn reach_avoid<'py>(
    py: Python<'py>,
    model: &PyModel,
    target: Vec<Bound<'py, PyAny>>,
    avoid: Vec<Bound<'py, PyAny>>,
    nu: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyAny>> {
    let m = &model.inner;
    let (t, b, nu) = (to_set(m, &target)?, to_set(m, &avoid)?, to_nu(m, nu)?);
    let r = py.allow_threads(|| reach::reach_avoid(m, &t, &b, &nu)).map_err(err)?;
    loads(py, &r.to_json(m))
}

/// Maximal reach probability subject to hitting `avoid` first with
/// probability at most `eps`. Infeasible bounds report `status = "INFEASIBLE"`.
#[pyfunction]
#[pyo3(signature = (model, target, avoid, eps, nu=None))]
fn constrained_reach<'py>(
    py: Python<'py>,
    model: &PyModel,
    target: Vec<Bound<'py, PyAny>>,
    avoid: Vec<Bound<'py, PyAny>>,
    eps: f64,
    nu: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyAny>> {
    let m = &model.inner;
    let (t, b, nu) = (to_set(m, &target)?, to_set(m, &avoid)?, to_nu(m, nu)?);
    let r = py
        .allow_threads(|| reach::constrained_reach(m, &t, &b, &nu, eps))
        .map_err(err)?;
    loads(py, &r.to_json(m))
}

/// Seeded Monte Carlo estimate of the hitting probabilities of a policy
/// given as a dict or JSON text.
#[pyfunction]
#[pyo3(signature = (model, policy, target, avoid, n=100_000, horizon=100, seed=0, nu=None))]
#[allow(clippy::too_many_arguments)]
fn estimate_hitting_probabilities<'py>(
    py: Python<'py>,
    model: &PyModel,
    policy: Bound<'py, PyAny>,
    target: Vec<Bound<'py, PyAny>>,
    avoid: Vec<Bound<'py, PyAny>>,
    n: u64,
    horizon: usize,
    seed: u64,
    nu: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyAny>> {
    let m = &model.inner;
    let text: String = if policy.is_instance_of::<PyDict>() {
        py.import("json")?.call_method1("dumps", (policy,))?.extract()?
    } else {
        policy.extract()?
    };
    let pol = policy_from_json(m, &text).map_err(err)?;
    let (t, b, nu) = (to_set(m, &target)?, to_set(m, &avoid)?, to_nu(m, nu)?);
    let spec = HittingSpec {
        target: &t,
        avoid: &b,
        n,
        horizon,
        seed,
        parallel: true,
    };
    let est = py
        .allow_threads(|| estimate_hitting(m, &pol, &nu, &spec))
        .map_err(err)?;
    loads(py, &avreach_core::fmt::to_json(&est).map_err(|e| err(e.into()))?)
}

/// A wind-grid model and its target and obstacle state ids. Rectangles are
/// inclusive `"r0:r1,c0:c1"` strings.
#[pyfunction]
#[pyo3(signature = (rows, cols, wind, target=vec![], obstacles=vec![], close_targets=false))]
fn grid(
    rows: usize,
    cols: usize,
    wind: f64,
    target: Vec<String>,
    obstacles: Vec<String>,
    close_targets: bool,
) -> PyResult<(PyModel, Vec<usize>, Vec<usize>)> {
    let cells = |rs: &[String]| -> PyResult<Vec<(usize, usize)>> {
        Ok(rs
            .iter()
            .map(|r| parse_rect(r))
            .collect::<Result<Vec<_>, _>>()
            .map_err(err)?
            .concat())
    };
    let mut spec = GridSpec::new(rows, cols, wind);
    spec.target_cells = cells(&target)?;
    spec.obstacle_cells = cells(&obstacles)?;
    spec.close_targets = close_targets;
    let (inner, _) = build_grid(&spec).map_err(err)?;
    Ok((PyModel { inner }, spec.target().to_vec(), spec.obstacles().to_vec()))
}

#[pymodule]
fn avreach(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", avreach_core::VERSION)?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(m5, m)?)?;
    m.add_function(wrap_pyfunction!(p_domain, m)?)?;
    m.add_function(wrap_pyfunction!(reach_avoid, m)?)?;
    m.add_function(wrap_pyfunction!(constrained_reach, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_hitting_probabilities, m)?)?;
    m.add_function(wrap_pyfunction!(grid, m)?)?;
    Ok(())
}
