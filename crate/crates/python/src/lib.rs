//! Python bindings. States cross the boundary as JSON documents in the same
//! format the CLI reads, or as builtin names ("bell", "ghz", "product", "w").

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use qmerge_core::experiment::{self, ExperimentConfig};
use qmerge_core::io::{self, LoadedState};
use qmerge_core::merging::{self, CostMode, MergeTask};
use qmerge_core::{builtin, entropy, smoothing, DensityOperator, PureState};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn load(state: &str) -> PyResult<LoadedState> {
    if builtin::NAMES.contains(&state) {
        return Ok(LoadedState::Pure(builtin::by_name(state).map_err(err)?));
    }
    io::state_from_json(state).map_err(err)
}

fn density(state: &str) -> PyResult<DensityOperator> {
    Ok(load(state)?.density())
}

fn pure(state: &str) -> PyResult<PureState> {
    match load(state)? {
        LoadedState::Pure(p) => Ok(p),
        LoadedState::Density(_) => Err(PyValueError::new_err("expected a pure state")),
    }
}

/// JSON document of a builtin state.
#[pyfunction]
fn builtin_state(name: &str) -> PyResult<String> {
    Ok(io::pure_to_json(&builtin::by_name(name).map_err(err)?))
}

/// Reduced state on `keep`, as JSON.
#[pyfunction]
fn partial_trace(state: &str, keep: Vec<String>) -> PyResult<String> {
    let r = density(state)?.partial_trace(&keep).map_err(err)?;
    Ok(io::density_to_json(&r))
}

/// H_min(A|cond) in bits, from the SDP.
#[pyfunction]
fn h_min_cond(state: &str, cond: Vec<String>) -> PyResult<f64> {
    Ok(entropy::h_min_cond(&density(state)?, &cond).map_err(err)?.bits)
}

/// H_min(rho | sigma) in bits; -inf when the support condition fails.
#[pyfunction]
fn h_min_rel(state: &str, sigma: &str) -> PyResult<f64> {
    Ok(entropy::h_min_rel(&density(state)?, &density(sigma)?).map_err(err)?.bits)
}

#[pyfunction]
fn h_max_cond(state: &str, cond: Vec<String>) -> PyResult<f64> {
    entropy::h_max_cond(&density(state)?, &cond).map_err(err)
}

#[pyfunction]
fn h_min_smooth_cond(state: &str, cond: Vec<String>, eps: f64) -> PyResult<f64> {
    Ok(smoothing::h_min_smooth_cond(&density(state)?, &cond, eps).map_err(err)?.bits)
}

/// (H_min(A|R) relative to rho_R, H_max(A|B)) of a pure state on A, B, R.
#[pyfunction]
fn duality_pair(state: &str) -> PyResult<(f64, f64)> {
    entropy::duality_pair(&pure(state)?, "A", "B", "R").map_err(err)
}

/// Cost plan as a JSON object.
#[pyfunction]
#[pyo3(signature = (state, eps, mode="nonsmooth"))]
fn plan_cost(state: &str, eps: f64, mode: &str) -> PyResult<String> {
    let mode: CostMode = mode.parse().map_err(err)?;
    let rho_ar = pure(state)?.density().partial_trace(&["A", "R"]).map_err(err)?;
    let plan = merging::plan_cost(&rho_ar, eps, mode).map_err(err)?;
    serde_json::to_string(&plan).map_err(err)
}

/// One protocol run: (error, condition_value, cost_bits).
#[pyfunction]
fn run_protocol(state: &str, k: usize, l: usize, seed: u64) -> PyResult<(f64, f64, f64)> {
    let task = MergeTask::new(pure(state)?, k, l, 0.0, seed).map_err(err)?;
    let out = merging::run_protocol(&task).map_err(err)?;
    Ok((out.error, out.condition_value, out.cost))
}

/// CSV text produced by an experiment config (JSON), without writing files.
#[pyfunction]
fn compute(config: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::from_json(config).map_err(err)?;
    let rep = experiment::compute(&cfg).map_err(err)?;
    rep.table.to_csv_string().map_err(err)
}

#[pymodule]
fn qmerge(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(builtin_state, m)?)?;
    m.add_function(wrap_pyfunction!(partial_trace, m)?)?;
    m.add_function(wrap_pyfunction!(h_min_cond, m)?)?;
    m.add_function(wrap_pyfunction!(h_min_rel, m)?)?;
    m.add_function(wrap_pyfunction!(h_max_cond, m)?)?;
    m.add_function(wrap_pyfunction!(h_min_smooth_cond, m)?)?;
    m.add_function(wrap_pyfunction!(duality_pair, m)?)?;
    m.add_function(wrap_pyfunction!(plan_cost, m)?)?;
    m.add_function(wrap_pyfunction!(run_protocol, m)?)?;
    m.add_function(wrap_pyfunction!(compute, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
