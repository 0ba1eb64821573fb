//! Python bindings. Every entry point takes and returns JSON text so the
//! Python side needs nothing beyond the `json` module.

use std::path::Path;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde_json::json;

use aharmonic::experiment::{self, Overrides, Scenario};
use aharmonic::model::{builtin_model, log_grid, structure_report, ModelSpec};
use aharmonic::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Domain(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn dump(v: &serde_json::Value) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Solve one scenario given as JSON. Returns JSON with `verdicts`,
/// `diagnostics` and `profile`; writes the usual three files when `out` is set.
#[pyfunction]
#[pyo3(signature = (config, out=None, grid=None, samples=None))]
fn run_scenario(py: Python<'_>, config: &str, out: Option<&str>, grid: Option<usize>, samples: Option<usize>) -> PyResult<String> {
    let overrides = Overrides {
        grid,
        samples,
        ..Default::default()
    };
    let sc = Scenario::from_json(config).and_then(|s| s.with_overrides(&overrides)).map_err(py_err)?;
    let bundle = py
        .detach(|| experiment::run_scenario(&sc))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    if let Some(dir) = out {
        bundle.write_to(Path::new(dir)).map_err(py_err)?;
    }
    dump(&json!({
        "verdicts": bundle.verdicts,
        "diagnostics": bundle.diagnostics,
        "profile": bundle.profile,
    }))
}

/// Run every config in `dir`; returns (exit code, summary table).
#[pyfunction]
#[pyo3(signature = (dir, out, workers=4))]
fn run_suite(py: Python<'_>, dir: &str, out: &str, workers: usize) -> PyResult<(i32, String)> {
    let summary = py
        .detach(|| experiment::run_suite(Path::new(dir), Path::new(out), &Overrides::default(), workers))
        .map_err(py_err)?;
    Ok((summary.exit_code, summary.table()))
}

/// Structure report for a model spec such as `{"name": "p_harmonic", "params": {"p": 3}}`.
#[pyfunction]
fn check_model(model: &str) -> PyResult<String> {
    let spec: ModelSpec = serde_json::from_str(model).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let m = builtin_model(&spec).map_err(py_err)?;
    let report = structure_report(&m, &log_grid(1e-6, 1e3, 400)).map_err(py_err)?;
    dump(&json!({
        "model": m.name(),
        "alpha": m.alpha(),
        "beta": m.beta(),
        "structure": report,
    }))
}

/// Cordes sampling for the builtin structure pairs.
#[pyfunction]
#[pyo3(signature = (n=100_000, seed=0))]
fn cordes_suite(py: Python<'_>, n: u64, seed: u64) -> PyResult<String> {
    let reports = py.detach(|| aharmonic::hessian::cordes_suite(n, seed)).map_err(py_err)?;
    dump(&json!(reports))
}

#[pymodule]
fn pyaharmonic(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    m.add_function(wrap_pyfunction!(check_model, m)?)?;
    m.add_function(wrap_pyfunction!(cordes_suite, m)?)?;
    Ok(())
}
