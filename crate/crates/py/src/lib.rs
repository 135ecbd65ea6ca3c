//! Python bindings: suite runs and the closed-form tables. Structured results
//! cross the boundary as JSON strings or plain dicts and lists.

use bachflow_core::cli_reports::{self, ExperimentConfig};
use bachflow_core::indicial;
use bachflow_core::spectral_analysis;
use bachflow_core::{Complex64, Error};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(err: Error) -> PyErr {
    match err.root() {
        Error::Config(_) | Error::InvalidParameter(_) | Error::Shape(_) | Error::Json(_) => {
            PyValueError::new_err(err.to_string())
        }
        _ => PyRuntimeError::new_err(err.to_string()),
    }
}

/// Names of the registered suites.
#[pyfunction]
fn list_suites() -> Vec<&'static str> {
    cli_reports::list_suites()
}

/// Diagnostics for a JSON config; empty when the config is valid.
#[pyfunction]
fn validate_config(text: &str) -> Vec<String> {
    cli_reports::parse_config(text).err().unwrap_or_default()
}

/// Default config of a suite as JSON.
#[pyfunction]
fn default_config(suite: &str) -> PyResult<String> {
    if !cli_reports::list_suites().contains(&suite) {
        return Err(PyValueError::new_err(format!("unknown suite `{suite}`")));
    }
    serde_json::to_string(&ExperimentConfig::for_suite(suite)).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Runs a suite from a JSON config and returns the report as JSON. When
/// `output_dir` is given the report, tables and binaries are written there.
#[pyfunction]
#[pyo3(signature = (config, output_dir=None))]
fn run_suite(py: Python<'_>, config: &str, output_dir: Option<String>) -> PyResult<String> {
    let cfg = cli_reports::parse_config(config).map_err(|d| PyValueError::new_err(d.join("; ")))?;
    let run = py.detach(|| cli_reports::run_suite(&cfg)).map_err(to_py)?;
    if let Some(dir) = output_dir {
        run.write(std::path::Path::new(&dir)).map_err(to_py)?;
    }
    serde_json::to_string(&run.report).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Integer indicial roots at `λ = 0`, one row of four per subspace.
#[pyfunction]
fn zero_lambda_table(n: usize) -> PyResult<Vec<Vec<i64>>> {
    if n < 4 {
        return Err(PyValueError::new_err("indicial analysis needs n >= 4"));
    }
    Ok(indicial::zero_lambda_table(n).iter().map(|r| r.to_vec()).collect())
}

/// Distance from the critical line to the nearest indicial root at `λ`.
#[pyfunction]
#[pyo3(signature = (n, re_lambda, im_lambda=0.0))]
fn indicial_radius(n: usize, re_lambda: f64, im_lambda: f64) -> PyResult<f64> {
    indicial::indicial_radius(n, Complex64::new(re_lambda, im_lambda)).map_err(to_py)
}

/// Threshold constants as a dict.
#[pyfunction]
fn thresholds<'py>(py: Python<'py>, n: usize) -> PyResult<Bound<'py, PyDict>> {
    let t = indicial::thresholds(n);
    let d = PyDict::new(py);
    d.set_item("n", t.n)?;
    d.set_item("eps_v0", t.eps_v0)?;
    d.set_item("eps_v1", t.eps_v1)?;
    d.set_item("eps_v2", t.eps_v2)?;
    d.set_item("eps_v3", t.eps_v3)?;
    d.set_item("a", t.a)?;
    d.set_item("r", t.r)?;
    Ok(d)
}

/// Component gaps on hyperbolic space and their minimum.
#[pyfunction]
fn gap_constants<'py>(py: Python<'py>, n: usize) -> PyResult<Bound<'py, PyDict>> {
    let g = spectral_analysis::gap_constants(n);
    let d = PyDict::new(py);
    d.set_item("n", g.n)?;
    d.set_item("trace", g.trace)?;
    d.set_item("im_k", g.im_k)?;
    d.set_item("tt", g.tt)?;
    d.set_item("a", g.a)?;
    Ok(d)
}

/// Eigenvalue of `L` on the torus Fourier mode `k`.
#[pyfunction]
fn torus_mode_eigenvalue(k: Vec<i64>, n: usize) -> f64 {
    spectral_analysis::torus_mode_spectrum(&k, n).eigenvalue
}

/// Eigenvalues of `L` on degree `1..=k_max` trace modes of the unit sphere.
#[pyfunction]
fn sphere_trace_eigenvalues(k_max: usize, n: usize) -> Vec<f64> {
    spectral_analysis::sphere_trace_spectrum(k_max, n).iter().map(|m| m.eigenvalue).collect()
}

/// Numerical kernel dimension of `L` on trace tensors of `S^n`.
#[pyfunction]
#[pyo3(signature = (n, degree=4))]
fn sphere_kernel_dim(n: usize, degree: u32) -> PyResult<usize> {
    Ok(spectral_analysis::sphere_trace_kernel(n, degree).map_err(to_py)?.kernel_dim)
}

#[pymodule]
fn bachflow(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SCHEMA_VERSION", cli_reports::SCHEMA_VERSION)?;
    m.add_function(wrap_pyfunction!(list_suites, m)?)?;
    m.add_function(wrap_pyfunction!(validate_config, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    m.add_function(wrap_pyfunction!(zero_lambda_table, m)?)?;
    m.add_function(wrap_pyfunction!(indicial_radius, m)?)?;
    m.add_function(wrap_pyfunction!(thresholds, m)?)?;
    m.add_function(wrap_pyfunction!(gap_constants, m)?)?;
    m.add_function(wrap_pyfunction!(torus_mode_eigenvalue, m)?)?;
    m.add_function(wrap_pyfunction!(sphere_trace_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(sphere_kernel_dim, m)?)?;
    Ok(())
}
