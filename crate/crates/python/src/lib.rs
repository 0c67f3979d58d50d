//! Python bindings for `datahide`.
//!
//! Reports come back as plain dicts and lists. Config overrides are passed as
//! keyword arguments using the same keys as the CLI config file.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict};

use datahide::experiments::{
    run_experiment, run_fact_checks, run_suites, select_suites, ConfigLayer, ExperimentConfig, Fault,
};
use datahide::linalg::fidelity_with_pure;
use datahide::scheme::{derive_parameters as derive, HidingScheme, PartySplit, SchemeParams, TransposeDecoder};
use datahide::{CVector, Error, PureState, SeededRng, C64};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Parameter(_) | Error::Dimension(_) | Error::InvalidState(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// Serializes through JSON so nested reports arrive as native Python objects.
fn to_object<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn layer_from(overrides: Option<&Bound<'_, PyDict>>) -> PyResult<ConfigLayer> {
    let mut text = String::new();
    if let Some(kw) = overrides {
        for (key, value) in kw.iter() {
            let key: String = key.extract()?;
            let value = if value.is_instance_of::<PyBool>() {
                value.extract::<bool>()?.to_string()
            } else {
                value.str()?.to_string()
            };
            text.push_str(&format!("{key} = {value}\n"));
        }
    }
    ConfigLayer::parse(&text).map_err(to_py)
}

/// Closed-form `r` and `s` with feasibility flags. Large integers are
/// returned as decimal strings.
#[pyfunction]
#[pyo3(signature = (n, k, d, epsilon = 0.5, delta = 0.5, c_const = None))]
fn derive_parameters<'py>(
    py: Python<'py>,
    n: usize,
    k: usize,
    d: usize,
    epsilon: f64,
    delta: f64,
    c_const: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let out = derive(n, k, d, epsilon, delta, c_const.unwrap_or(datahide::random::DEFAULT_C)).map_err(to_py)?;
    to_object(py, &out)
}

/// Full experiment run; returns the report dict (no files are written).
#[pyfunction]
#[pyo3(signature = (seed, **overrides))]
fn run<'py>(py: Python<'py>, seed: u64, overrides: Option<&Bound<'py, PyDict>>) -> PyResult<Bound<'py, PyAny>> {
    let layer = ConfigLayer { seed: Some(seed), ..layer_from(overrides)? };
    let config = ExperimentConfig::resolve(&layer).map_err(to_py)?;
    let report = py.detach(|| run_experiment(&config)).map_err(to_py)?;
    to_object(py, &report)
}

/// Runs the named invariant suites (comma-separated, or `all`).
#[pyfunction]
#[pyo3(signature = (suites = "all", broken_unitary = false, **overrides))]
fn verify<'py>(
    py: Python<'py>,
    suites: &str,
    broken_unitary: bool,
    overrides: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyAny>> {
    let names = select_suites(suites).map_err(to_py)?;
    let layer = layer_from(overrides)?;
    let layer = ConfigLayer { r: layer.r.or(Some(2)), s: layer.s.or(Some(2)), ..layer };
    let config = ExperimentConfig::resolve(&layer).map_err(to_py)?;
    let fault = broken_unitary.then_some(Fault::BrokenUnitary);
    let outcomes = py.detach(|| run_suites(&names, &config, fault));
    to_object(py, &outcomes)
}

/// Monte Carlo concentration and error-control checks.
#[pyfunction]
#[pyo3(signature = (**overrides))]
fn check_facts<'py>(py: Python<'py>, overrides: Option<&Bound<'py, PyDict>>) -> PyResult<Bound<'py, PyAny>> {
    let layer = layer_from(overrides)?;
    let layer = ConfigLayer { r: layer.r.or(Some(2)), s: layer.s.or(Some(2)), ..layer };
    let config = ExperimentConfig::resolve(&layer).map_err(to_py)?;
    let facts = py.detach(|| run_fact_checks(&config, config.seed)).map_err(to_py)?;
    to_object(py, &facts)
}

/// A sampled hiding scheme.
#[pyclass(frozen)]
struct Scheme {
    inner: HidingScheme,
}

#[pymethods]
impl Scheme {
    #[new]
    #[pyo3(signature = (n, k, d, r, s, seed, epsilon = 0.5, delta = 0.5))]
    #[allow(clippy::too_many_arguments)]
    fn new(n: usize, k: usize, d: usize, r: usize, s: usize, seed: u64, epsilon: f64, delta: f64) -> PyResult<Self> {
        let params = SchemeParams::new(n, k, d, r, s, epsilon, delta).map_err(to_py)?;
        let inner = HidingScheme::build(params, &mut SeededRng::new(seed, 0)).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn code_dim(&self) -> usize {
        self.inner.code_dim()
    }

    fn unitarity_defect(&self) -> f64 {
        self.inner.max_unitarity_defect()
    }

    /// Encodes `amplitudes`, decodes with the given authorized parties and
    /// returns `(fidelity, leakage)`.
    fn roundtrip(&self, amplitudes: Vec<C64>, authorized: Vec<usize>) -> PyResult<(f64, f64)> {
        let phi = PureState::normalized(CVector::from_vec(amplitudes)).map_err(to_py)?;
        let split = PartySplit::new(self.inner.params().n, &authorized).map_err(to_py)?;
        let decoder = TransposeDecoder::build(&self.inner, &split).map_err(to_py)?;
        let encoded = self.inner.encode(&phi.to_density()).map_err(to_py)?;
        let decoded = decoder.decode(&encoded).map_err(to_py)?;
        let fidelity = fidelity_with_pure(&phi, &decoded.state).map_err(to_py)?;
        Ok((fidelity, decoded.leakage))
    }
}

#[pymodule]
fn datahide_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", datahide::VERSION)?;
    m.add_function(wrap_pyfunction!(derive_parameters, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(check_facts, m)?)?;
    m.add_class::<Scheme>()?;
    Ok(())
}
