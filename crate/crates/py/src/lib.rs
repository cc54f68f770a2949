//! Python bindings. Vectors cross the boundary as lists of floats; random
//! objects are named by `(seed, stream)` pairs as in the Rust API.

use hadarot::analytic::{self, BoundParams, Constants};
use hadarot::experiment::{self, ExperimentConfig, ExperimentKind, OutputFormat, SampleSchedule};
use hadarot::lemma_suite::{self, SuiteConfig};
use hadarot::rng::{Layer, StreamKey};
use hadarot::{hadamard, metrics, rotor, Dimension, SignVector, UnitVector};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: hadarot::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn dim(d: usize) -> PyResult<Dimension> {
    Dimension::new(d).map_err(err)
}

fn unit(u: Vec<f64>) -> PyResult<UnitVector> {
    UnitVector::new(u).map_err(err)
}

fn signs(s: &[i8]) -> PyResult<SignVector> {
    SignVector::new(s).map_err(err)
}

/// The sign matrices `D1`, `D2` of one two-block rotation.
#[pyclass(name = "RotationSeed", frozen)]
struct PyRotationSeed {
    inner: rotor::RotationSeed,
}

#[pymethods]
impl PyRotationSeed {
    /// Derives both sign vectors from the substreams of `(seed, stream)`.
    #[staticmethod]
    fn derive(d: usize, seed: u64, stream: u64) -> PyResult<Self> {
        Ok(Self {
            inner: rotor::RotationSeed::derive(dim(d)?, StreamKey::new(seed, stream)),
        })
    }

    #[staticmethod]
    fn from_signs(d1: Vec<i8>, d2: Vec<i8>) -> PyResult<Self> {
        let inner = rotor::RotationSeed::from_signs(signs(&d1)?, signs(&d2)?).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn d1(&self) -> Vec<i8> {
        self.inner.d1.to_i8()
    }

    #[getter]
    fn d2(&self) -> Vec<i8> {
        self.inner.d2.to_i8()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("RotationSeed(d={})", self.inner.len())
    }
}

/// Unnormalized Walsh-Hadamard transform `H x`.
#[pyfunction]
fn fwht(x: Vec<f64>) -> PyResult<Vec<f64>> {
    let d = dim(x.len())?;
    hadamard::fwht(&x, d).map_err(err)
}

#[pyfunction]
fn naive_hadamard_multiply(x: Vec<f64>) -> PyResult<Vec<f64>> {
    let d = dim(x.len())?;
    hadamard::naive_hadamard_multiply(&x, d).map_err(err)
}

#[pyfunction]
fn hadamard_entry(row: usize, col: usize) -> f64 {
    hadamard::hadamard_entry(row, col)
}

/// `T(u) = (1/d) H D1 H D2 u`.
#[pyfunction]
fn two_block_transform(u: Vec<f64>, seed: &PyRotationSeed) -> PyResult<Vec<f64>> {
    Ok(rotor::two_block_transform(&unit(u)?, &seed.inner)
        .map_err(err)?
        .into_vec())
}

#[pyfunction]
fn one_block_transform(u: Vec<f64>, signs_: Vec<i8>) -> PyResult<Vec<f64>> {
    Ok(rotor::one_block_transform(&unit(u)?, &signs(&signs_)?)
        .map_err(err)?
        .into_vec())
}

#[pyfunction]
fn conditional_coefficients(u: Vec<f64>, d2: Vec<i8>) -> PyResult<Vec<f64>> {
    rotor::conditional_coefficients(&unit(u)?, &signs(&d2)?).map_err(err)
}

#[pyfunction]
fn sample_uniform_sphere(d: usize, seed: u64, stream: u64) -> PyResult<Vec<f64>> {
    let mut rng = StreamKey::new(seed, stream).rng(Layer::Gauss);
    Ok(rotor::sample_uniform_sphere(dim(d)?, &mut rng).into_vec())
}

#[pyfunction]
fn nearest_hypercube_vertex(x: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(rotor::nearest_hypercube_vertex(&x).map_err(err)?.to_vec())
}

#[pyfunction]
fn hypercube_distance(x: Vec<f64>) -> PyResult<f64> {
    Ok(rotor::hypercube_distance(&unit(x)?))
}

#[pyfunction]
fn sphere_coordinate_cdf(t: f64, d: usize) -> PyResult<f64> {
    analytic::sphere_coordinate_cdf(t, dim(d)?).map_err(err)
}

#[pyfunction]
fn m_d(d: usize) -> PyResult<f64> {
    analytic::m_d(dim(d)?).map_err(err)
}

#[pyfunction]
fn wasserstein_lower_bound(d: usize, t: f64) -> PyResult<f64> {
    let p = BoundParams::new(dim(d)?, t).map_err(err)?;
    Ok(analytic::wasserstein_lower_bound(&p))
}

/// `(t, value)` maximizing the lower bound, or `None` when no `t` is admissible.
#[pyfunction]
#[pyo3(signature = (d, grid_size = analytic::DEFAULT_T_GRID))]
fn max_lower_bound(d: usize, grid_size: usize) -> PyResult<Option<(f64, f64)>> {
    analytic::max_lower_bound(dim(d)?, grid_size).map_err(err)
}

#[pyfunction]
fn wasserstein_upper_bound_e1(d: usize) -> PyResult<f64> {
    analytic::wasserstein_upper_bound_e1(dim(d)?).map_err(err)
}

#[pyfunction]
fn positive_bound(d: usize) -> PyResult<f64> {
    Ok(analytic::positive_bound(dim(d)?))
}

#[pyfunction]
fn constants(py: Python<'_>) -> PyResult<Bound<'_, PyDict>> {
    let c = Constants::compute();
    let out = PyDict::new(py);
    out.set_item("c_pos", c.c_pos)?;
    out.set_item("c_g", c.c_g)?;
    out.set_item("c3", c.c3)?;
    out.set_item("w1_asymptote", c.w1_asymptote)?;
    Ok(out)
}

/// KS distance of `[T(u)]_k` over `n` seeds to the exact spherical marginal.
#[pyfunction]
fn marginal_ks_experiment(
    u: Vec<f64>,
    k: usize,
    n: usize,
    seed: u64,
    stream: u64,
) -> PyResult<f64> {
    metrics::marginal_ks_experiment(&unit(u)?, k, n, StreamKey::new(seed, stream)).map_err(err)
}

/// `(estimate, standard_error)` of `E |X - sign(X)/sqrt(d)|`.
#[pyfunction]
fn e1_wasserstein_mc(d: usize, n: usize, seed: u64, stream: u64) -> PyResult<(f64, f64)> {
    let e = metrics::e1_wasserstein_mc(dim(d)?, n, StreamKey::new(seed, stream)).map_err(err)?;
    Ok((e.estimate, e.standard_error))
}

/// Runs the verification suite and returns its reports as a JSON string.
#[pyfunction]
#[pyo3(signature = (only = None, seed = None))]
fn verify(py: Python<'_>, only: Option<String>, seed: Option<u64>) -> PyResult<String> {
    let mut config = SuiteConfig::default();
    if let Some(s) = seed {
        config.master_seed = s;
    }
    let reports = py
        .detach(|| lemma_suite::run_suite(&config, only.as_deref()))
        .map_err(err)?;
    serde_json::to_string(&reports).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Runs an experiment (`"marginal"`, `"lower-bound"` or `"e1"`) and returns
/// the rendered CSV or JSON text.
#[pyfunction]
#[pyo3(signature = (kind, dims = None, seed = None, n_inputs = None, n_samples = None, workers = 1, format = "csv"))]
#[allow(clippy::too_many_arguments)]
fn run_experiment(
    py: Python<'_>,
    kind: &str,
    dims: Option<Vec<usize>>,
    seed: Option<u64>,
    n_inputs: Option<usize>,
    n_samples: Option<usize>,
    workers: usize,
    format: &str,
) -> PyResult<String> {
    let kind = match kind {
        "marginal" => ExperimentKind::Marginal,
        "lower-bound" => ExperimentKind::LowerBound,
        "e1" => ExperimentKind::E1,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown experiment {other:?}"
            )))
        }
    };
    let format = match format {
        "csv" => OutputFormat::Csv,
        "json" => OutputFormat::Json,
        other => return Err(PyValueError::new_err(format!("unknown format {other:?}"))),
    };
    let mut config = ExperimentConfig::defaults(kind);
    config.workers = workers;
    if let Some(d) = dims {
        config.dims = d;
    }
    if let Some(s) = seed {
        config.master_seed = s;
    }
    if let Some(n) = n_inputs {
        config.n_inputs = n;
    }
    if let Some(n) = n_samples {
        config.n_samples = SampleSchedule::Fixed(n);
    }
    let report = py.detach(|| experiment::run(&config)).map_err(err)?;
    Ok(report.render(format))
}

#[pymodule]
fn pyhadarot(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRotationSeed>()?;
    m.add_function(wrap_pyfunction!(fwht, m)?)?;
    m.add_function(wrap_pyfunction!(naive_hadamard_multiply, m)?)?;
    m.add_function(wrap_pyfunction!(hadamard_entry, m)?)?;
    m.add_function(wrap_pyfunction!(two_block_transform, m)?)?;
    m.add_function(wrap_pyfunction!(one_block_transform, m)?)?;
    m.add_function(wrap_pyfunction!(conditional_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(sample_uniform_sphere, m)?)?;
    m.add_function(wrap_pyfunction!(nearest_hypercube_vertex, m)?)?;
    m.add_function(wrap_pyfunction!(hypercube_distance, m)?)?;
    m.add_function(wrap_pyfunction!(sphere_coordinate_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(m_d, m)?)?;
    m.add_function(wrap_pyfunction!(wasserstein_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(max_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(wasserstein_upper_bound_e1, m)?)?;
    m.add_function(wrap_pyfunction!(positive_bound, m)?)?;
    m.add_function(wrap_pyfunction!(constants, m)?)?;
    m.add_function(wrap_pyfunction!(marginal_ks_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(e1_wasserstein_mc, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
