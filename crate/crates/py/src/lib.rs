//! Python bindings: metrics, curvature, spinor checks, Clifford data and jobs.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;
use tractorlab_core::catalog::{example, EXAMPLES};
use tractorlab_core::clifford::{self, CliffordRep};
use tractorlab_core::geometry::CheckConfig;
use tractorlab_core::job::{Globals, Job};
use tractorlab_core::metricfile::{LoadedMetric, MetricFile};
use tractorlab_core::{spintractor, tractor, Error};

fn err(e: Error) -> PyErr {
    match e {
        Error::Validation { .. } | Error::Constraint(_) | Error::Io(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Converts through JSON so reports arrive as plain dicts and lists.
fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn config(samples: usize, seed: u64, tol: f64) -> CheckConfig {
    CheckConfig { samples, seed, tol }
}

/// A metric on a coordinate chart, with its frame and optional Walker and spinor data.
#[pyclass(name = "Metric", module = "tractorlab")]
struct PyMetric {
    inner: LoadedMetric,
}

impl PyMetric {
    fn load(file: MetricFile) -> PyResult<Self> {
        let inner = file.load(&CheckConfig::default()).map_err(err)?;
        Ok(PyMetric { inner })
    }

    fn spinor(&self) -> PyResult<&spintractor::SpinorField> {
        self.inner
            .spinor
            .as_ref()
            .ok_or_else(|| PyValueError::new_err("metric carries no spinor field"))
    }
}

#[pymethods]
impl PyMetric {
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Self::load(MetricFile::parse(text).map_err(err)?)
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        Self::load(MetricFile::read(Path::new(path)).map_err(err)?)
    }

    #[staticmethod]
    fn example(name: &str) -> PyResult<Self> {
        Self::load(example(name).map_err(err)?.file().map_err(err)?)
    }

    #[getter]
    fn signature(&self) -> (usize, usize) {
        self.inner.metric.signature()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.metric.dim()
    }

    #[getter]
    fn coordinates(&self) -> Vec<String> {
        self.inner.metric.chart().names().to_vec()
    }

    #[getter]
    fn has_spinor(&self) -> bool {
        self.inner.spinor.is_some()
    }

    #[getter]
    fn walker_rank(&self) -> Option<usize> {
        self.inner.distribution.as_ref().map(|d| d.rank())
    }

    fn center(&self) -> Vec<f64> {
        self.inner.metric.chart().center()
    }

    /// Metric, Ricci, scalar curvature and Schouten tensor at a point.
    fn curvature<'py>(&self, py: Python<'py>, point: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
        if point.len() != self.dim() {
            return Err(PyValueError::new_err(format!(
                "expected {} coordinates",
                self.dim()
            )));
        }
        let geo = self.inner.metric.geometry_at(&point).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("g", rows(&geo.conn.g))?;
        d.set_item("ricci", rows(&geo.ricci))?;
        d.set_item("scal", geo.scal)?;
        d.set_item("schouten", rows(&geo.schouten))?;
        Ok(d)
    }

    #[pyo3(signature = (samples = 64, seed = 42, tol = 1e-8))]
    fn tractor_metricity<'py>(
        &self,
        py: Python<'py>,
        samples: usize,
        seed: u64,
        tol: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let g = &self.inner.metric;
        let fields = vec![
            tractor::TractorField::plus(g),
            tractor::TractorField::minus(g),
        ];
        let r = tractor::check_tractor_metricity(g, &fields, &config(samples, seed, tol))
            .map_err(err)?;
        to_py(py, &r)
    }

    /// Residual of the twistor equation for the metric's spinor.
    #[pyo3(signature = (samples = 64, seed = 42, tol = 1e-6))]
    fn check_twistor<'py>(
        &self,
        py: Python<'py>,
        samples: usize,
        seed: u64,
        tol: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let r = spintractor::check_twistor(
            &self.inner.metric,
            &self.inner.frame,
            self.spinor()?,
            &config(samples, seed, tol),
        )
        .map_err(err)?;
        to_py(py, &r)
    }

    #[pyo3(signature = (samples = 64, seed = 42, tol = 1e-7))]
    fn check_parallel_spinor<'py>(
        &self,
        py: Python<'py>,
        samples: usize,
        seed: u64,
        tol: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let r = spintractor::check_parallel_spinor(
            &self.inner.metric,
            &self.inner.frame,
            self.spinor()?,
            &config(samples, seed, tol),
        )
        .map_err(err)?;
        to_py(py, &r)
    }

    /// Ranks of the kernel distribution of the spin tractor built from the spinor.
    #[pyo3(signature = (samples = 16, seed = 42, tol = 1e-6))]
    fn kernel_ranks(&self, samples: usize, seed: u64, tol: f64) -> PyResult<Vec<usize>> {
        let c = config(samples, seed, tol);
        let (g, f) = (&self.inner.metric, &self.inner.frame);
        let psi = spintractor::twistor_to_tractor(g, f, self.spinor()?, &c).map_err(err)?;
        let (samples, _) = spintractor::kernel_distribution(g, f, &psi, &c).map_err(err)?;
        Ok(samples.iter().map(|s| s.rank).collect())
    }

    fn __repr__(&self) -> String {
        let (p, q) = self.signature();
        format!(
            "Metric(signature=({p}, {q}), coordinates={:?})",
            self.coordinates()
        )
    }
}

/// The real Clifford representation for signature `(p, q)`.
#[pyclass(name = "CliffordRep", module = "tractorlab")]
struct PyClifford {
    inner: CliffordRep,
}

#[pymethods]
impl PyClifford {
    #[new]
    fn new(p: usize, q: usize) -> PyResult<Self> {
        Ok(PyClifford {
            inner: CliffordRep::build(p, q).map_err(err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn spinor_dim(&self) -> usize {
        self.inner.spinor_dim()
    }

    #[getter]
    fn rep_id(&self) -> String {
        self.inner.rep_id()
    }

    fn gamma(&self, i: usize) -> PyResult<Vec<Vec<i64>>> {
        if i >= self.inner.dim() {
            return Err(PyValueError::new_err(format!("index {i} out of range")));
        }
        let m = self.inner.gamma(i);
        Ok(m.row_iter().map(|r| r.iter().copied().collect()).collect())
    }

    /// Dimension of the annihilator of a spinor.
    fn kernel_dim(&self, spinor: Vec<f64>) -> PyResult<usize> {
        self.check_len(&spinor)?;
        Ok(
            clifford::spinor_kernel(&self.inner, &DVector::from_vec(spinor))
                .map_err(err)?
                .ncols(),
        )
    }

    fn is_pure(&self, spinor: Vec<f64>) -> PyResult<bool> {
        self.check_len(&spinor)?;
        clifford::is_pure(&self.inner, &DVector::from_vec(spinor)).map_err(err)
    }
}

impl PyClifford {
    fn check_len(&self, v: &[f64]) -> PyResult<()> {
        if v.len() == self.inner.spinor_dim() {
            Ok(())
        } else {
            Err(PyValueError::new_err(format!(
                "expected {} components",
                self.inner.spinor_dim()
            )))
        }
    }
}

/// The shipped example corpus.
#[pyfunction]
fn list_examples(py: Python<'_>) -> PyResult<Bound<'_, PyAny>> {
    to_py(py, &EXAMPLES)
}

/// Runs a TOML job and returns its report. Relative paths resolve against `base_dir`.
#[pyfunction]
#[pyo3(signature = (toml, base_dir = ".", seed = None, samples = None, tol = None))]
fn run_job<'py>(
    py: Python<'py>,
    toml: &str,
    base_dir: &str,
    seed: Option<u64>,
    samples: Option<usize>,
    tol: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let job = Job::parse(toml, Path::new(base_dir)).map_err(err)?;
    let globals = Globals {
        seed,
        samples,
        tol,
        ..Globals::default()
    };
    let report = job.run(&globals).map_err(err)?;
    py.import("json")?
        .call_method1("loads", (report.to_json(false),))
}

#[pymodule]
fn tractorlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMetric>()?;
    m.add_class::<PyClifford>()?;
    m.add_function(wrap_pyfunction!(list_examples, m)?)?;
    m.add_function(wrap_pyfunction!(run_job, m)?)?;
    Ok(())
}
