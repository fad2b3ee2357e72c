//! Python bindings: catalog spaces, curvature, flows, manifests and checks.

use std::path::Path;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use hflow::asymptotics::einstein_residual;
use hflow::catalog::{preset, PRESETS};
use hflow::curvature::{bound_suite, ricci_eigen, scalar_curvature, MetricState};
use hflow::document::AlgebraDocument;
use hflow::flow::{integrate_flow, FlowConfig};
use hflow::isotropy::{classify_topology, BracketTensor, ReductiveSpace};
use hflow::run::{execute, RunManifest};

create_exception!(hflow_py, HflowError, PyException);

fn err(e: hflow::Error) -> PyErr {
    HflowError::new_err(format!("{}: {e}", e.kind()))
}

/// A decomposed homogeneous space `G/H`.
#[pyclass(frozen)]
struct Space {
    label: String,
    space: ReductiveSpace,
    tensor: BracketTensor,
    ties: Vec<Vec<usize>>,
}

impl Space {
    fn state(&self, x: Vec<f64>) -> PyResult<MetricState> {
        if x.len() != self.space.n_modules() {
            return Err(err(hflow::Error::Input(format!(
                "expected {} eigenvalues, got {}",
                self.space.n_modules(),
                x.len()
            ))));
        }
        MetricState::new(x).map_err(err)
    }
}

#[pymethods]
impl Space {
    /// Catalog preset by key.
    #[new]
    #[pyo3(signature = (key, seed = 0))]
    fn new(key: &str, seed: u64) -> PyResult<Self> {
        let c = preset(key).map_err(err)?;
        let space = ReductiveSpace::build(&c.algebra, &c.split, &c.h_indices, seed).map_err(err)?;
        let tensor = BracketTensor::new(&space);
        Ok(Self {
            label: key.to_string(),
            space,
            tensor,
            ties: c.ties,
        })
    }

    /// Space described by an algebra document on disk.
    #[staticmethod]
    #[pyo3(signature = (path, seed = 0))]
    fn from_document(path: &str, seed: u64) -> PyResult<Self> {
        let (alg, split, h) = AlgebraDocument::load(Path::new(path)).and_then(|d| d.to_parts()).map_err(err)?;
        let space = ReductiveSpace::build(&alg, &split, &h, seed).map_err(err)?;
        let tensor = BracketTensor::new(&space);
        Ok(Self {
            label: path.to_string(),
            space,
            tensor,
            ties: Vec::new(),
        })
    }

    #[getter]
    fn label(&self) -> String {
        self.label.clone()
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.space.dims()
    }

    #[getter]
    fn n_l(&self) -> usize {
        self.space.n_l
    }

    #[getter]
    fn casimir(&self) -> Vec<f64> {
        self.space.casimir.clone()
    }

    #[getter]
    fn ties(&self) -> Vec<Vec<usize>> {
        self.ties.clone()
    }

    #[getter]
    fn contractible(&self) -> bool {
        classify_topology(&self.space).contractible
    }

    /// Bracket coefficient `[ijk]`.
    fn bracket(&self, i: usize, j: usize, k: usize) -> PyResult<f64> {
        let n = self.space.n_modules();
        if i >= n || j >= n || k >= n {
            return Err(err(hflow::Error::Input(format!("module index out of range for {n} modules"))));
        }
        Ok(self.tensor.get(i, j, k))
    }

    /// Ricci eigenvalues of the metric with module eigenvalues `x`.
    fn ricci(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        ricci_eigen(&self.state(x)?, &self.space, &self.tensor).map_err(err)
    }

    fn scalar(&self, x: Vec<f64>) -> PyResult<f64> {
        scalar_curvature(&self.state(x)?, &self.space, &self.tensor).map_err(err)
    }

    fn einstein_residual(&self, x: Vec<f64>) -> PyResult<f64> {
        einstein_residual(&self.state(x)?, &self.space, &self.tensor).map_err(err)
    }

    /// Estimate slacks as a name → value dict; negative means violated.
    fn bound_slacks<'py>(&self, py: Python<'py>, x: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
        let b = bound_suite(&self.state(x)?, &self.space, &self.tensor).map_err(err)?;
        let d = PyDict::new(py);
        for (k, v) in b.slacks() {
            d.set_item(k, v)?;
        }
        Ok(d)
    }

    /// Integrates the flow; returns `{t, x, scalar, regime, terminal_t}`.
    #[pyo3(signature = (x0, t_end = 1e4, rel_tol = 1e-10, abs_tol = 1e-10))]
    fn flow<'py>(
        &self,
        py: Python<'py>,
        x0: Vec<f64>,
        t_end: f64,
        rel_tol: f64,
        abs_tol: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let cfg = FlowConfig {
            t_end,
            rel_tol,
            abs_tol,
            ..FlowConfig::default()
        };
        cfg.validate().map_err(err)?;
        let state = self.state(x0)?;
        let tr = py
            .detach(|| integrate_flow(&state, &self.space, &self.tensor, &cfg))
            .map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("t", tr.samples.iter().map(|s| s.t).collect::<Vec<_>>())?;
        d.set_item("x", tr.samples.iter().map(|s| s.x.clone()).collect::<Vec<_>>())?;
        d.set_item("scalar", tr.samples.iter().map(|s| s.scalar).collect::<Vec<_>>())?;
        d.set_item("regime", if tr.is_extinct() { "extinct" } else { "immortal" })?;
        d.set_item("terminal_t", tr.terminal().map(|e| e.t))?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("Space({:?}, dims={:?})", self.label, self.space.dims())
    }
}

/// Catalog preset keys.
#[pyfunction]
fn catalog() -> Vec<&'static str> {
    PRESETS.iter().map(|e| e.key).collect()
}

/// Executes a run manifest given as JSON; returns the summary as JSON.
#[pyfunction]
#[pyo3(signature = (manifest_json, base = "."))]
fn run_manifest(py: Python<'_>, manifest_json: &str, base: &str) -> PyResult<String> {
    let m = RunManifest::from_json(manifest_json).map_err(err)?;
    let out = py.detach(|| execute(&m, Path::new(base))).map_err(err)?;
    serde_json::to_string(&out.summary).map_err(|e| err(e.into()))
}

/// Runs a check suite; returns `(suite, space, name, value, limit, pass)` tuples.
#[pyfunction]
#[pyo3(signature = (suite, seed = 0))]
fn check(py: Python<'_>, suite: &str, seed: u64) -> PyResult<Vec<(String, String, String, f64, f64, bool)>> {
    let lines = py.detach(|| hflow::checks::run_suite(suite, seed)).map_err(err)?;
    Ok(lines
        .into_iter()
        .map(|l| (l.suite.to_string(), l.space, l.name, l.value, l.limit, l.pass))
        .collect())
}

#[pymodule]
fn hflow_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Space>()?;
    m.add_function(wrap_pyfunction!(catalog, m)?)?;
    m.add_function(wrap_pyfunction!(run_manifest, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add("HflowError", m.py().get_type::<HflowError>())?;
    Ok(())
}
