//! Python bindings. Matrices cross the boundary as lists of rows; configs and
//! reports cross as JSON strings, the same documents the CLI reads and writes.

use ndarray::Array2;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use spcnet::data::{generate_sbm, load_dataset, make_split, save_dataset, SbmConfig, SplitProtocol};
use spcnet::experiment::{classify_once, run_with_workers, ExperimentConfig};
use spcnet::filter::FilterSpec;
use spcnet::model::ModelConfig;
use spcnet::robustness::{perturb, stability_check, PerturbMode, PerturbSpec};
use spcnet::{apply_filter, build_normalized_laplacian, edge_homophily, SpcError};

fn to_py(e: SpcError) -> PyErr {
    match e {
        SpcError::Io(_) | SpcError::MissingFile(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn rows_to_array(rows: Vec<Vec<f64>>, what: &str) -> PyResult<Array2<f64>> {
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != d) {
        return Err(PyValueError::new_err(format!("{what}: rows have unequal lengths")));
    }
    Array2::from_shape_vec((n, d), rows.into_iter().flatten().collect())
        .map_err(|e| PyValueError::new_err(format!("{what}: {e}")))
}

fn array_to_rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn spec(k: f64, t: f64, n: usize, include_identity: bool) -> FilterSpec {
    let s = FilterSpec::spcnet(k, t, n);
    if include_identity {
        s
    } else {
        s.without_identity()
    }
}

fn parse_mode(mode: &str) -> PyResult<PerturbMode> {
    match mode.to_ascii_lowercase().as_str() {
        "add" => Ok(PerturbMode::Add),
        "remove" => Ok(PerturbMode::Remove),
        "mixed" => Ok(PerturbMode::Mixed),
        other => Err(PyValueError::new_err(format!("unknown perturb mode {other:?}"))),
    }
}

/// `C_0..C_N` for order `k` and time `t`.
#[pyfunction]
fn pc_coefficients(k: f64, t: f64, n: usize) -> Vec<f64> {
    spcnet::pc_coefficients(k, t, n).values
}

/// `∂C_n/∂k` for `n = 0..N`.
#[pyfunction]
fn pc_coefficients_grad_k(k: f64, t: f64, n: usize) -> Vec<f64> {
    spcnet::pc_coefficients_grad_k(k, t, n).dvalues_dk.unwrap_or_default()
}

/// Scalar response of the filter at eigenvalue `lam`.
#[pyfunction]
#[pyo3(signature = (k, t, n, lam, include_identity = true))]
fn frequency_response(k: f64, t: f64, n: usize, lam: f64, include_identity: bool) -> f64 {
    spec(k, t, n, include_identity).response(lam)
}

#[pyfunction]
fn stability_constant(k: f64, t: f64, n: usize) -> f64 {
    spcnet::stability_constant(&FilterSpec::spcnet(k, t, n))
}

/// Runs an experiment config (JSON text) and returns the report as JSON text.
#[pyfunction]
#[pyo3(signature = (config_json, workers = None))]
fn run(py: Python<'_>, config_json: &str, workers: Option<usize>) -> PyResult<String> {
    let cfg = ExperimentConfig::from_json(config_json).map_err(to_py)?;
    py.detach(|| run_with_workers(&cfg, workers).and_then(|r| r.to_json())).map_err(to_py)
}

/// Undirected simple graph with node features and labels.
#[pyclass(name = "Graph", module = "spcnet_py", frozen)]
struct PyGraph {
    inner: spcnet::Graph,
}

#[pymethods]
impl PyGraph {
    /// Without features every node gets a single constant feature; without
    /// labels every node is in class 0.
    #[new]
    #[pyo3(signature = (num_nodes, edges, features = None, labels = None, num_classes = None))]
    fn new(
        num_nodes: usize,
        edges: Vec<(usize, usize)>,
        features: Option<Vec<Vec<f64>>>,
        labels: Option<Vec<usize>>,
        num_classes: Option<usize>,
    ) -> PyResult<Self> {
        let x = match features {
            Some(rows) => rows_to_array(rows, "features")?,
            None => Array2::ones((num_nodes, 1)),
        };
        let labels = labels.unwrap_or_else(|| vec![0; num_nodes]);
        let c = num_classes.unwrap_or_else(|| labels.iter().max().map_or(1, |m| m + 1));
        let inner = spcnet::Graph::new(num_nodes, edges, x, labels, c).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Two-block stochastic block model with Gaussian features.
    #[staticmethod]
    #[pyo3(signature = (nodes, p, q, sigma = 1.0, seed = 0))]
    fn sbm(nodes: usize, p: f64, q: f64, sigma: f64, seed: u64) -> PyResult<Self> {
        let cfg = SbmConfig { nodes, sigma, ..SbmConfig::new(p, q, seed) };
        Ok(Self { inner: generate_sbm(&cfg).map_err(to_py)? })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { inner: load_dataset(path).map_err(to_py)? })
    }

    fn save(&self, name: &str, dir: &str) -> PyResult<()> {
        save_dataset(&self.inner, name, dir).map_err(to_py)
    }

    #[getter]
    fn num_nodes(&self) -> usize {
        self.inner.num_nodes()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.num_edges()
    }

    #[getter]
    fn feature_dim(&self) -> usize {
        self.inner.feature_dim()
    }

    #[getter]
    fn num_classes(&self) -> usize {
        self.inner.num_classes()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().to_vec()
    }

    #[getter]
    fn labels(&self) -> Vec<usize> {
        self.inner.labels().to_vec()
    }

    #[getter]
    fn features(&self) -> Vec<Vec<f64>> {
        array_to_rows(self.inner.features())
    }

    fn homophily(&self) -> PyResult<f64> {
        edge_homophily(&self.inner).map_err(to_py)
    }

    /// Dense normalized Laplacian `I − (D+I)^{-1/2}(A+I)(D+I)^{-1/2}`.
    fn laplacian(&self) -> Vec<Vec<f64>> {
        array_to_rows(&build_normalized_laplacian(&self.inner).to_dense())
    }

    #[pyo3(signature = (signal, k, t, n = 10, include_identity = true))]
    fn apply_filter(&self, signal: Vec<Vec<f64>>, k: f64, t: f64, n: usize, include_identity: bool) -> PyResult<Vec<Vec<f64>>> {
        let b = rows_to_array(signal, "signal")?;
        let l = build_normalized_laplacian(&self.inner);
        let z = apply_filter(&l, b.view(), &spec(k, t, n, include_identity)).map_err(to_py)?;
        Ok(array_to_rows(&z))
    }

    #[pyo3(signature = (ratio, mode = "mixed", seed = 0))]
    fn perturb(&self, ratio: f64, mode: &str, seed: u64) -> PyResult<Self> {
        let spec = PerturbSpec { ratio, mode: parse_mode(mode)?, seed };
        Ok(Self { inner: perturb(&self.inner, &spec).map_err(to_py)? })
    }

    /// `{bound, observed, margin, constant, laplacian_distance}` for the pair
    /// (`self`, `perturbed`).
    #[pyo3(signature = (perturbed, k, t, n = 10))]
    fn stability_check<'py>(&self, py: Python<'py>, perturbed: &PyGraph, k: f64, t: f64, n: usize) -> PyResult<Bound<'py, PyDict>> {
        let c = stability_check(&self.inner, &perturbed.inner, &FilterSpec::spcnet(k, t, n)).map_err(to_py)?;
        let out = PyDict::new(py);
        out.set_item("bound", c.bound)?;
        out.set_item("observed", c.observed)?;
        out.set_item("margin", c.margin)?;
        out.set_item("constant", c.constant)?;
        out.set_item("laplacian_distance", c.laplacian_distance)?;
        Ok(out)
    }

    /// Splits, trains and tests once. `model_json` and `split_json` use the
    /// config-file schema; defaults are the library defaults and a 60/20/20 split.
    #[pyo3(signature = (seed = 0, model_json = None, split_json = None))]
    fn classify(&self, py: Python<'_>, seed: u64, model_json: Option<&str>, split_json: Option<&str>) -> PyResult<String> {
        let bad = |e: serde_json::Error| PyValueError::new_err(e.to_string());
        let model: ModelConfig = match model_json {
            Some(s) => serde_json::from_str(s).map_err(bad)?,
            None => ModelConfig::default(),
        };
        model.validate().map_err(to_py)?;
        let protocol: SplitProtocol = match split_json {
            Some(s) => serde_json::from_str(s).map_err(bad)?,
            None => SplitProtocol::dense_random(),
        };
        let result = py.detach(|| classify_once(&self.inner, &protocol, &model, seed)).map_err(to_py)?;
        serde_json::to_string(&result).map_err(bad)
    }

    /// `(train, val, test)` node indices for `protocol_json` and `seed`.
    #[pyo3(signature = (seed = 0, protocol_json = None))]
    fn split(&self, seed: u64, protocol_json: Option<&str>) -> PyResult<(Vec<usize>, Vec<usize>, Vec<usize>)> {
        let protocol: SplitProtocol = match protocol_json {
            Some(s) => serde_json::from_str(s).map_err(|e| PyValueError::new_err(e.to_string()))?,
            None => SplitProtocol::dense_random(),
        };
        let s = make_split(&self.inner, &protocol, seed).map_err(to_py)?;
        Ok((s.train, s.val, s.test))
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(num_nodes={}, num_edges={}, feature_dim={}, num_classes={})",
            self.inner.num_nodes(),
            self.inner.num_edges(),
            self.inner.feature_dim(),
            self.inner.num_classes()
        )
    }
}

#[pymodule]
fn spcnet_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_function(wrap_pyfunction!(pc_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(pc_coefficients_grad_k, m)?)?;
    m.add_function(wrap_pyfunction!(frequency_response, m)?)?;
    m.add_function(wrap_pyfunction!(stability_constant, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
