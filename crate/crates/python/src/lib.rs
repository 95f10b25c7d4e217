//! Python bindings: configuration, datasets, the full pipeline and each phase.

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use reann_core::dataset::{self as ds, SchemaId, SplitSpec};
use reann_core::discretizer::{DiscretizedNetwork, DiscretizedSnapshot};
use reann_core::network::{NetworkSnapshot, NetworkWeights};
use reann_core::pipeline::{self, Extracted};
use reann_core::rules::{self, RuleSetDocument, RuleVocabulary};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn schema(name: &str) -> PyResult<SchemaId> {
    name.parse().map_err(err)
}

/// Run configuration with the defaults of one dataset.
#[pyclass(name = "RunConfig", from_py_object)]
#[derive(Clone)]
struct PyRunConfig {
    inner: pipeline::RunConfig,
}

#[pymethods]
impl PyRunConfig {
    #[new]
    #[pyo3(signature = (dataset, data_path=None, seeds=None))]
    fn new(dataset: &str, data_path: Option<PathBuf>, seeds: Option<Vec<u64>>) -> PyResult<Self> {
        let mut inner = pipeline::RunConfig::for_dataset(schema(dataset)?);
        inner.data_path = data_path;
        if let Some(s) = seeds {
            inner.seeds = s;
        }
        Ok(PyRunConfig { inner })
    }

    /// Parses TOML over the dataset defaults.
    #[staticmethod]
    #[pyo3(signature = (text, dataset=None))]
    fn from_toml(text: &str, dataset: Option<&str>) -> PyResult<Self> {
        let id = dataset.map(schema).transpose()?;
        let inner = pipeline::RunConfig::from_toml(text, id).map_err(err)?;
        Ok(PyRunConfig { inner })
    }

    fn to_toml(&self) -> PyResult<String> {
        self.inner.to_toml().map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner).map_err(err)
    }

    #[getter]
    fn dataset(&self) -> &'static str {
        self.inner.dataset.as_str()
    }

    #[getter]
    fn seeds(&self) -> Vec<u64> {
        self.inner.seeds.clone()
    }

    #[setter]
    fn set_seeds(&mut self, seeds: Vec<u64>) {
        self.inner.seeds = seeds;
    }

    #[getter]
    fn data_path(&self) -> PathBuf {
        self.inner.data_path()
    }

    #[setter]
    fn set_data_path(&mut self, path: PathBuf) {
        self.inner.data_path = Some(path);
    }

    #[setter]
    fn set_out(&mut self, path: Option<PathBuf>) {
        self.inner.out = path;
    }

    fn __repr__(&self) -> String {
        format!("RunConfig(dataset={:?}, seeds={:?})", self.dataset(), self.inner.seeds)
    }
}

/// A loaded dataset with normalized features.
#[pyclass(name = "Dataset", from_py_object)]
#[derive(Clone)]
struct PyDataset {
    inner: ds::Dataset,
}

#[pymethods]
impl PyDataset {
    #[staticmethod]
    fn load(path: PathBuf, dataset: &str) -> PyResult<Self> {
        let inner = ds::load_uci(path, schema(dataset)?).map_err(err)?;
        Ok(PyDataset { inner })
    }

    /// Leading `train_count` patterns and the rest.
    fn split(&self, train_count: usize) -> PyResult<(PyDataset, PyDataset)> {
        let (a, b) = ds::split(&self.inner, SplitSpec { train_count }).map_err(err)?;
        Ok((PyDataset { inner: a }, PyDataset { inner: b }))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn class_names(&self) -> Vec<String> {
        self.inner.class_names.clone()
    }

    #[getter]
    fn attribute_names(&self) -> Vec<String> {
        self.inner.schema.iter().map(|a| a.name.clone()).collect()
    }

    #[getter]
    fn features(&self) -> Vec<Vec<f64>> {
        self.inner.patterns.iter().map(|p| p.features.clone()).collect()
    }

    #[getter]
    fn targets(&self) -> Vec<usize> {
        self.inner.targets()
    }
}

/// Training and test splits of a configuration.
#[pyfunction]
fn load_splits(config: &PyRunConfig) -> PyResult<(PyDataset, PyDataset)> {
    let (a, b) = pipeline::load_splits(&config.inner).map_err(err)?;
    Ok((PyDataset { inner: a }, PyDataset { inner: b }))
}

/// A feed-forward network with its connection mask.
#[pyclass(name = "Network", from_py_object)]
#[derive(Clone)]
struct PyNetwork {
    inner: NetworkWeights,
}

#[pymethods]
impl PyNetwork {
    #[getter]
    fn n_hidden(&self) -> usize {
        self.inner.n_hidden
    }

    #[getter]
    fn connections(&self) -> usize {
        self.inner.live_connections()
    }

    fn to_json(&self, config: &PyRunConfig) -> PyResult<String> {
        NetworkSnapshot::new(self.inner.clone(), config.inner.growth.train)
            .to_json()
            .map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let snap = NetworkSnapshot::from_json(text).map_err(err)?;
        Ok(PyNetwork { inner: snap.network })
    }
}

/// A network whose hidden activations are replaced by cluster centres.
#[pyclass(name = "DiscretizedNetwork", from_py_object)]
#[derive(Clone)]
struct PyDiscretized {
    inner: DiscretizedNetwork,
}

#[pymethods]
impl PyDiscretized {
    #[getter]
    fn epsilons(&self) -> Vec<f64> {
        self.inner.models.iter().map(|m| m.model.epsilon).collect()
    }

    #[getter]
    fn cluster_counts(&self) -> Vec<usize> {
        self.inner.models.iter().map(|m| m.model.len()).collect()
    }

    #[getter]
    fn continuous_accuracy(&self) -> f64 {
        self.inner.continuous_accuracy
    }

    #[getter]
    fn discrete_accuracy(&self) -> f64 {
        self.inner.discrete_accuracy
    }

    fn to_json(&self) -> PyResult<String> {
        DiscretizedSnapshot::new(self.inner.clone()).to_json().map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let snap = DiscretizedSnapshot::from_json(text).map_err(err)?;
        Ok(PyDiscretized { inner: snap.discretized })
    }
}

/// An ordered rule list with a default class.
#[pyclass(name = "RuleSet", from_py_object)]
#[derive(Clone)]
struct PyRuleSet {
    inner: RuleSetDocument,
}

#[pymethods]
impl PyRuleSet {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyRuleSet {
            inner: RuleSetDocument::from_json(text).map_err(err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.rule_set().size()
    }

    fn text(&self) -> String {
        rules::render_text(&self.inner.rule_set(), &self.inner.vocabulary)
    }

    fn predict(&self, features: Vec<f64>) -> usize {
        self.inner.rule_set().predict(&features)
    }

    /// Fraction of `data` classified correctly.
    fn accuracy(&self, data: &PyDataset) -> f64 {
        rules::evaluate(&self.inner.rule_set(), &data.inner).accuracy
    }
}

#[pyfunction]
fn grow(py: Python<'_>, config: &PyRunConfig, train: &PyDataset, seed: u64) -> PyResult<PyNetwork> {
    let cfg = config.inner.seeded(seed);
    let out = py
        .detach(|| pipeline::phase_grow(&cfg, &train.inner))
        .map_err(err)?;
    Ok(PyNetwork { inner: out.network })
}

/// Pruned network and whether the pass was rolled back.
#[pyfunction]
fn prune(
    py: Python<'_>,
    config: &PyRunConfig,
    network: &PyNetwork,
    train: &PyDataset,
    seed: u64,
) -> PyResult<(PyNetwork, bool)> {
    let cfg = config.inner.seeded(seed);
    let (net, trace) = py
        .detach(|| pipeline::phase_prune(&cfg, &network.inner, &train.inner))
        .map_err(err)?;
    Ok((PyNetwork { inner: net }, trace.rolled_back))
}

#[pyfunction]
fn discretize(config: &PyRunConfig, network: &PyNetwork, train: &PyDataset) -> PyResult<PyDiscretized> {
    let d = pipeline::phase_discretize(&config.inner, &network.inner, &train.inner).map_err(err)?;
    Ok(PyDiscretized { inner: d })
}

#[pyfunction]
fn extract(config: &PyRunConfig, network: &PyDiscretized, train: &PyDataset) -> PyResult<PyRuleSet> {
    let e: Extracted = pipeline::phase_extract(&config.inner, &network.inner, &train.inner).map_err(err)?;
    Ok(PyRuleSet {
        inner: RuleSetDocument::new(&e.rules, RuleVocabulary::from_dataset(&train.inner)),
    })
}

/// Runs one seed end to end and returns its record as JSON.
#[pyfunction]
fn run_seed(py: Python<'_>, config: &PyRunConfig, seed: u64) -> PyResult<String> {
    let cfg = config.inner.clone();
    let a = py
        .detach(|| {
            let (train, test) = pipeline::load_splits(&cfg)?;
            pipeline::run_seed(&cfg, seed, &train, &test)
        })
        .map_err(err)?;
    serde_json::to_string_pretty(&a.record).map_err(err)
}

/// Runs every configured seed and returns the report as JSON.
#[pyfunction]
fn run(py: Python<'_>, config: &PyRunConfig) -> PyResult<String> {
    let cfg = config.inner.clone();
    let report = py.detach(|| pipeline::run(&cfg)).map_err(err)?;
    report.to_json().map_err(err)
}

#[pymodule]
fn reann(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRunConfig>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyDiscretized>()?;
    m.add_class::<PyRuleSet>()?;
    m.add_function(wrap_pyfunction!(load_splits, m)?)?;
    m.add_function(wrap_pyfunction!(grow, m)?)?;
    m.add_function(wrap_pyfunction!(prune, m)?)?;
    m.add_function(wrap_pyfunction!(discretize, m)?)?;
    m.add_function(wrap_pyfunction!(extract, m)?)?;
    m.add_function(wrap_pyfunction!(run_seed, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
