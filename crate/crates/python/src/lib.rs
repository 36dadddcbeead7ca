//! Python bindings. Embeddings cross the boundary as lists of floats; a
//! template or query is a list of channels.

use mvot_core::rng::stream_rng;
use mvot_core::security;
use mvot_core::{ChaffSource, ChannelSet, Embedding, HelperData, MvotError, PopulationSpec, ProtocolParams};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

fn to_py(e: MvotError) -> PyErr {
    match e {
        MvotError::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn channel_set(channels: Vec<Vec<f32>>) -> PyResult<ChannelSet> {
    let embs = channels
        .into_iter()
        .map(Embedding::new)
        .collect::<mvot_core::Result<Vec<_>>>()
        .map_err(to_py)?;
    ChannelSet::new(embs).map_err(to_py)
}

fn to_lists(set: &ChannelSet) -> Vec<Vec<f32>> {
    set.channels().iter().map(|c| c.as_slice().to_vec()).collect()
}

fn seed_or_random(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(rand::random)
}

#[pyclass(name = "ProtocolParams", module = "mvot", skip_from_py_object)]
#[derive(Clone)]
struct PyParams {
    inner: ProtocolParams,
}

#[pymethods]
impl PyParams {
    /// Parameters for `m` chaff per vault; `gamma` defaults to the bits
    /// the choice provides.
    #[new]
    #[pyo3(signature = (n=5, m=2000, k=5, dim=512, tr=3, gamma=None))]
    fn new(n: usize, m: usize, k: usize, dim: usize, tr: usize, gamma: Option<u32>) -> PyResult<Self> {
        let mut p = ProtocolParams::for_chaff(n, m, k, dim).map_err(to_py)?;
        if let Some(g) = gamma {
            p.gamma = g;
        }
        p = p.with_tr(tr).map_err(to_py)?;
        p.validate().map_err(to_py)?;
        Ok(Self { inner: p })
    }

    #[getter]
    fn gamma(&self) -> u32 {
        self.inner.gamma
    }
    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }
    #[getter]
    fn m(&self) -> usize {
        self.inner.m
    }
    #[getter]
    fn k(&self) -> usize {
        self.inner.k
    }
    #[getter]
    fn tr(&self) -> usize {
        self.inner.tr
    }
    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim
    }

    fn with_tr(&self, tr: usize) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.clone().with_tr(tr).map_err(to_py)?,
        })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("params serialize")
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner: ProtocolParams = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "ProtocolParams(gamma={}, n={}, m={}, k={}, tr={}, dim={})",
            p.gamma, p.n, p.m, p.k, p.tr, p.dim
        )
    }
}

#[pyfunction]
#[pyo3(signature = (gamma, n=5, k=5, dim=512, m=None))]
fn keygen(gamma: u32, n: usize, k: usize, dim: usize, m: Option<usize>) -> PyResult<PyParams> {
    Ok(PyParams {
        inner: ProtocolParams::keygen(gamma, n, k, dim, m).map_err(to_py)?,
    })
}

#[pyclass(name = "Population", module = "mvot")]
struct PyPopulation {
    inner: mvot_core::Population,
}

#[pymethods]
impl PyPopulation {
    #[new]
    #[pyo3(signature = (num_identities=100, dim=512, n_channels=5, seed=0))]
    fn new(num_identities: usize, dim: usize, n_channels: usize, seed: u64) -> PyResult<Self> {
        let spec = PopulationSpec {
            num_identities,
            dim,
            n_channels,
            rng_seed: seed,
            ..Default::default()
        };
        Ok(Self {
            inner: mvot_core::Population::sample(spec).map_err(to_py)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn ground_truth(&self, identity: usize) -> PyResult<Vec<Vec<f32>>> {
        Ok(to_lists(self.inner.ground_truth(identity).map_err(to_py)?))
    }

    fn genuine_query(&self, identity: usize, seed: u64) -> PyResult<Vec<Vec<f32>>> {
        let mut rng = stream_rng(seed, identity as u64);
        Ok(to_lists(&self.inner.genuine_query(identity, &mut rng).map_err(to_py)?))
    }

    fn unrelated(&self, seed: u64) -> PyResult<Vec<Vec<f32>>> {
        let mut rng = stream_rng(seed, u64::MAX);
        Ok(to_lists(&self.inner.unrelated_face(&mut rng).map_err(to_py)?))
    }
}

#[pyclass(name = "Helper", module = "mvot")]
struct PyHelper {
    inner: HelperData,
}

#[pymethods]
impl PyHelper {
    #[getter]
    fn params(&self) -> PyParams {
        PyParams {
            inner: self.inner.params.clone(),
        }
    }

    #[getter]
    fn num_commitments(&self) -> usize {
        self.inner.commitments.len()
    }

    /// Returns a dict with `accepted`, `subset`, `hash_count`,
    /// `best_scores` and `candidates`.
    #[pyo3(signature = (query, tr=None))]
    fn verify<'py>(&self, py: Python<'py>, query: Vec<Vec<f32>>, tr: Option<usize>) -> PyResult<Bound<'py, PyDict>> {
        let q = channel_set(query)?;
        let tr = tr.unwrap_or(self.inner.params.tr);
        let v = mvot_core::verify(&self.inner, &q, tr).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("accepted", v.accepted())?;
        match &v.decision {
            mvot_core::Decision::Accept { subset } => d.set_item("subset", subset.clone())?,
            mvot_core::Decision::Reject => d.set_item("subset", py.None())?,
        }
        d.set_item("tr", tr)?;
        d.set_item("hash_count", v.diagnostics.hash_count)?;
        d.set_item("best_scores", v.diagnostics.best_scores.clone())?;
        d.set_item("candidates", v.diagnostics.candidates.clone())?;
        Ok(d)
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &mvot_core::serialize_helper(&self.inner))
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        Ok(Self {
            inner: mvot_core::deserialize_helper(data).map_err(to_py)?,
        })
    }

    /// Brute-force search over the commitments; raises `ValueError` when
    /// the search space exceeds `budget`.
    #[pyo3(signature = (budget=security::DEFAULT_ATTACK_BUDGET, seed=0))]
    fn brute_force<'py>(&self, py: Python<'py>, budget: u64, seed: u64) -> PyResult<Bound<'py, PyDict>> {
        let mut rng = stream_rng(seed, 0);
        let r = security::brute_force_attack(&self.inner, budget, &mut rng).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("tries_to_success", r.tries_to_success)?;
        d.set_item("succeeded", r.succeeded)?;
        d.set_item("search_space", r.search_space)?;
        Ok(d)
    }
}

/// Enrolls `template` (one list of floats per channel). Chaff is synthetic
/// unless `chaff` supplies at least `n·m` vectors.
#[pyfunction]
#[pyo3(signature = (template, params, seed=None, chaff=None))]
fn enroll(
    template: Vec<Vec<f32>>,
    params: PyRef<'_, PyParams>,
    seed: Option<u64>,
    chaff: Option<Vec<Vec<f32>>>,
) -> PyResult<PyHelper> {
    let t = channel_set(template)?;
    let mut rng = stream_rng(seed_or_random(seed), 0);
    let source = match chaff {
        Some(rows) => ChaffSource::vectors(channel_set(rows)?.into_channels()),
        None => ChaffSource::synthetic(params.inner.dim, rand::Rng::random(&mut rng)),
    };
    Ok(PyHelper {
        inner: mvot_core::enroll(&t, &source, &params.inner, &mut rng).map_err(to_py)?,
    })
}

#[pyfunction]
fn cosine_similarity(a: Vec<f32>, b: Vec<f32>) -> PyResult<f64> {
    let a = Embedding::new(a).map_err(to_py)?;
    let b = Embedding::new(b).map_err(to_py)?;
    mvot_core::cosine_similarity(&a, &b).map_err(to_py)
}

/// `(paper_bits, refined_bits)`: `n·log2 m` and `log2(C(n,k)·m^k)`.
#[pyfunction]
fn work_factor(params: PyRef<'_, PyParams>) -> (f64, f64) {
    let wf = security::work_factor(&params.inner);
    (wf.paper_bits, wf.refined_bits)
}

#[pymodule]
fn mvot(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParams>()?;
    m.add_class::<PyPopulation>()?;
    m.add_class::<PyHelper>()?;
    m.add_function(wrap_pyfunction!(keygen, m)?)?;
    m.add_function(wrap_pyfunction!(enroll, m)?)?;
    m.add_function(wrap_pyfunction!(cosine_similarity, m)?)?;
    m.add_function(wrap_pyfunction!(work_factor, m)?)?;
    Ok(())
}
