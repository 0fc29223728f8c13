//! Python bindings: configuration, dataset loading, training, prediction and
//! the evaluation protocol.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;

use hmrs_core::cf::{self, SimilarityKernel};
use hmrs_core::ingest::{segment_users, RatingMatrix};
use hmrs_core::som::{som_train, FeatureVector, SomParams};
use hmrs_core::{eval, synthetic, Error, Provenance, Segment};
use pyo3::exceptions::{PyIOError, PyKeyError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Io { .. }
        | Error::Malformed { .. }
        | Error::RatingOutOfRange { .. }
        | Error::DanglingUser { .. }
        | Error::DanglingMovie { .. } => PyIOError::new_err(err.to_string()),
        Error::UnknownUser(_) | Error::UnknownMovie(_) => PyKeyError::new_err(err.to_string()),
        Error::Leakage(_) | Error::Model(_) => PyRuntimeError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

fn provenance_name(p: Provenance) -> &'static str {
    match p {
        Provenance::Collaborative => "collaborative",
        Provenance::ColdStartGenre => "cold_start_genre",
        Provenance::FallbackUserMean => "fallback_user_mean",
    }
}

/// Run configuration addressed by dotted keys such as `"som.clusters"`.
#[pyclass(name = "Config", from_py_object)]
#[derive(Clone, Default)]
struct PyConfig {
    inner: hmrs_core::Config,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (overrides=None))]
    fn new(
        overrides: Option<std::collections::HashMap<String, Bound<'_, PyAny>>>,
    ) -> PyResult<Self> {
        let mut config = Self::default();
        for (key, value) in overrides.unwrap_or_default() {
            let text = if let Ok(b) = value.extract::<bool>() {
                b.to_string()
            } else {
                value.str()?.to_string()
            };
            config.set(&key, &text)?;
        }
        Ok(config)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        hmrs_core::Config::from_json(text)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    fn set(&mut self, key: &str, value: &str) -> PyResult<()> {
        self.inner.set(key, value).map_err(to_py)
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(to_py)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn __repr__(&self) -> String {
        format!("Config({})", self.inner.to_json().replace('\n', ""))
    }
}

/// Ratings, users and movie catalog.
#[pyclass(name = "Dataset", frozen)]
struct PyDataset {
    inner: hmrs_core::Dataset,
}

#[pymethods]
impl PyDataset {
    /// Loads `u.data`, `u.user` and `u.item` from a directory.
    #[staticmethod]
    fn load_dir(dir: PathBuf) -> PyResult<Self> {
        hmrs_core::load_dir(dir)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    fn load(ratings: PathBuf, users: PathBuf, movies: PathBuf) -> PyResult<Self> {
        hmrs_core::load_dataset(ratings, users, movies)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    /// Random population with genre tastes, for experiments without data files.
    #[staticmethod]
    #[pyo3(signature = (n_users=200, n_movies=120, ratings_per_user=30, seed=0))]
    fn synthetic(n_users: u32, n_movies: u32, ratings_per_user: usize, seed: u64) -> Self {
        Self {
            inner: synthetic::dataset(n_users, n_movies, ratings_per_user, seed),
        }
    }

    /// Writes the dataset in the MovieLens file layout.
    fn write(&self, dir: PathBuf) -> PyResult<()> {
        std::fs::create_dir_all(&dir).map_err(|e| PyIOError::new_err(e.to_string()))?;
        synthetic::write_files(&self.inner, &dir).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    #[getter]
    fn n_users(&self) -> usize {
        self.inner.stats.users
    }

    #[getter]
    fn n_movies(&self) -> usize {
        self.inner.stats.movies
    }

    #[getter]
    fn n_ratings(&self) -> usize {
        self.inner.stats.ratings
    }

    /// `(user, movie, rating)` triples in user, movie order.
    fn ratings(&self) -> Vec<(u32, u32, f64)> {
        self.inner.ratings.iter().collect()
    }

    #[pyo3(signature = (segment, config=None))]
    fn segment_users(&self, segment: &str, config: Option<&PyConfig>) -> PyResult<Vec<u32>> {
        let segment: Segment = segment.parse().map_err(to_py)?;
        let banding = config.map_or(hmrs_core::Config::default().age_banding, |c| {
            c.inner.age_banding
        });
        Ok(segment_users(&self.inner.users, segment, banding)
            .into_iter()
            .collect())
    }

    fn __repr__(&self) -> String {
        format!("Dataset({})", self.inner.stats)
    }
}

/// Trained model for one population.
#[pyclass(name = "Recommender", frozen)]
struct PyRecommender {
    inner: hmrs_core::Recommender,
}

#[pymethods]
impl PyRecommender {
    /// Trains on the users of `segment` (or every user when `None`).
    #[staticmethod]
    #[pyo3(signature = (dataset, config=None, segment=None))]
    fn train(
        dataset: &PyDataset,
        config: Option<&PyConfig>,
        segment: Option<&str>,
    ) -> PyResult<Self> {
        let config = config.map(|c| c.inner.clone()).unwrap_or_default();
        config.validate().map_err(to_py)?;
        let data = &dataset.inner;
        let (users, component): (BTreeSet<u32>, String) = match segment {
            Some(name) => {
                let segment: Segment = name.parse().map_err(to_py)?;
                (
                    segment_users(&data.users, segment, config.age_banding),
                    segment.name().to_string(),
                )
            }
            None => (
                data.ratings.users().iter().copied().collect(),
                "all".to_string(),
            ),
        };
        hmrs_core::Recommender::train(
            &data.ratings,
            &users,
            Arc::new(data.movies.clone()),
            config.engine_params(&component),
        )
        .map(|inner| Self { inner })
        .map_err(to_py)
    }

    #[getter]
    fn cluster_sizes(&self) -> Vec<usize> {
        self.inner.cluster_sizes()
    }

    fn cluster_of(&self, user: u32) -> PyResult<usize> {
        Ok(self.inner.session(user).map_err(to_py)?.cluster())
    }

    /// `(neighbor, similarity, weight)` for the user's neighborhood.
    fn neighbors(&self, user: u32) -> PyResult<Vec<(u32, f64, f64)>> {
        let session = self.inner.session(user).map_err(to_py)?;
        Ok(session
            .neighbors()
            .neighbors
            .iter()
            .map(|n| (n.user, n.sim, n.weight))
            .collect())
    }

    /// Predicted rating and its provenance.
    fn predict(&self, user: u32, movie: u32) -> PyResult<(f64, &'static str)> {
        let p = self
            .inner
            .session(user)
            .map_err(to_py)?
            .predict(movie)
            .map_err(to_py)?;
        Ok((p.value, provenance_name(p.provenance)))
    }

    /// Top `k` unrated movies as `(movie, predicted, provenance)`.
    #[pyo3(signature = (user, k=10, ratings=None))]
    fn recommend(
        &self,
        user: u32,
        k: usize,
        ratings: Option<Vec<(u32, f64)>>,
    ) -> PyResult<Vec<(u32, f64, &'static str)>> {
        let session = match ratings {
            Some(r) => self.inner.session_with_ratings(user, &r),
            None => self.inner.session(user),
        }
        .map_err(to_py)?;
        Ok(session
            .recommend(k)
            .map_err(to_py)?
            .into_iter()
            .map(|p| (p.movie, p.value, provenance_name(p.provenance)))
            .collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Recommender({}, clusters={:?})",
            self.inner.params().variant,
            self.inner.cluster_sizes()
        )
    }
}

fn matrix(triples: Vec<(u32, u32, u8)>) -> PyResult<RatingMatrix> {
    RatingMatrix::from_triples(triples).map_err(to_py)
}

/// Pearson similarity of two users over `(user, movie, rating)` triples.
#[pyfunction]
fn pearson(triples: Vec<(u32, u32, u8)>, u: u32, v: u32) -> PyResult<f64> {
    cf::pearson_sim(&matrix(triples)?, u, v).map_err(to_py)
}

#[pyfunction]
fn cosine(triples: Vec<(u32, u32, u8)>, u: u32, v: u32) -> PyResult<f64> {
    cf::similarity(&matrix(triples)?, u, v, SimilarityKernel::Cosine)
        .map(|s| s.sim)
        .map_err(to_py)
}

/// Resource-allocation weight: the sum of `1 / raters` over shared movies.
#[pyfunction]
fn ra_weight(triples: Vec<(u32, u32, u8)>, u: u32, v: u32) -> PyResult<f64> {
    cf::ra_weight(&matrix(triples)?, u, v).map_err(to_py)
}

#[pyfunction]
fn mae(predicted: Vec<f64>, actual: Vec<f64>) -> PyResult<f64> {
    eval::mae(&predicted, &actual).map_err(to_py)
}

/// Trains a one-row SOM and returns its prototypes.
#[pyfunction]
#[pyo3(signature = (points, n_clusters=2, epochs=50, learning_rate=0.5, seed=0))]
fn train_som(
    points: Vec<Vec<f64>>,
    n_clusters: usize,
    epochs: usize,
    learning_rate: f64,
    seed: u64,
) -> PyResult<Vec<Vec<f64>>> {
    let features: Vec<FeatureVector> = points
        .into_iter()
        .enumerate()
        .map(|(i, p)| FeatureVector::new(i as u32, p))
        .collect();
    let params = SomParams {
        n_clusters,
        epochs,
        learning_rate,
        seed,
        ..SomParams::default()
    };
    som_train(&features, params)
        .map(|m| m.prototypes)
        .map_err(to_py)
}

/// Full cross-validated evaluation; returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (dataset, config=None))]
fn run_experiment(
    py: Python<'_>,
    dataset: &PyDataset,
    config: Option<&PyConfig>,
) -> PyResult<String> {
    let config = config.map(|c| c.inner.clone()).unwrap_or_default();
    let data = &dataset.inner;
    py.detach(|| hmrs_core::run_experiment(data, &config))
        .map(|r| r.to_json())
        .map_err(to_py)
}

#[pymodule]
pub fn hmrs(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyRecommender>()?;
    m.add_function(wrap_pyfunction!(pearson, m)?)?;
    m.add_function(wrap_pyfunction!(cosine, m)?)?;
    m.add_function(wrap_pyfunction!(ra_weight, m)?)?;
    m.add_function(wrap_pyfunction!(mae, m)?)?;
    m.add_function(wrap_pyfunction!(train_som, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
