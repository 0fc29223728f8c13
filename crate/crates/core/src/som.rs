//! One-dimensional self-organizing map over user feature vectors.
//!
//! The grid is a line of `N` units. Training visits the inputs in a freshly
//! shuffled order each epoch and pulls every unit toward the input, scaled by
//! the learning rate and a Gaussian of the unit's grid distance to the best
//! matching unit. Both the learning rate and the neighborhood radius decay as
//! `x0 * exp(-t / epochs)`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::UserId;

pub const SOM_FORMAT_VERSION: u32 = 1;

/// Upper bound of the rating scale; prototypes are initialized in `[0, FEATURE_MAX]`.
pub const FEATURE_MAX: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub user_id: UserId,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(user_id: UserId, values: Vec<f64>) -> Self {
        FeatureVector { user_id, values }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SomParams {
    pub n_clusters: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// `None` means `n_clusters / 2`.
    pub radius: Option<f64>,
    pub seed: u64,
}

impl Default for SomParams {
    fn default() -> Self {
        SomParams {
            n_clusters: 2,
            epochs: 50,
            learning_rate: 0.5,
            radius: None,
            seed: 0,
        }
    }
}

impl SomParams {
    pub fn effective_radius(&self) -> f64 {
        self.radius.unwrap_or(self.n_clusters as f64 / 2.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SomModel {
    pub version: u32,
    /// Always `[1, n_clusters]`.
    pub grid_shape: [usize; 2],
    pub prototypes: Vec<Vec<f64>>,
    pub params: SomParams,
}

impl SomModel {
    pub fn n_clusters(&self) -> usize {
        self.prototypes.len()
    }

    pub fn dim(&self) -> usize {
        self.prototypes.first().map_or(0, Vec::len)
    }

    /// Index of the nearest prototype; ties go to the lowest index.
    pub fn assign(&self, values: &[f64]) -> Result<usize> {
        if values.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: values.len(),
            });
        }
        Ok(best_matching_unit(&self.prototypes, values))
    }

    /// Mean Euclidean distance from each input to its best matching unit.
    pub fn quantization_error(&self, features: &[FeatureVector]) -> Result<f64> {
        if features.is_empty() {
            return Err(Error::invalid("no features"));
        }
        let mut total = 0.0;
        for f in features {
            let bmu = self.assign(&f.values)?;
            total += squared_distance(&self.prototypes[bmu], &f.values).sqrt();
        }
        Ok(total / features.len() as f64)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: SomModel =
            serde_json::from_str(text).map_err(|e| Error::Model(format!("som: {e}")))?;
        if model.version != SOM_FORMAT_VERSION {
            return Err(Error::Model(format!(
                "som: unsupported format version {}",
                model.version
            )));
        }
        let dim = model.dim();
        if model.prototypes.is_empty()
            || model.grid_shape != [1, model.prototypes.len()]
            || model.prototypes.iter().any(|p| p.len() != dim)
        {
            return Err(Error::Model("som: inconsistent grid".into()));
        }
        Ok(model)
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn best_matching_unit(prototypes: &[Vec<f64>], values: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, p) in prototypes.iter().enumerate() {
        let d = squared_distance(p, values);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

pub fn som_train(features: &[FeatureVector], params: SomParams) -> Result<SomModel> {
    let first = features
        .first()
        .ok_or_else(|| Error::invalid("empty feature list"))?;
    if params.n_clusters == 0 {
        return Err(Error::invalid("n_clusters must be at least 1"));
    }
    if params.epochs == 0 {
        return Err(Error::invalid("epochs must be at least 1"));
    }
    let dim = first.values.len();
    if let Some(f) = features.iter().find(|f| f.values.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: f.values.len(),
        });
    }
    if params.n_clusters > features.len() {
        log::warn!(
            "som: {} clusters for {} inputs; some units will stay empty",
            params.n_clusters,
            features.len()
        );
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut prototypes: Vec<Vec<f64>> = (0..params.n_clusters)
        .map(|_| (0..dim).map(|_| rng.gen_range(0.0..=FEATURE_MAX)).collect())
        .collect();

    let radius0 = params.effective_radius();
    let epochs = params.epochs as f64;
    let mut order: Vec<usize> = (0..features.len()).collect();
    for epoch in 0..params.epochs {
        let decay = (-(epoch as f64) / epochs).exp();
        let lr = params.learning_rate * decay;
        let sigma = radius0 * decay;
        order.shuffle(&mut rng);
        for &i in &order {
            let x = &features[i].values;
            let bmu = best_matching_unit(&prototypes, x);
            for (unit, w) in prototypes.iter_mut().enumerate() {
                let h = neighborhood(unit, bmu, sigma);
                if h == 0.0 {
                    continue;
                }
                for (wk, xk) in w.iter_mut().zip(x) {
                    *wk += lr * h * (xk - *wk);
                }
            }
        }
    }

    Ok(SomModel {
        version: SOM_FORMAT_VERSION,
        grid_shape: [1, params.n_clusters],
        prototypes,
        params,
    })
}

/// Gaussian neighborhood on the 1-D grid. A non-positive radius updates the
/// best matching unit only.
fn neighborhood(unit: usize, bmu: usize, sigma: f64) -> f64 {
    if unit == bmu {
        return 1.0;
    }
    if sigma <= 0.0 {
        return 0.0;
    }
    let d = unit.abs_diff(bmu) as f64;
    (-(d * d) / (2.0 * sigma * sigma)).exp()
}
