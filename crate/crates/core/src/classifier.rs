//! Three-layer feed-forward classifier (input, logistic hidden layer, softmax
//! output) that maps a user's feature vector to a cluster id.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MLP_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden: 10,
            epochs: 200,
            learning_rate: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub version: u32,
    /// `hidden` rows of `input_dim` weights.
    pub w_hidden: Vec<Vec<f64>>,
    pub b_hidden: Vec<f64>,
    /// `n_classes` rows of `hidden` weights.
    pub w_out: Vec<Vec<f64>>,
    pub b_out: Vec<f64>,
    pub params: MlpParams,
}

/// Gradient of the mean cross-entropy, laid out like the model weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradients {
    pub w_hidden: Vec<Vec<f64>>,
    pub b_hidden: Vec<f64>,
    pub w_out: Vec<Vec<f64>>,
    pub b_out: Vec<f64>,
}

impl MlpGradients {
    fn zeros_like(model: &MlpModel) -> Self {
        MlpGradients {
            w_hidden: model.w_hidden.iter().map(|r| vec![0.0; r.len()]).collect(),
            b_hidden: vec![0.0; model.b_hidden.len()],
            w_out: model.w_out.iter().map(|r| vec![0.0; r.len()]).collect(),
            b_out: vec![0.0; model.b_out.len()],
        }
    }

    fn clear(&mut self) {
        self.w_hidden.iter_mut().flatten().for_each(|v| *v = 0.0);
        self.b_hidden.iter_mut().for_each(|v| *v = 0.0);
        self.w_out.iter_mut().flatten().for_each(|v| *v = 0.0);
        self.b_out.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Same order as [`MlpModel::flat_params`].
    pub fn flatten(&self) -> Vec<f64> {
        flatten(&self.w_hidden, &self.b_hidden, &self.w_out, &self.b_out)
    }
}

fn flatten(wh: &[Vec<f64>], bh: &[f64], wo: &[Vec<f64>], bo: &[f64]) -> Vec<f64> {
    wh.iter()
        .flatten()
        .chain(bh)
        .chain(wo.iter().flatten())
        .chain(bo)
        .copied()
        .collect()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

impl MlpModel {
    /// All weights and biases zero: every input gets uniform probabilities.
    pub fn zeros(input_dim: usize, hidden: usize, n_classes: usize) -> Self {
        MlpModel {
            version: MLP_FORMAT_VERSION,
            w_hidden: vec![vec![0.0; input_dim]; hidden],
            b_hidden: vec![0.0; hidden],
            w_out: vec![vec![0.0; hidden]; n_classes],
            b_out: vec![0.0; n_classes],
            params: MlpParams {
                hidden,
                ..MlpParams::default()
            },
        }
    }

    fn random(input_dim: usize, n_classes: usize, params: MlpParams, rng: &mut ChaCha8Rng) -> Self {
        let mut uniform =
            |n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-0.5..=0.5)).collect() };
        let w_hidden = (0..params.hidden).map(|_| uniform(input_dim)).collect();
        let b_hidden = uniform(params.hidden);
        let w_out = (0..n_classes).map(|_| uniform(params.hidden)).collect();
        let b_out = uniform(n_classes);
        MlpModel {
            version: MLP_FORMAT_VERSION,
            w_hidden,
            b_hidden,
            w_out,
            b_out,
            params,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_hidden.first().map_or(0, Vec::len)
    }

    pub fn n_classes(&self) -> usize {
        self.b_out.len()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    fn forward(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let hidden: Vec<f64> = self
            .w_hidden
            .iter()
            .zip(&self.b_hidden)
            .map(|(w, b)| sigmoid(w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>() + b))
            .collect();
        let logits: Vec<f64> = self
            .w_out
            .iter()
            .zip(&self.b_out)
            .map(|(w, b)| w.iter().zip(&hidden).map(|(wi, hi)| wi * hi).sum::<f64>() + b)
            .collect();
        (hidden, softmax(&logits))
    }

    /// Class probabilities for `x`.
    pub fn probabilities(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(self.forward(x).1)
    }

    /// Most probable cluster (lowest index on ties) and the probabilities.
    pub fn classify(&self, x: &[f64]) -> Result<(usize, Vec<f64>)> {
        let probs = self.probabilities(x)?;
        Ok((argmax(&probs), probs))
    }

    /// Mean cross-entropy over a batch.
    pub fn loss(&self, xs: &[Vec<f64>], labels: &[usize]) -> f64 {
        let total: f64 = xs
            .iter()
            .zip(labels)
            .map(|(x, &y)| -self.forward(x).1[y].max(f64::MIN_POSITIVE).ln())
            .sum();
        total / xs.len() as f64
    }

    /// Analytic gradient of [`MlpModel::loss`] by backpropagation.
    pub fn gradients(&self, xs: &[Vec<f64>], labels: &[usize]) -> MlpGradients {
        let mut g = MlpGradients::zeros_like(self);
        let scale = 1.0 / xs.len() as f64;
        for (x, &y) in xs.iter().zip(labels) {
            self.accumulate(x, y, scale, &mut g);
        }
        g
    }

    fn accumulate(&self, x: &[f64], label: usize, scale: f64, g: &mut MlpGradients) {
        let (hidden, probs) = self.forward(x);
        // dL/dlogit = p - onehot
        let delta_out: Vec<f64> = probs
            .iter()
            .enumerate()
            .map(|(c, &p)| (p - f64::from(u8::from(c == label))) * scale)
            .collect();
        for (c, d) in delta_out.iter().enumerate() {
            for (h, hv) in hidden.iter().enumerate() {
                g.w_out[c][h] += d * hv;
            }
            g.b_out[c] += d;
        }
        for (h, hv) in hidden.iter().enumerate() {
            let back: f64 = delta_out
                .iter()
                .zip(&self.w_out)
                .map(|(d, w)| d * w[h])
                .sum();
            let delta = back * hv * (1.0 - hv);
            for (i, xi) in x.iter().enumerate() {
                g.w_hidden[h][i] += delta * xi;
            }
            g.b_hidden[h] += delta;
        }
    }

    fn step(&mut self, g: &MlpGradients, lr: f64) {
        for (w, gw) in self.w_hidden.iter_mut().zip(&g.w_hidden) {
            for (a, b) in w.iter_mut().zip(gw) {
                *a -= lr * b;
            }
        }
        for (a, b) in self.b_hidden.iter_mut().zip(&g.b_hidden) {
            *a -= lr * b;
        }
        for (w, gw) in self.w_out.iter_mut().zip(&g.w_out) {
            for (a, b) in w.iter_mut().zip(gw) {
                *a -= lr * b;
            }
        }
        for (a, b) in self.b_out.iter_mut().zip(&g.b_out) {
            *a -= lr * b;
        }
    }

    /// Hidden weights, hidden biases, output weights, output biases; row-major.
    pub fn flat_params(&self) -> Vec<f64> {
        flatten(&self.w_hidden, &self.b_hidden, &self.w_out, &self.b_out)
    }

    /// Copy of the model with parameters replaced from a [`MlpModel::flat_params`] vector.
    pub fn with_flat_params(&self, flat: &[f64]) -> Result<Self> {
        let mut model = self.clone();
        let slots = model
            .w_hidden
            .iter_mut()
            .flatten()
            .chain(model.b_hidden.iter_mut())
            .chain(model.w_out.iter_mut().flatten())
            .chain(model.b_out.iter_mut());
        let mut n = 0;
        for (slot, &v) in slots.zip(flat) {
            *slot = v;
            n += 1;
        }
        if n != flat.len() || n != self.flat_params().len() {
            return Err(Error::DimensionMismatch {
                expected: self.flat_params().len(),
                actual: flat.len(),
            });
        }
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: MlpModel =
            serde_json::from_str(text).map_err(|e| Error::Model(format!("mlp: {e}")))?;
        if model.version != MLP_FORMAT_VERSION {
            return Err(Error::Model(format!(
                "mlp: unsupported format version {}",
                model.version
            )));
        }
        let dim = model.input_dim();
        let hidden = model.b_hidden.len();
        if hidden == 0
            || model.n_classes() == 0
            || model.w_hidden.len() != hidden
            || model.w_hidden.iter().any(|r| r.len() != dim)
            || model.w_out.len() != model.n_classes()
            || model.w_out.iter().any(|r| r.len() != hidden)
        {
            return Err(Error::Model("mlp: inconsistent layer shapes".into()));
        }
        Ok(model)
    }
}

/// Trains by per-sample SGD on cross-entropy, reshuffling every epoch.
pub fn mlp_train(
    features: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    params: MlpParams,
) -> Result<MlpModel> {
    if features.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    if features.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} features but {} labels",
            features.len(),
            labels.len()
        )));
    }
    if params.hidden == 0 || n_classes == 0 {
        return Err(Error::invalid(
            "hidden units and classes must be at least 1",
        ));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(Error::invalid(format!(
            "label {bad} out of range for {n_classes} classes"
        )));
    }
    let dim = features[0].len();
    if let Some(f) = features.iter().find(|f| f.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: f.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut model = MlpModel::random(dim, n_classes, params, &mut rng);
    let mut grad = MlpGradients::zeros_like(&model);
    let mut order: Vec<usize> = (0..features.len()).collect();
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            grad.clear();
            model.accumulate(&features[i], labels[i], 1.0, &mut grad);
            model.step(&grad, params.learning_rate);
        }
    }
    Ok(model)
}
