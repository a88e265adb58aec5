//! Binary logistic regression fitted by full-batch gradient descent on the
//! mean log-loss. Inputs are standardized with the training mean and
//! standard deviation, which are stored alongside the weights.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Logits are clamped to this magnitude so probabilities stay strictly
/// inside (0, 1) in f64.
const MAX_LOGIT: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.5,
            iterations: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub iterations: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub final_loss: f64,
    pub training_accuracy: f64,
    pub examples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub feature_means: Vec<f64>,
    pub feature_scales: Vec<f64>,
}

pub fn sigmoid(z: f64) -> f64 {
    let z = z.clamp(-MAX_LOGIT, MAX_LOGIT);
    1.0 / (1.0 + (-z).exp())
}

impl LogisticModel {
    /// A model with the given raw weights and no standardization.
    pub fn from_weights(weights: Vec<f64>, bias: f64) -> Self {
        let dim = weights.len();
        LogisticModel {
            weights,
            bias,
            feature_means: vec![0.0; dim],
            feature_scales: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn logit(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.weights.len());
        let mut z = self.bias;
        for (i, &v) in x.iter().enumerate() {
            z += self.weights[i] * (v - self.feature_means[i]) / self.feature_scales[i];
        }
        z
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }
}

/// Fits a model. Both classes must be present.
pub fn fit(
    inputs: &[Vec<f64>],
    targets: &[bool],
    config: &TrainConfig,
) -> Result<(LogisticModel, TrainingMeta)> {
    if inputs.len() != targets.len() {
        return Err(Error::InvalidInput(format!(
            "{} inputs but {} targets",
            inputs.len(),
            targets.len()
        )));
    }
    let positives = targets.iter().filter(|&&t| t).count();
    if positives == 0 || positives == targets.len() {
        return Err(Error::DegenerateTraining(format!(
            "need at least one example of each class, got {positives} positive and {} negative",
            targets.len() - positives
        )));
    }
    if !(config.learning_rate.is_finite() && config.learning_rate > 0.0) {
        return Err(Error::InvalidInput("learning rate must be positive".into()));
    }
    let dim = inputs[0].len();
    if inputs.iter().any(|x| x.len() != dim || x.iter().any(|v| !v.is_finite())) {
        return Err(Error::InvalidInput(
            "feature vectors must be finite and of equal length".into(),
        ));
    }

    let n = inputs.len() as f64;
    let mut means = vec![0.0; dim];
    for x in inputs {
        for (m, v) in means.iter_mut().zip(x) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut scales = vec![0.0; dim];
    for x in inputs {
        for ((s, v), m) in scales.iter_mut().zip(x).zip(&means) {
            *s += (v - m) * (v - m);
        }
    }
    for s in scales.iter_mut() {
        let sd = (*s / n).sqrt();
        *s = if sd > 1e-12 { sd } else { 1.0 };
    }
    let standardized: Vec<Vec<f64>> = inputs
        .iter()
        .map(|x| {
            x.iter()
                .zip(&means)
                .zip(&scales)
                .map(|((v, m), s)| (v - m) / s)
                .collect()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut weights: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.01..0.01)).collect();
    let mut bias = 0.0;
    let mut grad = vec![0.0; dim];

    for _ in 0..config.iterations {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_bias = 0.0;
        for (x, &t) in standardized.iter().zip(targets) {
            let z = bias + dot(&weights, x);
            let err = sigmoid(z) - if t { 1.0 } else { 0.0 };
            for (g, v) in grad.iter_mut().zip(x) {
                *g += err * v;
            }
            grad_bias += err;
        }
        for (w, g) in weights.iter_mut().zip(&grad) {
            *w -= config.learning_rate * g / n;
        }
        bias -= config.learning_rate * grad_bias / n;
    }

    let model = LogisticModel {
        weights,
        bias,
        feature_means: means,
        feature_scales: scales,
    };
    let mut loss = 0.0;
    let mut correct = 0usize;
    for (x, &t) in inputs.iter().zip(targets) {
        let p = model.predict(x);
        loss -= if t { p.ln() } else { (1.0 - p).ln() };
        if (p > 0.5) == t {
            correct += 1;
        }
    }
    let meta = TrainingMeta {
        iterations: config.iterations,
        learning_rate: config.learning_rate,
        seed: config.seed,
        final_loss: loss / n,
        training_accuracy: correct as f64 / n,
        examples: inputs.len(),
    };
    Ok((model, meta))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
