//! Logistic regression over binary feature vectors, the black box being
//! explained.
//!
//! Every call to [`LogisticModel::predict_proba`] bumps an atomic counter so
//! the harness can verify how many model evaluations each explainer spends.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::features::BitVector;

/// Predictions are clamped to `[PROB_FLOOR, 1 - PROB_FLOOR]` so they stay
/// strictly inside (0, 1) even when the logit saturates `f64`.
pub const PROB_FLOOR: f64 = 1e-15;

/// Decision threshold; exactly 0.5 counts as positive.
pub const THRESHOLD: f64 = 0.5;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[derive(Debug)]
pub struct LogisticModel {
    weights: Vec<f64>,
    bias: f64,
    evals: AtomicU64,
}

impl Clone for LogisticModel {
    fn clone(&self) -> Self {
        Self {
            weights: self.weights.clone(),
            bias: self.bias,
            evals: AtomicU64::new(self.eval_count()),
        }
    }
}

impl PartialEq for LogisticModel {
    fn eq(&self, other: &Self) -> bool {
        self.weights == other.weights && self.bias == other.bias
    }
}

impl LogisticModel {
    pub fn new(weights: Vec<f64>, bias: f64) -> Result<Self> {
        if weights.iter().chain([&bias]).any(|v| !v.is_finite()) {
            return Err(Error::Argument("model parameters must be finite".into()));
        }
        Ok(Self {
            weights,
            bias,
            evals: AtomicU64::new(0),
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn n_features(&self) -> usize {
        self.weights.len()
    }

    /// `w·x + b`. Does not count as an evaluation.
    pub fn logit(&self, x: &BitVector) -> Result<f64> {
        self.check_len(x)?;
        Ok(logit(&self.weights, self.bias, x))
    }

    /// Positive-class probability `σ(w·x + b)`.
    pub fn predict_proba(&self, x: &BitVector) -> Result<f64> {
        let z = self.logit(x)?;
        self.evals.fetch_add(1, Ordering::Relaxed);
        Ok(sigmoid(z).clamp(PROB_FLOOR, 1.0 - PROB_FLOOR))
    }

    pub fn predict(&self, x: &BitVector) -> Result<u8> {
        Ok(u8::from(self.predict_proba(x)? >= THRESHOLD))
    }

    /// Fraction of `xs` whose thresholded prediction equals the label.
    pub fn accuracy(&self, xs: &[BitVector], ys: &[u8]) -> Result<f64> {
        if xs.is_empty() {
            return Err(Error::Argument("accuracy needs at least one instance".into()));
        }
        check_labels(xs, ys)?;
        let mut correct = 0usize;
        for (x, &y) in xs.iter().zip(ys) {
            if self.predict(x)? == y {
                correct += 1;
            }
        }
        Ok(correct as f64 / xs.len() as f64)
    }

    /// Number of `predict_proba` calls so far.
    pub fn eval_count(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }

    fn check_len(&self, x: &BitVector) -> Result<()> {
        if x.len() != self.weights.len() {
            return Err(Error::Shape {
                expected: self.weights.len(),
                actual: x.len(),
            });
        }
        Ok(())
    }
}

fn logit(weights: &[f64], bias: f64, x: &BitVector) -> f64 {
    bias + x.present().map(|i| weights[i]).sum::<f64>()
}

fn check_labels(xs: &[BitVector], ys: &[u8]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::Shape {
            expected: xs.len(),
            actual: ys.len(),
        });
    }
    if let Some(y) = ys.iter().find(|&&y| y > 1) {
        return Err(Error::Argument(format!("label {y} is not 0 or 1")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub l2_lambda: f64,
    pub max_iters: usize,
    pub learning_rate: f64,
    /// Stop once the gradient's ∞-norm drops below this.
    pub tolerance: f64,
    /// Recorded with the run; full-batch descent from zero draws nothing.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            l2_lambda: 1e-4,
            max_iters: 2000,
            learning_rate: 0.5,
            tolerance: 1e-6,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        let positive = [self.l2_lambda, self.learning_rate, self.tolerance]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if !positive || self.max_iters == 0 {
            return Err(Error::Training(format!(
                "train config values must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Mean binary cross-entropy plus `(λ/2)‖w‖²`; the bias is not penalized.
#[derive(Debug, Clone, Copy)]
pub struct Objective<'a> {
    xs: &'a [BitVector],
    ys: &'a [u8],
    l2_lambda: f64,
}

impl<'a> Objective<'a> {
    pub fn new(xs: &'a [BitVector], ys: &'a [u8], l2_lambda: f64) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::Training("no training instances".into()));
        }
        check_labels(xs, ys).map_err(|e| Error::Training(e.to_string()))?;
        let n = xs[0].len();
        if let Some(x) = xs.iter().find(|x| x.len() != n) {
            return Err(Error::Training(format!(
                "inconsistent feature vector lengths {n} and {}",
                x.len()
            )));
        }
        Ok(Self { xs, ys, l2_lambda })
    }

    pub fn n_features(&self) -> usize {
        self.xs[0].len()
    }

    pub fn loss(&self, weights: &[f64], bias: f64) -> f64 {
        let data: f64 = self
            .xs
            .iter()
            .zip(self.ys)
            .map(|(x, &y)| {
                let z = logit(weights, bias, x);
                softplus(z) - f64::from(y) * z
            })
            .sum();
        let penalty: f64 = weights.iter().map(|w| w * w).sum();
        data / self.xs.len() as f64 + 0.5 * self.l2_lambda * penalty
    }

    /// Gradient with respect to `(weights, bias)`.
    pub fn gradient(&self, weights: &[f64], bias: f64) -> (Vec<f64>, f64) {
        let mut grad_w = vec![0.0; weights.len()];
        let mut grad_b = 0.0;
        for (x, &y) in self.xs.iter().zip(self.ys) {
            let residual = sigmoid(logit(weights, bias, x)) - f64::from(y);
            grad_b += residual;
            for i in x.present() {
                grad_w[i] += residual;
            }
        }
        let scale = 1.0 / self.xs.len() as f64;
        for (g, w) in grad_w.iter_mut().zip(weights) {
            *g = *g * scale + self.l2_lambda * w;
        }
        (grad_w, grad_b * scale)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub iterations: usize,
    pub converged: bool,
    /// Objective value before each step, then after the last one.
    pub loss_history: Vec<f64>,
}

/// Full-batch gradient descent from `w = 0, b = 0`.
pub fn train_logistic(xs: &[BitVector], ys: &[u8], cfg: &TrainConfig) -> Result<LogisticModel> {
    train_logistic_report(xs, ys, cfg).map(|(model, _)| model)
}

pub fn train_logistic_report(
    xs: &[BitVector],
    ys: &[u8],
    cfg: &TrainConfig,
) -> Result<(LogisticModel, TrainReport)> {
    cfg.validate()?;
    let objective = Objective::new(xs, ys, cfg.l2_lambda)?;
    let mut weights = vec![0.0; objective.n_features()];
    let mut bias = 0.0;
    let mut loss_history = vec![objective.loss(&weights, bias)];
    // The penalty term alone has curvature λ; a step past 1/λ overshoots it.
    let step = cfg.learning_rate.min(1.0 / cfg.l2_lambda);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        let (grad_w, grad_b) = objective.gradient(&weights, bias);
        let norm = grad_w.iter().fold(grad_b.abs(), |m, g| m.max(g.abs()));
        if norm < cfg.tolerance {
            converged = true;
            break;
        }
        for (w, g) in weights.iter_mut().zip(&grad_w) {
            *w -= step * g;
        }
        bias -= step * grad_b;
        iterations += 1;
        loss_history.push(objective.loss(&weights, bias));
    }
    let model = LogisticModel::new(weights, bias)
        .map_err(|e| Error::Training(format!("training diverged: {e}")))?;
    Ok((
        model,
        TrainReport {
            iterations,
            converged,
            loss_history,
        },
    ))
}

/// On-disk model: `{"weights": [...], "bias": b, "vocab": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub vocab: Vec<String>,
}

impl SavedModel {
    pub fn new(model: &LogisticModel, vocab: &Vocabulary) -> Self {
        Self {
            weights: model.weights.clone(),
            bias: model.bias,
            vocab: vocab.tokens().to_vec(),
        }
    }

    pub fn to_writer<W: std::io::Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }

    pub fn from_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        Ok(serde_json::from_reader(reader)?)
    }

    /// Rebuilds the model and its vocabulary.
    pub fn into_parts(self) -> Result<(LogisticModel, Vocabulary)> {
        if self.weights.len() != self.vocab.len() {
            return Err(Error::Shape {
                expected: self.vocab.len(),
                actual: self.weights.len(),
            });
        }
        let vocab = Vocabulary::from_tokens(self.vocab, false)?;
        Ok((LogisticModel::new(self.weights, self.bias)?, vocab))
    }
}
