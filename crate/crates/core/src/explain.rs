//! Local explanations of a [`LogisticModel`] prediction.
//!
//! [`qlime_explain`] scores each present feature `k` by
//! `Δf_k = f(x) - f(x')`, where `x'` is measured from the encoded state of
//! `x` with qubit `k` switched off. [`lime_explain`] is the classical
//! baseline: random keep/drop perturbations of the present features, an
//! exponential kernel on cosine distance, and a weighted ridge fit.
//!
//! Both rank attributions by `|weight|` descending, ties broken by token.

use std::cmp::Ordering;
use std::collections::hash_map::DefaultHasher;
use std::collections::HashSet;
use std::hash::{Hash, Hasher};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::encoder::{CoFeaturePolicy, FlipMode, Perturber, Simulation};
use crate::error::{Error, Result};
use crate::features::BitVector;
use crate::model::LogisticModel;
use crate::statevec::MAX_QUBITS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "QLIME")]
    Qlime,
    #[serde(rename = "LIME")]
    Lime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub index: usize,
    pub token: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub method: Method,
    pub seed: u64,
    pub shots: Option<usize>,
    pub model_evals: u64,
    pub entries: Vec<Attribution>,
    #[serde(skip)]
    vocab_id: Option<VocabId>,
}

/// Identifies the vocabulary an explanation was computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct VocabId {
    len: usize,
    hash: u64,
}

impl VocabId {
    fn of(vocab: &Vocabulary) -> Self {
        let mut hasher = DefaultHasher::new();
        vocab.tokens().hash(&mut hasher);
        Self {
            len: vocab.len(),
            hash: hasher.finish(),
        }
    }
}

impl Explanation {
    pub fn new(
        method: Method,
        seed: u64,
        shots: Option<usize>,
        model_evals: u64,
        mut entries: Vec<Attribution>,
    ) -> Self {
        sort_entries(&mut entries);
        Self {
            method,
            seed,
            shots,
            model_evals,
            entries,
            vocab_id: None,
        }
    }

    fn for_vocab(mut self, vocab: &Vocabulary) -> Self {
        self.vocab_id = Some(VocabId::of(vocab));
        self
    }

    /// The feature-vector length this explanation was built for, if known.
    pub fn n_features(&self) -> Option<usize> {
        self.vocab_id.map(|v| v.len)
    }

    /// Keeps only the `k` highest-ranked entries.
    pub fn truncated(mut self, k: usize) -> Self {
        self.entries.truncate(k);
        self
    }

    pub fn weight_of(&self, token: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.token == token).map(|e| e.weight)
    }
}

fn rank(a: &Attribution, b: &Attribution) -> Ordering {
    b.weight
        .abs()
        .total_cmp(&a.weight.abs())
        .then_with(|| a.token.cmp(&b.token))
}

fn sort_entries(entries: &mut [Attribution]) {
    entries.sort_by(rank);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QlimeConfig {
    pub flip_mode: FlipMode,
    pub policy: CoFeaturePolicy,
    /// `None` draws from the exact distribution.
    pub shots: Option<usize>,
    /// Perturbed draws averaged per feature.
    pub repeats: usize,
    pub seed: u64,
    #[serde(default)]
    pub simulation: Simulation,
}

impl Default for QlimeConfig {
    fn default() -> Self {
        Self {
            flip_mode: FlipMode::OneToZero,
            policy: CoFeaturePolicy::QuantumSampled,
            shots: None,
            repeats: 1,
            seed: 0,
            simulation: Simulation::Dense,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimeConfig {
    pub n_perturbations: usize,
    pub kernel_width: f64,
    pub ridge_lambda: f64,
    pub seed: u64,
}

impl Default for LimeConfig {
    fn default() -> Self {
        Self {
            n_perturbations: 300,
            kernel_width: 25.0,
            ridge_lambda: 1.0,
            seed: 0,
        }
    }
}

fn check_inputs(model: &LogisticModel, x: &BitVector, vocab: &Vocabulary) -> Result<()> {
    for expected in [vocab.len(), model.n_features()] {
        if x.len() != expected {
            return Err(Error::Shape {
                expected,
                actual: x.len(),
            });
        }
    }
    Ok(())
}

/// Q-LIME π attributions for instance `x`.
///
/// `f(x)` is evaluated once, then each flippable feature gets `repeats`
/// perturbed draws, so the explanation costs `1 + repeats · #flippable`
/// model evaluations.
pub fn qlime_explain(
    model: &LogisticModel,
    x: &BitVector,
    vocab: &Vocabulary,
    cfg: &QlimeConfig,
) -> Result<Explanation> {
    check_inputs(model, x, vocab)?;
    if x.len() > MAX_QUBITS || x.is_empty() {
        return Err(Error::Size(x.len()));
    }
    if cfg.repeats == 0 {
        return Err(Error::Argument("repeats must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let fx = model.predict_proba(x)?;
    let mut evals = 1u64;
    let mut entries = Vec::new();
    for k in (0..x.len()).filter(|&k| x.get(k) == cfg.flip_mode.source_bit()) {
        let perturber =
            Perturber::with_simulation(x, k, cfg.flip_mode, cfg.policy, cfg.shots, cfg.simulation)?;
        let mut total = 0.0;
        for _ in 0..cfg.repeats {
            total += model.predict_proba(&perturber.draw(&mut rng))?;
        }
        evals += cfg.repeats as u64;
        entries.push(Attribution {
            index: k,
            token: vocab.token(k).to_owned(),
            weight: fx - total / cfg.repeats as f64,
        });
    }
    Ok(Explanation::new(Method::Qlime, cfg.seed, cfg.shots, evals, entries).for_vocab(vocab))
}

/// Classical LIME attributions for instance `x`.
///
/// Draws `n_perturbations` samples that keep each present feature with
/// probability ½ (absent features stay absent), weights them by
/// `exp(-d²/width²)` with `d` the cosine distance to `x`, and fits a
/// weighted ridge regression with an unpenalized intercept. The coefficients
/// of the present features are the attributions.
pub fn lime_explain(
    model: &LogisticModel,
    x: &BitVector,
    vocab: &Vocabulary,
    cfg: &LimeConfig,
) -> Result<Explanation> {
    check_inputs(model, x, vocab)?;
    if cfg.n_perturbations == 0 {
        return Err(Error::Argument("n_perturbations must be at least 1".into()));
    }
    if !(cfg.kernel_width > 0.0 && cfg.ridge_lambda > 0.0) {
        return Err(Error::Argument(
            "kernel_width and ridge_lambda must be positive".into(),
        ));
    }
    let present: Vec<usize> = x.present().collect();
    if present.is_empty() {
        return Err(Error::Explanation(
            "instance has no present features to perturb".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.n_perturbations;
    let d = present.len();
    let mut design = DMatrix::<f64>::zeros(n, d);
    let mut targets = DVector::<f64>::zeros(n);
    let mut weights = DVector::<f64>::zeros(n);
    let width_sq = cfg.kernel_width * cfg.kernel_width;
    for row in 0..n {
        let mut z = BitVector::zeros(x.len());
        for (col, &i) in present.iter().enumerate() {
            if rng.random_bool(0.5) {
                z.set(i, true);
                design[(row, col)] = 1.0;
            }
        }
        let dist = x.cosine_distance(&z);
        weights[row] = (-dist * dist / width_sq).exp();
        targets[row] = model.predict_proba(&z)?;
    }

    let coefs = weighted_ridge(&design, &targets, &weights, cfg.ridge_lambda)?;
    let entries = present
        .iter()
        .zip(coefs.iter())
        .map(|(&i, &weight)| Attribution {
            index: i,
            token: vocab.token(i).to_owned(),
            weight,
        })
        .collect();
    Ok(Explanation::new(Method::Lime, cfg.seed, None, n as u64, entries).for_vocab(vocab))
}

/// Slopes of `argmin Σ_r w_r (y_r - c - x_r·β)² + λ‖β‖²` over `(c, β)`.
///
/// The intercept is removed by centering on the weighted means, leaving the
/// SPD system `(Xcᵀ W Xc + λI) β = Xcᵀ W yc`.
pub fn weighted_ridge(
    design: &DMatrix<f64>,
    targets: &DVector<f64>,
    weights: &DVector<f64>,
    lambda: f64,
) -> Result<DVector<f64>> {
    let total: f64 = weights.sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::Explanation("all sample weights are zero".into()));
    }
    let x_mean = design.tr_mul(weights) / total;
    let y_mean = targets.dot(weights) / total;
    let mut centered = design.clone();
    for mut row in centered.row_iter_mut() {
        row -= x_mean.transpose();
    }
    let y_centered = targets.add_scalar(-y_mean);

    let mut weighted = centered.clone();
    for (mut row, &w) in weighted.row_iter_mut().zip(weights.iter()) {
        row *= w;
    }
    let gram = weighted.tr_mul(&centered)
        + DMatrix::<f64>::identity(design.ncols(), design.ncols()) * lambda;
    let rhs = weighted.tr_mul(&y_centered);
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Explanation("ridge system is not positive definite".into()))?;
    Ok(chol.solve(&rhs))
}

/// `g(x) = Σ_k weight_k · x_k` over the explanation's entries.
pub fn surrogate_eval(e: &Explanation, x: &BitVector) -> Result<f64> {
    if let Some(expected) = e.n_features() {
        if expected != x.len() {
            return Err(Error::Shape {
                expected,
                actual: x.len(),
            });
        }
    }
    let mut total = 0.0;
    for entry in &e.entries {
        if entry.index >= x.len() {
            return Err(Error::Index {
                index: entry.index,
                len: x.len(),
            });
        }
        if x.get(entry.index) {
            total += entry.weight;
        }
    }
    Ok(total)
}

/// The first `min(k, |entries|)` tokens in rank order.
pub fn top_k(e: &Explanation, k: usize) -> Vec<&str> {
    let mut ranked: Vec<&Attribution> = e.entries.iter().collect();
    ranked.sort_by(|a, b| rank(a, b));
    ranked.into_iter().take(k).map(|a| a.token.as_str()).collect()
}

/// Number of tokens shared by the two top-`k` lists.
pub fn overlap(a: &Explanation, b: &Explanation, k: usize) -> Result<usize> {
    if let (Some(va), Some(vb)) = (a.vocab_id, b.vocab_id) {
        if va != vb {
            return Err(Error::VocabularyMismatch);
        }
    }
    for ea in &a.entries {
        if let Some(eb) = b.entries.iter().find(|eb| eb.token == ea.token) {
            if eb.index != ea.index {
                return Err(Error::VocabularyMismatch);
            }
        }
    }
    let left: HashSet<&str> = top_k(a, k).into_iter().collect();
    Ok(top_k(b, k).into_iter().filter(|t| left.contains(t)).count())
}
