//! Shared fixtures for the criterion benchmarks.

use qlime_core::{BitVector, LogisticModel, Vocabulary};

/// A model, vocabulary, and instance over `n` features with roughly half of
/// them present.
pub fn fixture(n: usize) -> (LogisticModel, Vocabulary, BitVector) {
    let weights = (0..n)
        .map(|i| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sign * (1.0 + i as f64 / n as f64)
        })
        .collect();
    let model = LogisticModel::new(weights, -0.25).expect("finite weights");
    let vocab = Vocabulary::from_tokens((0..n).map(|i| format!("tok{i:02}")).collect(), false)
        .expect("distinct tokens");
    let x = (0..n).map(|i| i % 3 != 1).collect();
    (model, vocab, x)
}
