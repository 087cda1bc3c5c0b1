//! Q-LIME π: quantum-inspired local explanations for classifiers over binary
//! bag-of-words features, a classical LIME baseline, and a harness comparing
//! the two.
//!
//! The pipeline, bottom up:
//!
//! - [`statevec`]: dense state-vector simulator (RY, X, exact and sampled
//!   measurement), plus a per-qubit product form for unentangled states.
//! - [`encoder`]: feature vector to product state, and perturbed draws.
//! - [`corpus`]: tokenization, vocabulary, binary vectors, CSV datasets.
//! - [`model`]: the logistic-regression black box.
//! - [`explain`]: Q-LIME π and LIME explainers, top-k and overlap.
//! - [`harness`]: experiment runner and result emitters.

pub mod corpus;
pub mod encoder;
pub mod error;
pub mod explain;
pub mod features;
pub mod harness;
pub mod model;
pub mod statevec;

pub use corpus::{Document, LabeledCorpus, StopwordList, Vocabulary};
pub use encoder::{CoFeaturePolicy, FlipMode, Simulation};
pub use error::{Error, ErrorKind, Result};
pub use explain::{Attribution, Explanation, LimeConfig, Method, QlimeConfig};
pub use features::BitVector;
pub use harness::{DatasetSource, ExperimentConfig, ExperimentResult, Grid, SynthSpec};
pub use model::{LogisticModel, SavedModel, TrainConfig};
pub use statevec::{ProbabilityVector, ProductState, StateVector};
