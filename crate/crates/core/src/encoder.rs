//! Encoding binary feature vectors as product states and drawing perturbed
//! bitstrings from them.
//!
//! A present feature puts its qubit in `|+⟩ = RY(π/2)|0⟩`, an absent one
//! leaves it in `|0⟩`. A perturbation of feature `k` re-encodes with only
//! `θ_k` changed. Applying X to an encoded present feature would map `|+⟩` to
//! itself and leave the measurement distribution untouched, so X is not used
//! here.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::BitVector;
use crate::statevec::{ProbabilityVector, ProductState, Sampler, StateVector};

/// Per-feature RY angles in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleVector(pub Vec<f64>);

impl AngleVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Direction of the single-feature perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlipMode {
    /// Remove a present feature.
    #[default]
    OneToZero,
    /// Add an absent feature.
    ZeroToOne,
}

impl FlipMode {
    /// The bit value a feature must have to be perturbed in this mode.
    pub fn source_bit(self) -> bool {
        matches!(self, FlipMode::OneToZero)
    }
}

/// What happens to the other present features while feature `k` is flipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoFeaturePolicy {
    /// Measure the perturbed state: each co-present feature reads 0 or 1
    /// with probability ½.
    #[default]
    QuantumSampled,
    /// Keep every other bit as it is; a classical single-bit flip.
    DeterministicHold,
}

/// How perturbed states are simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Simulation {
    /// Full 2^n state vector; the reference path.
    #[default]
    Dense,
    /// Per-qubit angles, sampled qubit by qubit. Same distribution as
    /// `Dense`, different RNG consumption.
    Product,
}

pub fn angles_for(x: &BitVector) -> AngleVector {
    AngleVector(x.iter().map(|b| if b { FRAC_PI_2 } else { 0.0 }).collect())
}

/// Prepares `⊗_i RY(θ_i)|0⟩`.
pub fn encode_angles(angles: &AngleVector) -> Result<StateVector> {
    let mut state = StateVector::zero_state(angles.0.len())?;
    for (q, &theta) in angles.0.iter().enumerate() {
        // RY(0) is the identity, bit for bit.
        if theta != 0.0 {
            state.apply_ry(q, theta)?;
        }
    }
    Ok(state)
}

pub fn encode(x: &BitVector) -> Result<StateVector> {
    encode_angles(&angles_for(x))
}

fn check_flip(x: &BitVector, k: usize, mode: FlipMode) -> Result<()> {
    if k >= x.len() {
        return Err(Error::Index {
            index: k,
            len: x.len(),
        });
    }
    if x.get(k) != mode.source_bit() {
        return Err(Error::Flip {
            index: k,
            mode,
            bit: u8::from(x.get(k)),
        });
    }
    Ok(())
}

fn perturbed_angles(x: &BitVector, k: usize, mode: FlipMode) -> Result<AngleVector> {
    check_flip(x, k, mode)?;
    let mut angles = angles_for(x);
    angles.0[k] = match mode {
        FlipMode::OneToZero => 0.0,
        FlipMode::ZeroToOne => FRAC_PI_2,
    };
    Ok(angles)
}

/// The encoded state of `x` with only `θ_k` reset: to 0 for
/// [`FlipMode::OneToZero`], to π/2 for [`FlipMode::ZeroToOne`].
pub fn perturbed_state(x: &BitVector, k: usize, mode: FlipMode) -> Result<StateVector> {
    encode_angles(&perturbed_angles(x, k, mode)?)
}

/// [`perturbed_state`] in product form.
pub fn perturbed_product_state(x: &BitVector, k: usize, mode: FlipMode) -> Result<ProductState> {
    ProductState::new(perturbed_angles(x, k, mode)?.0)
}

/// Draws perturbed bitstrings for one `(x, k)` pair.
///
/// Building the perturbed state and its distribution happens once; every
/// [`draw`](Self::draw) then consumes the RNG exactly as a fresh call to
/// [`draw_perturbed_bits`] would.
#[derive(Debug, Clone)]
pub struct Perturber {
    inner: PerturberKind,
}

#[derive(Debug, Clone)]
enum PerturberKind {
    Hold(BitVector),
    Analytic(Sampler),
    Shots {
        exact: ProbabilityVector,
        shots: usize,
    },
    Product {
        state: ProductState,
        shots: Option<usize>,
    },
}

impl Perturber {
    /// A perturber on the dense reference simulator.
    pub fn new(
        x: &BitVector,
        k: usize,
        mode: FlipMode,
        policy: CoFeaturePolicy,
        shots: Option<usize>,
    ) -> Result<Self> {
        Self::with_simulation(x, k, mode, policy, shots, Simulation::Dense)
    }

    pub fn with_simulation(
        x: &BitVector,
        k: usize,
        mode: FlipMode,
        policy: CoFeaturePolicy,
        shots: Option<usize>,
        simulation: Simulation,
    ) -> Result<Self> {
        if shots == Some(0) {
            return Err(Error::Argument("shots must be at least 1".into()));
        }
        let inner = match policy {
            CoFeaturePolicy::DeterministicHold => {
                check_flip(x, k, mode)?;
                PerturberKind::Hold(x.flipped(k))
            }
            CoFeaturePolicy::QuantumSampled if simulation == Simulation::Product => {
                PerturberKind::Product {
                    state: perturbed_product_state(x, k, mode)?,
                    shots,
                }
            }
            CoFeaturePolicy::QuantumSampled => {
                let exact = perturbed_state(x, k, mode)?.probabilities();
                match shots {
                    None => PerturberKind::Analytic(exact.sampler()),
                    Some(shots) => PerturberKind::Shots { exact, shots },
                }
            }
        };
        Ok(Self { inner })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> BitVector {
        match &self.inner {
            PerturberKind::Hold(bits) => bits.clone(),
            PerturberKind::Analytic(sampler) => sampler.sample(rng),
            PerturberKind::Shots { exact, shots } => exact
                .sample_shots(*shots, rng)
                .expect("shots validated at construction")
                .sample(rng),
            PerturberKind::Product { state, shots: None } => state.sample(rng),
            // One draw from the empirical distribution of `shots` measurements
            // is one of those measurements, picked uniformly.
            PerturberKind::Product {
                state,
                shots: Some(shots),
            } => {
                let outcomes: Vec<BitVector> = (0..*shots).map(|_| state.sample(rng)).collect();
                let pick = rng.random_range(0..outcomes.len());
                outcomes.into_iter().nth(pick).expect("pick in range")
            }
        }
    }
}

/// One perturbed bitstring for feature `k` of `x`.
///
/// With `shots = None` the draw comes from the exact distribution; with
/// `Some(s)` an empirical distribution is first estimated from `s` shots and
/// the bitstring is drawn from that.
pub fn draw_perturbed_bits<R: Rng + ?Sized>(
    x: &BitVector,
    k: usize,
    mode: FlipMode,
    policy: CoFeaturePolicy,
    shots: Option<usize>,
    rng: &mut R,
) -> Result<BitVector> {
    Ok(Perturber::new(x, k, mode, policy, shots)?.draw(rng))
}
