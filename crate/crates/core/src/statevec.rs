//! Dense state-vector simulation of up to [`MAX_QUBITS`] qubits.
//!
//! Only the two gates the explainer needs are provided: the real Y rotation
//! `RY(θ) = [[cos θ/2, -sin θ/2], [sin θ/2, cos θ/2]]` and Pauli-X. Qubit `q`
//! is bit `n - 1 - q` of the basis index (see [`crate::features`]).

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::features::BitVector;

/// 2^20 complex doubles is 16 MiB.
pub const MAX_QUBITS: usize = 20;

const NORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// The all-zeros basis state `|0…0⟩`.
    pub fn zero_state(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Builds a state from raw amplitudes, which must be normalized.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if !len.is_power_of_two() {
            return Err(Error::Argument(format!(
                "amplitude count {len} is not a power of two"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_qubits(n_qubits)?;
        let state = Self {
            n_qubits,
            amplitudes,
        };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Argument(format!("state norm {norm} is not 1")));
        }
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(Complex64::norm_sqr).sum()
    }

    fn mask(&self, qubit: usize) -> Result<usize> {
        if qubit >= self.n_qubits {
            return Err(Error::Index {
                index: qubit,
                len: self.n_qubits,
            });
        }
        Ok(1 << (self.n_qubits - 1 - qubit))
    }

    /// Applies `RY(theta)` to `qubit` in place.
    pub fn apply_ry(&mut self, qubit: usize, theta: f64) -> Result<()> {
        let mask = self.mask(qubit)?;
        let (s, c) = (theta / 2.0).sin_cos();
        for block in self.amplitudes.chunks_exact_mut(mask << 1) {
            let (zeros, ones) = block.split_at_mut(mask);
            for (a0, a1) in zeros.iter_mut().zip(ones.iter_mut()) {
                let (v0, v1) = (*a0, *a1);
                *a0 = v0 * c - v1 * s;
                *a1 = v0 * s + v1 * c;
            }
        }
        Ok(())
    }

    /// Applies Pauli-X to `qubit` in place.
    pub fn apply_x(&mut self, qubit: usize) -> Result<()> {
        let mask = self.mask(qubit)?;
        for block in self.amplitudes.chunks_exact_mut(mask << 1) {
            let (zeros, ones) = block.split_at_mut(mask);
            zeros.swap_with_slice(ones);
        }
        Ok(())
    }

    /// Consuming form of [`apply_ry`](Self::apply_ry) for chaining.
    pub fn ry(mut self, qubit: usize, theta: f64) -> Result<Self> {
        self.apply_ry(qubit, theta)?;
        Ok(self)
    }

    /// Consuming form of [`apply_x`](Self::apply_x) for chaining.
    pub fn x(mut self, qubit: usize) -> Result<Self> {
        self.apply_x(qubit)?;
        Ok(self)
    }

    /// Exact measurement distribution over all basis states.
    pub fn probabilities(&self) -> ProbabilityVector {
        ProbabilityVector {
            n_qubits: self.n_qubits,
            probs: self.amplitudes.iter().map(Complex64::norm_sqr).collect(),
        }
    }
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::Size(n));
    }
    Ok(())
}

/// A categorical distribution over the `2^n` basis labels of an `n`-qubit
/// register.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    n_qubits: usize,
    probs: Vec<f64>,
}

impl ProbabilityVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let len = probs.len();
        if !len.is_power_of_two() {
            return Err(Error::Argument(format!(
                "probability count {len} is not a power of two"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_qubits(n_qubits)?;
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::Argument(format!("invalid probability {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Argument(format!("probabilities sum to {total}")));
        }
        Ok(Self { n_qubits, probs })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of the basis label spelled by `bits`.
    pub fn get(&self, bits: &BitVector) -> f64 {
        self.probs[bits.to_basis_index()]
    }

    /// Cumulative table for repeated draws from this distribution.
    pub fn sampler(&self) -> Sampler {
        let mut acc = 0.0;
        let cumulative = self
            .probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let last_supported = self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        Sampler {
            n_qubits: self.n_qubits,
            cumulative,
            last_supported,
        }
    }

    /// Draws one basis label.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> BitVector {
        self.sampler().sample(rng)
    }

    /// Empirical distribution of `shots` independent draws.
    pub fn sample_shots<R: Rng + ?Sized>(&self, shots: usize, rng: &mut R) -> Result<Self> {
        if shots == 0 {
            return Err(Error::Argument("shots must be at least 1".into()));
        }
        let sampler = self.sampler();
        let mut counts = vec![0u32; self.probs.len()];
        for _ in 0..shots {
            counts[sampler.sample_index(rng)] += 1;
        }
        let probs = counts
            .into_iter()
            .map(|c| f64::from(c) / shots as f64)
            .collect();
        Ok(Self {
            n_qubits: self.n_qubits,
            probs,
        })
    }
}

/// Inverse-CDF sampler. Each draw consumes exactly one `f64` from the RNG.
#[derive(Debug, Clone)]
pub struct Sampler {
    n_qubits: usize,
    cumulative: Vec<f64>,
    last_supported: usize,
}

impl Sampler {
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let idx = self.cumulative.partition_point(|&c| c <= u);
        // Rounding can leave the final cumulative sum a hair below u.
        idx.min(self.last_supported)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> BitVector {
        BitVector::from_basis_index(self.sample_index(rng), self.n_qubits)
    }
}

/// A product of single-qubit RY states, `⊗_i RY(θ_i)|0⟩`, stored as one
/// angle per qubit.
///
/// This is the fast path for the states the encoder produces: measurement
/// draws each qubit independently in O(n) instead of touching 2^n
/// amplitudes. [`to_dense`](Self::to_dense) gives the reference state.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductState {
    angles: Vec<f64>,
}

impl ProductState {
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        check_qubits(angles.len())?;
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::Argument("rotation angles must be finite".into()));
        }
        Ok(Self { angles })
    }

    pub fn n_qubits(&self) -> usize {
        self.angles.len()
    }

    /// Probability that qubit `q` reads 1, `sin²(θ_q/2)`.
    pub fn p_one(&self, q: usize) -> f64 {
        (self.angles[q] / 2.0).sin().powi(2)
    }

    pub fn to_dense(&self) -> StateVector {
        let mut state = StateVector::zero_state(self.n_qubits()).expect("size checked");
        for (q, &theta) in self.angles.iter().enumerate() {
            if theta != 0.0 {
                state.apply_ry(q, theta).expect("qubit in range");
            }
        }
        state
    }

    /// Draws one basis label, one Bernoulli per qubit.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> BitVector {
        (0..self.n_qubits())
            .map(|q| {
                let p = self.p_one(q);
                // Pinned qubits consume no randomness.
                if p <= 0.0 {
                    false
                } else if p >= 1.0 {
                    true
                } else {
                    rng.random_bool(p)
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn re(state: &StateVector) -> Vec<f64> {
        state.amplitudes().iter().map(|a| a.re).collect()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn zero_state_sizes() {
        assert_eq!(re(&StateVector::zero_state(2).unwrap()), [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(re(&StateVector::zero_state(1).unwrap()), [1.0, 0.0]);
        assert!(matches!(StateVector::zero_state(21), Err(Error::Size(21))));
        assert!(matches!(StateVector::zero_state(0), Err(Error::Size(0))));
    }

    #[test]
    fn ry_single_qubit() {
        let s = StateVector::zero_state(1).unwrap().ry(0, FRAC_PI_2).unwrap();
        assert!(close(&re(&s), &[FRAC_1_SQRT_2, FRAC_1_SQRT_2], 1e-15));
        let s = StateVector::zero_state(1).unwrap().ry(0, 0.0).unwrap();
        assert_eq!(re(&s), [1.0, 0.0]);
        let s = StateVector::zero_state(1).unwrap().ry(0, PI).unwrap();
        assert!(close(&re(&s), &[0.0, 1.0], 1e-15));
        assert!(s.amplitudes().iter().all(|a| a.im == 0.0));
    }

    #[test]
    fn gates_reject_bad_qubit() {
        let mut s = StateVector::zero_state(2).unwrap();
        assert!(matches!(s.apply_ry(2, 1.0), Err(Error::Index { index: 2, len: 2 })));
        assert!(matches!(s.apply_x(5), Err(Error::Index { .. })));
    }

    #[test]
    fn x_toggles_bit() {
        // |10⟩ -> |11⟩
        let s = StateVector::zero_state(2).unwrap().x(0).unwrap().x(1).unwrap();
        assert_eq!(re(&s), [0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn x_leaves_plus_state_unchanged() {
        let plus = StateVector::zero_state(1).unwrap().ry(0, FRAC_PI_2).unwrap();
        let flipped = plus.clone().x(0).unwrap();
        // cos(π/4) and sin(π/4) differ in the last ulp, so compare with a tolerance.
        for (a, b) in plus.amplitudes().iter().zip(flipped.amplitudes()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn probabilities_examples() {
        let plus = StateVector::zero_state(1).unwrap().ry(0, FRAC_PI_2).unwrap();
        assert!(close(plus.probabilities().probs(), &[0.5, 0.5], 1e-15));
        let zero = StateVector::zero_state(2).unwrap();
        assert_eq!(zero.probabilities().probs(), [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn from_amplitudes_validates() {
        let half = Complex64::new(0.5, 0.0);
        assert!(StateVector::from_amplitudes(vec![half; 4]).is_ok());
        assert!(StateVector::from_amplitudes(vec![half; 3]).is_err());
        assert!(StateVector::from_amplitudes(vec![half; 2]).is_err());
    }

    #[test]
    fn probability_vector_validates() {
        assert!(ProbabilityVector::new(vec![0.5, 0.5]).is_ok());
        assert!(ProbabilityVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbabilityVector::new(vec![1.5, -0.5]).is_err());
        assert!(ProbabilityVector::new(vec![1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn sample_point_mass() {
        let p = ProbabilityVector::new(vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            assert_eq!(p.sample(&mut rng).to_string(), "01");
        }
    }

    #[test]
    fn sample_respects_support() {
        let p = ProbabilityVector::new(vec![0.5, 0.0, 0.5, 0.0]).unwrap();
        for seed in 0..200 {
            let bits = p.sample(&mut ChaCha8Rng::seed_from_u64(seed));
            assert!(!bits.get(1));
        }
    }

    #[test]
    fn sample_is_deterministic() {
        let p = ProbabilityVector::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let a: Vec<_> = {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            (0..20).map(|_| p.sample(&mut rng)).collect()
        };
        let b: Vec<_> = {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            (0..20).map(|_| p.sample(&mut rng)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn shots_rejects_zero() {
        let p = ProbabilityVector::new(vec![0.5, 0.5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(p.sample_shots(0, &mut rng), Err(Error::Argument(_))));
    }

    #[test]
    fn shots_point_mass_and_granularity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let point = ProbabilityVector::new(vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(point.sample_shots(100, &mut rng).unwrap(), point);

        let p = ProbabilityVector::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let emp = p.sample_shots(100, &mut rng).unwrap();
        let total: f64 = emp.probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        for q in emp.probs() {
            let scaled = q * 100.0;
            assert!((scaled - scaled.round()).abs() < 1e-9);
        }
    }

    #[test]
    fn product_state_matches_dense() {
        let angles = vec![FRAC_PI_2, 0.0, 0.3, PI, 1.1];
        let product = ProductState::new(angles.clone()).unwrap();
        let mut dense = StateVector::zero_state(5).unwrap();
        for (q, &a) in angles.iter().enumerate() {
            dense.apply_ry(q, a).unwrap();
        }
        assert_eq!(product.to_dense(), dense);
        assert!(ProductState::new(vec![]).is_err());
        assert!(ProductState::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn product_sampling_pins_deterministic_qubits() {
        let product = ProductState::new(vec![0.0, FRAC_PI_2, PI]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let bits = product.sample(&mut rng);
            assert!(!bits.get(0) && bits.get(2));
        }
    }

    #[test]
    fn shots_converge_to_fair_coin() {
        // 3 sigma for 10^4 fair-coin shots is 0.015.
        let p = ProbabilityVector::new(vec![0.5, 0.5]).unwrap();
        let emp = p
            .sample_shots(10_000, &mut ChaCha8Rng::seed_from_u64(2024))
            .unwrap();
        for q in emp.probs() {
            assert!((q - 0.5).abs() < 0.02, "{q}");
        }
    }
}
