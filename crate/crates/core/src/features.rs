//! Binary presence/absence feature vectors.
//!
//! Feature `i` is qubit `i`, and basis labels are big-endian: feature 0 is
//! the most significant bit of the basis index, so the printed bitstring reads
//! left to right in feature order.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVector {
    bits: Vec<bool>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            bits: vec![false; len],
        }
    }

    pub fn ones(len: usize) -> Self {
        Self {
            bits: vec![true; len],
        }
    }

    /// Parses a slice of 0/1 integers.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        bits.iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::Argument(format!("bit value {other} is not 0 or 1"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(|bits| Self { bits })
    }

    /// Decodes basis index `index` of an `len`-qubit register.
    pub fn from_basis_index(index: usize, len: usize) -> Self {
        let bits = (0..len)
            .map(|i| (index >> (len - 1 - i)) & 1 == 1)
            .collect();
        Self { bits }
    }

    pub fn to_basis_index(&self) -> usize {
        self.bits
            .iter()
            .fold(0usize, |acc, &b| (acc << 1) | usize::from(b))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Panics if `i` is out of range, like slice indexing.
    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.bits[i] = value;
    }

    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Indices of the present features, ascending.
    pub fn present(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter().copied()
    }

    /// Copy of `self` with bit `k` toggled.
    pub fn flipped(&self, k: usize) -> Self {
        let mut out = self.clone();
        out.bits[k] = !out.bits[k];
        out
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    /// Cosine distance `1 - <a,b> / (|a| |b|)`; 1 when either vector is zero.
    pub fn cosine_distance(&self, other: &BitVector) -> f64 {
        let dot = self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(&a, &b)| a && b)
            .count();
        let (na, nb) = (self.popcount(), other.popcount());
        if na == 0 || nb == 0 {
            return 1.0;
        }
        1.0 - dot as f64 / ((na * nb) as f64).sqrt()
    }
}

impl From<Vec<bool>> for BitVector {
    fn from(bits: Vec<bool>) -> Self {
        Self { bits }
    }
}

impl FromIterator<bool> for BitVector {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Self {
            bits: iter.into_iter().collect(),
        }
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}
