//! The binary polarization transform.
//!
//! `G_n` is the plain Kronecker power of `[[1,0],[1,1]]` with no bit-reversal
//! permutation, and words are row vectors: `x = u G_n` over GF(2). Index `k`
//! of a word is position `k` of the row vector, in natural order.

use crate::error::{invalid, Result};

/// A word over GF(2), one byte per bit.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitWord(Vec<u8>);

impl BitWord {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return invalid(format!("bit at position {} is {}, expected 0 or 1", pos, bits[pos]));
        }
        Ok(BitWord(bits))
    }

    pub fn zeros(len: usize) -> Self {
        BitWord(vec![0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn into_bits(self) -> Vec<u8> {
        self.0
    }

    pub fn xor(&self, other: &BitWord) -> Result<BitWord> {
        if self.len() != other.len() {
            return invalid(format!("xor of words with lengths {} and {}", self.len(), other.len()));
        }
        Ok(BitWord(self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect()))
    }
}

impl TryFrom<Vec<u8>> for BitWord {
    type Error = crate::Error;

    fn try_from(bits: Vec<u8>) -> Result<Self> {
        BitWord::new(bits)
    }
}

/// Returns `log2(n)` when `n` is a power of two.
pub fn log2_exact(n: usize) -> Option<u32> {
    if n.is_power_of_two() {
        Some(n.trailing_zeros())
    } else {
        None
    }
}

/// In-place butterfly computing `x = u G_n` on raw bits. `bits.len()` must be
/// a power of two; this is checked only in debug builds.
pub fn transform_in_place(bits: &mut [u8]) {
    let n = bits.len();
    debug_assert!(n.is_power_of_two());
    // G_{2h} = [[G_h, 0], [G_h, G_h]]: the first half of the output is
    // (u_a + u_b) G_h, the second half u_b G_h.
    let mut half = 1;
    while half < n {
        for block in bits.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter()) {
                *a ^= *b;
            }
        }
        half *= 2;
    }
}

/// `x = u G_n` over GF(2).
pub fn polar_transform(u: &BitWord) -> Result<BitWord> {
    if log2_exact(u.len()).is_none() {
        return invalid(format!("word length {} is not a power of two", u.len()));
    }
    let mut bits = u.0.clone();
    transform_in_place(&mut bits);
    Ok(BitWord(bits))
}

/// `u = x G_n^{-1}`. `G_n` is an involution, so this is the same butterfly;
/// the separate name keeps encoder code reading as `x = u G_n^{-1}`.
pub fn polar_inverse(x: &BitWord) -> Result<BitWord> {
    polar_transform(x)
}
