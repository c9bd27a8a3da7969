//! Keyed random streams.
//!
//! Every consumer of randomness gets its own ChaCha stream keyed by
//! `(master seed, purpose, level, trial)`. Streams depend only on the key, so
//! results do not depend on how trials are scheduled across workers, and
//! different purposes never share randomness.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Message = 1,
    Frozen = 2,
    Noise = 3,
    ConstructionBits = 4,
    ConstructionNoise = 5,
}

pub type Stream = ChaCha12Rng;

pub fn stream(seed: u64, purpose: Purpose, level: u64, trial: u64) -> Stream {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    key[16..24].copy_from_slice(&level.to_le_bytes());
    key[24..].copy_from_slice(&trial.to_le_bytes());
    ChaCha12Rng::from_seed(key)
}

/// Fills `out` with i.i.d. uniform bits.
pub fn fill_bits<R: Rng>(rng: &mut R, out: &mut [u8]) {
    for chunk in out.chunks_mut(64) {
        let word: u64 = rng.random();
        for (j, b) in chunk.iter_mut().enumerate() {
            *b = ((word >> j) & 1) as u8;
        }
    }
}

pub fn std_normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_keyed() {
        let draw = |p, l, t| {
            let mut s = stream(7, p, l, t);
            (0..4).map(|_| s.random::<u64>()).collect::<Vec<_>>()
        };
        assert_eq!(draw(Purpose::Noise, 0, 3), draw(Purpose::Noise, 0, 3));
        assert_ne!(draw(Purpose::Noise, 0, 3), draw(Purpose::Noise, 0, 4));
        assert_ne!(draw(Purpose::Noise, 0, 3), draw(Purpose::Frozen, 0, 3));
        assert_ne!(draw(Purpose::Frozen, 1, 3), draw(Purpose::Frozen, 2, 3));
    }

    #[test]
    fn bits_are_balanced() {
        let mut s = stream(1, Purpose::Message, 0, 0);
        let mut bits = vec![0u8; 100_000];
        fill_bits(&mut s, &mut bits);
        let ones = bits.iter().map(|&b| b as usize).sum::<usize>();
        assert!(bits.iter().all(|&b| b <= 1));
        assert!((ones as f64 - 50_000.0).abs() < 4.0 * 158.2);
    }
}
