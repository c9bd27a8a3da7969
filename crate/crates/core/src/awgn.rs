//! The unit-variance AWGN channel seen as an `m`-user binary-input MAC.
//!
//! Level `i` of a symbol sees the channel `x_i -> y` with earlier levels
//! `x_1..x_{i-1}` known and later levels uniform, which is exactly the
//! conditioning used by multistage decoding.

use rand::Rng;

use crate::constellation::Constellation;
use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate_refined, GaussLegendre};
use crate::rng::{std_normal, Stream};

/// Channel LLRs are clamped to `[-LLR_CLAMP, LLR_CLAMP]`.
pub const LLR_CLAMP: f64 = 60.0;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// One channel use: `y = x + z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelSample {
    pub x: f64,
    pub y: f64,
}

/// Level index (1-based) together with the bits already fixed on levels
/// `1..level-1` at one symbol position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelContext {
    pub level: usize,
    pub prev_bits: Vec<u8>,
}

impl LevelContext {
    pub fn new(level: usize, prev_bits: Vec<u8>) -> Result<Self> {
        if level == 0 || prev_bits.len() != level - 1 {
            return invalid(format!(
                "level {} needs {} previous bits, got {}",
                level,
                level.saturating_sub(1),
                prev_bits.len()
            ));
        }
        if prev_bits.iter().any(|&b| b > 1) {
            return invalid("previous bits must be 0 or 1");
        }
        Ok(LevelContext { level, prev_bits })
    }

    fn prefix(&self) -> usize {
        self.prev_bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }
}

/// A memoryless channel whose input is an `m`-bit label, decoded one label
/// bit (level) at a time.
pub trait LevelChannel: Sync {
    type Output: Copy + Default + Send + Sync;

    fn levels(&self) -> usize;

    /// Draws the channel output for one label.
    fn transmit_label(&self, label: usize, rng: &mut Stream) -> Self::Output;

    /// `ln p(y | level bit 0, prefix) - ln p(y | level bit 1, prefix)` with
    /// the later levels averaged out, clamped to `±LLR_CLAMP`. `level` is
    /// 1-based and `prefix` packs the bits of levels `1..level-1`, level 1
    /// most significant.
    fn level_llr(&self, y: Self::Output, level: usize, prefix: usize) -> f64;
}

/// The AWGN channel driven through a constellation. `noise_std` is 1 for the
/// real channel; tests set it to 0 for a noiseless link while the receiver
/// keeps its unit-variance metric.
#[derive(Clone, Debug)]
pub struct AwgnMac {
    constellation: Constellation,
    noise_std: f64,
}

impl AwgnMac {
    pub fn new(constellation: Constellation) -> Self {
        AwgnMac { constellation, noise_std: 1.0 }
    }

    pub fn with_noise_std(constellation: Constellation, noise_std: f64) -> Self {
        AwgnMac { constellation, noise_std }
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }
}

impl LevelChannel for AwgnMac {
    type Output = f64;

    fn levels(&self) -> usize {
        self.constellation.levels()
    }

    fn transmit_label(&self, label: usize, rng: &mut Stream) -> f64 {
        self.constellation.amplitude(label) + self.noise_std * std_normal(rng)
    }

    fn level_llr(&self, y: f64, level: usize, prefix: usize) -> f64 {
        coset_llr(self.constellation.amplitudes(), self.constellation.levels(), y, level, prefix)
    }
}

/// Passes real symbols through the channel: `y_k = x_k + noise_std·z_k`,
/// with `z_k` drawn from `noise` in order.
pub fn transmit(symbols: &[f64], noise: &mut Stream, noise_std: f64) -> Vec<ChannelSample> {
    symbols
        .iter()
        .map(|&x| ChannelSample { x, y: x + noise_std * std_normal(noise) })
        .collect()
}

/// Per-symbol level LLR for the AWGN channel (see [`LevelChannel::level_llr`]).
pub fn level_llr(y: f64, ctx: &LevelContext, c: &Constellation) -> Result<f64> {
    if ctx.level > c.levels() {
        return invalid(format!("level {} exceeds the {} levels of the constellation", ctx.level, c.levels()));
    }
    Ok(coset_llr(c.amplitudes(), c.levels(), y, ctx.level, ctx.prefix()))
}

pub(crate) fn coset_llr(amps: &[f64], m: usize, y: f64, level: usize, prefix: usize) -> f64 {
    let width = 1usize << (m - level);
    let base = prefix << (m - level + 1);
    let l0 = log_sum_gauss(&amps[base..base + width], y);
    let l1 = log_sum_gauss(&amps[base + width..base + 2 * width], y);
    let llr = l0 - l1;
    if llr.is_nan() {
        // Both cosets at -inf cannot happen for finite y; keep the decoder
        // total anyway.
        return 0.0;
    }
    llr.clamp(-LLR_CLAMP, LLR_CLAMP)
}

/// `ln Σ_a exp(-(y-a)²/2)` with max-subtraction.
fn log_sum_gauss(amps: &[f64], y: f64) -> f64 {
    let mut best = f64::INFINITY;
    for &a in amps {
        let d = (y - a) * (y - a);
        if d < best {
            best = d;
        }
    }
    let mut s = 0.0;
    for &a in amps {
        let d = (y - a) * (y - a);
        s += (-0.5 * (d - best)).exp();
    }
    -0.5 * best + s.ln()
}

/// `½ log2(1 + P)`, in bits per channel use.
pub fn channel_capacity(power: f64) -> Result<f64> {
    if !(power >= 0.0) {
        return invalid(format!("power P = {} must be nonnegative", power));
    }
    Ok(0.5 * (1.0 + power).log2())
}

const QUAD_ORDER: usize = 16;
const QUAD_WIDTH: f64 = 0.25;
const QUAD_TOL: f64 = 1e-9;
const TAIL: f64 = 10.0;

/// Differential entropy in bits of `Y = A + Z`, `A` uniform over `amps`
/// (repetitions allowed), `Z ~ N(0, 1)`.
fn mixture_entropy(rule: &GaussLegendre, amps: &[f64]) -> Result<f64> {
    let lo = amps.iter().copied().fold(f64::INFINITY, f64::min) - TAIL;
    let hi = amps.iter().copied().fold(f64::NEG_INFINITY, f64::max) + TAIL;
    let inv = 1.0 / amps.len() as f64;
    let nats = integrate_refined(rule, lo, hi, QUAD_WIDTH, QUAD_TOL, |y| {
        // ln p(y), computed stably.
        let ln_p = log_sum_gauss(amps, y) + inv.ln() - LN_SQRT_2PI;
        let p = ln_p.exp();
        -p * ln_p
    })
    .ok_or_else(|| Error::NumericFailure("entropy quadrature did not converge".into()))?;
    Ok(nats / std::f64::consts::LN_2)
}

/// `h(N(0,1))` in bits.
fn noise_entropy() -> f64 {
    0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).log2()
}

/// `I(X; Y)` in bits for `X` drawn by a uniform label and `Y = X + Z`.
pub fn mutual_information(c: &Constellation) -> Result<f64> {
    let rule = GaussLegendre::new(QUAD_ORDER);
    let h = mixture_entropy(&rule, c.amplitudes())?;
    Ok((h - noise_entropy()).max(0.0))
}

/// `I(X_i; Y | X_1..X_{i-1})` in bits under uniform labels.
pub fn level_mutual_information(c: &Constellation, level: usize) -> Result<f64> {
    let m = c.levels();
    if level == 0 || level > m {
        return invalid(format!("level {} outside 1..={}", level, m));
    }
    let rule = GaussLegendre::new(QUAD_ORDER);
    let amps = c.amplitudes();
    let width = 1usize << (m - level);
    let prefixes = 1usize << (level - 1);
    let mut total = 0.0;
    for p in 0..prefixes {
        let base = p << (m - level + 1);
        let parent = &amps[base..base + 2 * width];
        let h_parent = mixture_entropy(&rule, parent)?;
        let h0 = mixture_entropy(&rule, &parent[..width])?;
        let h1 = mixture_entropy(&rule, &parent[width..])?;
        total += h_parent - 0.5 * (h0 + h1);
    }
    Ok((total / prefixes as f64).clamp(0.0, 1.0))
}

/// Discrete binary-input channel given by its two output-probability rows.
/// Single level; used as an exactly solvable stand-in for the AWGN MAC.
#[derive(Clone, Debug)]
pub struct DiscreteBmc {
    rows: [Vec<f64>; 2],
}

impl DiscreteBmc {
    pub fn new(row0: Vec<f64>, row1: Vec<f64>) -> Result<Self> {
        if row0.len() != row1.len() || row0.is_empty() {
            return invalid("both rows must have the same nonzero length");
        }
        for row in [&row0, &row1] {
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return invalid("transition probabilities must lie in [0, 1]");
            }
            if (row.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return invalid("each row must sum to 1 within 1e-12");
            }
        }
        Ok(DiscreteBmc { rows: [row0, row1] })
    }

    pub fn bsc(p: f64) -> Result<Self> {
        DiscreteBmc::new(vec![1.0 - p, p], vec![p, 1.0 - p])
    }

    pub fn outputs(&self) -> usize {
        self.rows[0].len()
    }

    pub fn prob(&self, x: u8, y: usize) -> f64 {
        self.rows[x as usize][y]
    }
}

impl LevelChannel for DiscreteBmc {
    type Output = usize;

    fn levels(&self) -> usize {
        1
    }

    fn transmit_label(&self, label: usize, rng: &mut Stream) -> usize {
        let row = &self.rows[label & 1];
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (y, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return y;
            }
        }
        row.len() - 1
    }

    fn level_llr(&self, y: usize, _level: usize, _prefix: usize) -> f64 {
        let llr = self.rows[0][y].ln() - self.rows[1][y].ln();
        if llr.is_nan() {
            return 0.0;
        }
        llr.clamp(-LLR_CLAMP, LLR_CLAMP)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::build_constellation;
    use crate::normal::normal_pdf;
    use crate::rng::{stream, Purpose};

    #[test]
    fn zero_noise_is_identity() {
        let mut s = stream(1, Purpose::Noise, 0, 0);
        let xs = [0.5, -1.0, 3.25];
        let out = transmit(&xs, &mut s, 0.0);
        assert!(out.iter().zip(xs).all(|(c, x)| c.y == x && c.x == x));
    }

    #[test]
    fn noise_moments() {
        let mut s = stream(11, Purpose::Noise, 0, 0);
        let xs = vec![0.7; 1_000_000];
        let out = transmit(&xs, &mut s, 1.0);
        let n = out.len() as f64;
        let mean = out.iter().map(|c| c.y - c.x).sum::<f64>() / n;
        let var = out.iter().map(|c| (c.y - c.x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 4e-3, "{mean}");
        assert!((var - 1.0).abs() < 6e-3, "{var}");
    }

    #[test]
    fn capacity_values() {
        assert_eq!(channel_capacity(1.0).unwrap(), 0.5);
        assert_eq!(channel_capacity(3.0).unwrap(), 1.0);
        assert_eq!(channel_capacity(0.0).unwrap(), 0.0);
        assert!(channel_capacity(-0.1).is_err());
    }

    #[test]
    fn llr_n4_examples() {
        let c = build_constellation(4, 1.0, 0.0).unwrap();
        let ctx = LevelContext::new(1, vec![]).unwrap();
        assert_eq!(level_llr(0.0, &ctx, &c).unwrap(), 0.0);
        // Level 1 separates the sign: bit 1 carries {0, +a}.
        assert_eq!(level_llr(1e6, &ctx, &c).unwrap(), -LLR_CLAMP);
        assert_eq!(level_llr(-1e6, &ctx, &c).unwrap(), LLR_CLAMP);
        for y in [0.3, 1.2, 2.5] {
            let a = level_llr(y, &ctx, &c).unwrap();
            let b = level_llr(-y, &ctx, &c).unwrap();
            assert!((a + b).abs() < 1e-12);
        }
        // Level 2 given level-1 bit 1: coset {0 (label 10), +a (label 11)}.
        let y = 0.34081;
        let ctx2 = LevelContext::new(2, vec![1]).unwrap();
        let amp = c.amplitude(3);
        let direct = (normal_pdf(y, 0.0, 1.0) / normal_pdf(y, amp, 1.0)).ln();
        assert!((level_llr(y, &ctx2, &c).unwrap() - direct).abs() < 1e-13);
    }

    #[test]
    fn context_validation() {
        assert!(LevelContext::new(2, vec![]).is_err());
        assert!(LevelContext::new(0, vec![]).is_err());
        let c = build_constellation(4, 1.0, 0.0).unwrap();
        assert!(level_llr(0.0, &LevelContext::new(3, vec![0, 0]).unwrap(), &c).is_err());
    }

    #[test]
    fn degenerate_constellation_has_zero_information() {
        let c = Constellation::from_amplitudes(vec![0.0; 8], 1.0, 0.0).unwrap();
        assert!(mutual_information(&c).unwrap() < 1e-9);
    }

    #[test]
    fn information_increases_with_power() {
        let mut prev = 0.0;
        for p in [0.5, 1.0, 2.0] {
            let c = build_constellation(64, p, 0.0).unwrap();
            let i = mutual_information(&c).unwrap();
            assert!(i > prev);
            assert!(i <= channel_capacity(p).unwrap());
            prev = i;
        }
    }

    #[test]
    fn level_information_in_unit_interval() {
        let c = build_constellation(16, 1.0, 0.0).unwrap();
        for l in 1..=4 {
            let v = level_mutual_information(&c, l).unwrap();
            assert!((0.0..=1.0).contains(&v));
        }
        assert!(level_mutual_information(&c, 5).is_err());
    }

    #[test]
    fn bsc_llr_and_sampling() {
        let ch = DiscreteBmc::bsc(0.11).unwrap();
        assert!((ch.level_llr(0, 1, 0) - (0.89f64 / 0.11).ln()).abs() < 1e-14);
        let mut s = stream(5, Purpose::Noise, 0, 0);
        let flips = (0..100_000).filter(|_| ch.transmit_label(0, &mut s) == 1).count();
        assert!((flips as f64 / 1e5 - 0.11).abs() < 4.0 * (0.11f64 * 0.89 / 1e5).sqrt());
        assert!(DiscreteBmc::new(vec![0.5, 0.6], vec![0.5, 0.5]).is_err());
    }
}
