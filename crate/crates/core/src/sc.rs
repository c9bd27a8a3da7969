//! Successive-cancellation kernel for `x = u G_n` in natural index order.
//!
//! With `G_{2h} = [[G_h, 0], [G_h, G_h]]` a codeword splits as
//! `x = ((u_a + u_b) G_h, u_b G_h)`, so `u_a` is decoded from the check-node
//! combination of the two halves and `u_b` from their variable-node
//! combination once `u_a G_h` is known. Bits are visited in the order
//! `u_1, u_2, ..., u_n`; the caller decides each bit through a leaf callback,
//! which lets the same kernel serve both the genie-aided estimator and the
//! real decoder.

/// Exact check-node LLR combination, `2 atanh(tanh(a/2) tanh(b/2))`, in a
/// form that neither overflows nor cancels catastrophically.
#[inline]
pub fn boxplus(a: f64, b: f64) -> f64 {
    let sign = if (a < 0.0) != (b < 0.0) { -1.0 } else { 1.0 };
    sign * a.abs().min(b.abs()) + (-(a + b).abs()).exp().ln_1p() - (-(a - b).abs()).exp().ln_1p()
}

/// `2 sqrt(p0 p1)` for the posterior with log-ratio `llr`; equals
/// `1 / cosh(llr / 2)`.
#[inline]
pub fn bhattacharyya_sample(llr: f64) -> f64 {
    let t = (-0.5 * llr.abs()).exp();
    2.0 * t / (1.0 + t * t)
}

/// MAP decision on `ln p0 - ln p1`; a tie decides 0.
#[inline]
pub fn hard_decision(llr: f64) -> u8 {
    if llr >= 0.0 || llr.is_nan() {
        0
    } else {
        1
    }
}

/// Reusable SC decoder workspace for one block length.
#[derive(Clone, Debug)]
pub struct ScDecoder {
    n: usize,
    layers: Vec<Vec<f64>>,
}

impl ScDecoder {
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two());
        let m = n.trailing_zeros() as usize;
        let layers = (0..=m).map(|d| vec![0.0; n >> d]).collect();
        ScDecoder { n, layers }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Runs SC over `channel_llr` (LLRs of `x_1..x_n`). For every `k` in
    /// order, `leaf(k, llr_k)` receives the bit-channel LLR of `u_k` given the
    /// channel output and the bits already returned, and returns the value to
    /// commit for `u_k`. On return `codeword` holds `u G_n` for the committed
    /// bits.
    pub fn run<F: FnMut(usize, f64) -> u8>(&mut self, channel_llr: &[f64], codeword: &mut [u8], mut leaf: F) {
        assert_eq!(channel_llr.len(), self.n);
        assert_eq!(codeword.len(), self.n);
        self.layers[0].copy_from_slice(channel_llr);
        recurse(&mut self.layers, 0, 0, codeword, &mut leaf);
    }
}

fn recurse<F: FnMut(usize, f64) -> u8>(layers: &mut [Vec<f64>], depth: usize, offset: usize, out: &mut [u8], leaf: &mut F) {
    let len = out.len();
    if len == 1 {
        out[0] = leaf(offset, layers[depth][0]);
        return;
    }
    let half = len / 2;
    {
        let (upper, lower) = layers.split_at_mut(depth + 1);
        let cur = &upper[depth];
        let next = &mut lower[0];
        for j in 0..half {
            next[j] = boxplus(cur[j], cur[j + half]);
        }
    }
    recurse(layers, depth + 1, offset, &mut out[..half], leaf);
    {
        let (upper, lower) = layers.split_at_mut(depth + 1);
        let cur = &upper[depth];
        let next = &mut lower[0];
        for j in 0..half {
            let a = cur[j];
            next[j] = cur[j + half] + if out[j] == 0 { a } else { -a };
        }
    }
    recurse(layers, depth + 1, offset + half, &mut out[half..], leaf);
    let (left, right) = out.split_at_mut(half);
    for (l, r) in left.iter_mut().zip(right.iter()) {
        *l ^= *r;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::transform_in_place;

    #[test]
    fn boxplus_matches_tanh_rule() {
        for &(a, b) in &[(1.0, 2.0), (-0.5, 3.0), (4.0, -4.0), (0.0, 7.0), (-2.5, -1.5)] {
            let exact = 2.0 * ((a / 2.0f64).tanh() * (b / 2.0f64).tanh()).atanh();
            assert!((boxplus(a, b) - exact).abs() < 1e-12, "{a} {b}");
        }
        assert!((boxplus(60.0, 60.0) - (60.0 - std::f64::consts::LN_2)).abs() < 1e-12);
        assert!(boxplus(500.0, -800.0).is_finite());
    }

    #[test]
    fn bhattacharyya_sample_values() {
        assert_eq!(bhattacharyya_sample(0.0), 1.0);
        assert!((bhattacharyya_sample(2.0) - 1.0 / 1.0f64.cosh()).abs() < 1e-15);
        assert!(bhattacharyya_sample(-2.0) == bhattacharyya_sample(2.0));
        assert!(bhattacharyya_sample(1e4) == 0.0);
    }

    #[test]
    fn ties_decide_zero() {
        assert_eq!(hard_decision(0.0), 0);
        assert_eq!(hard_decision(-0.0), 0);
        assert_eq!(hard_decision(-1e-300), 1);
    }

    #[test]
    fn noiseless_sc_recovers_u() {
        let n = 64;
        let u: Vec<u8> = (0..n).map(|k| ((k * 7 + 3) % 5 % 2) as u8).collect();
        let mut x = u.clone();
        transform_in_place(&mut x);
        let llr: Vec<f64> = x.iter().map(|&b| if b == 0 { 20.0 } else { -20.0 }).collect();
        let mut dec = ScDecoder::new(n);
        let mut cw = vec![0u8; n];
        let mut seen = Vec::new();
        dec.run(&llr, &mut cw, |k, l| {
            seen.push(k);
            hard_decision(l)
        });
        assert_eq!(seen, (0..n).collect::<Vec<_>>());
        assert_eq!(cw, x);
    }

    #[test]
    fn genie_codeword_is_transform_of_committed_bits() {
        let n = 16;
        let u: Vec<u8> = (0..n).map(|k| (k % 3 == 0) as u8).collect();
        let llr: Vec<f64> = (0..n).map(|k| (k as f64 - 7.5) * 0.3).collect();
        let mut dec = ScDecoder::new(n);
        let mut cw = vec![0u8; n];
        dec.run(&llr, &mut cw, |k, _| u[k]);
        let mut x = u.clone();
        transform_in_place(&mut x);
        assert_eq!(cw, x);
    }
}
