//! Independent numerical oracles for the information measures and the LLR.

use polar_awgn::awgn::{level_llr, level_mutual_information, mutual_information, LevelContext};
use polar_awgn::constellation::{build_constellation, Constellation};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn gauss(y: f64, a: f64) -> f64 {
    (-(y - a) * (y - a) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Differential entropy in bits of the equal-weight Gaussian mixture, by a
/// plain trapezoid rule on a fine grid.
fn trapezoid_entropy(amps: &[f64]) -> f64 {
    let lo = amps.iter().cloned().fold(f64::INFINITY, f64::min) - 12.0;
    let hi = amps.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 12.0;
    let steps = 200_000;
    let h = (hi - lo) / steps as f64;
    let mut acc = 0.0;
    for s in 0..=steps {
        let y = lo + s as f64 * h;
        let p = amps.iter().map(|&a| gauss(y, a)).sum::<f64>() / amps.len() as f64;
        let w = if s == 0 || s == steps { 0.5 } else { 1.0 };
        if p > 0.0 {
            acc -= w * p * p.log2();
        }
    }
    acc * h
}

fn noise_entropy() -> f64 {
    0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).log2()
}

#[test]
fn two_point_mi_matches_monte_carlo() {
    let c = Constellation::from_amplitudes(vec![-1.0, 1.0], 1.0, 0.0).unwrap();
    let exact = mutual_information(&c).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let trials = 10_000_000u64;
    let (mut sum, mut sumsq) = (0.0, 0.0);
    for t in 0..trials {
        let x = if t % 2 == 0 { 1.0 } else { -1.0 };
        let z: f64 = StandardNormal.sample(&mut rng);
        let y = x + z;
        // log2 p(y|x) / p(y) with p(y) the equal mixture.
        let s = 1.0 - (1.0 + (-2.0 * x * y).exp()).log2();
        sum += s;
        sumsq += s * s;
    }
    let mean = sum / trials as f64;
    let se = ((sumsq / trials as f64 - mean * mean) / trials as f64).sqrt();
    assert!((exact - mean).abs() < 4.0 * se + 1e-6, "quadrature {exact}, Monte Carlo {mean} ± {se}");
}

#[test]
fn mi_matches_trapezoid_rule() {
    for n in [4, 16, 64] {
        let c = build_constellation(n, 1.0, 0.0).unwrap();
        let oracle = trapezoid_entropy(c.amplitudes()) - noise_entropy();
        let got = mutual_information(&c).unwrap();
        assert!((got - oracle).abs() < 1e-7, "n = {n}: {got} vs {oracle}");
    }
}

#[test]
fn level_mi_n4_matches_trapezoid_rule() {
    let c = build_constellation(4, 1.0, 0.0).unwrap();
    let a = c.amplitudes();
    // Level 1: I(X1; Y) = h(Y) - average of h(Y | X1).
    let l1 = trapezoid_entropy(a) - 0.5 * (trapezoid_entropy(&a[..2]) + trapezoid_entropy(&a[2..]));
    // Level 2 given X1: each half splits into two single points.
    let l2 = 0.5 * (trapezoid_entropy(&a[..2]) + trapezoid_entropy(&a[2..])) - noise_entropy();
    assert!((level_mutual_information(&c, 1).unwrap() - l1).abs() < 1e-7);
    assert!((level_mutual_information(&c, 2).unwrap() - l2).abs() < 1e-7);
}

#[test]
fn level2_llr_is_a_two_term_ratio() {
    let c = build_constellation(4, 1.0, 0.0).unwrap();
    let a = c.amplitudes();
    let y = 0.34;
    for prev in [0u8, 1] {
        let base = 2 * prev as usize;
        let direct = (gauss(y, a[base]) / gauss(y, a[base + 1])).ln();
        let got = level_llr(y, &LevelContext::new(2, vec![prev]).unwrap(), &c).unwrap();
        assert!((got - direct).abs() < 1e-12, "prefix {prev}: {got} vs {direct}");
    }
    // Level 1 sums both halves.
    let direct = ((gauss(y, a[0]) + gauss(y, a[1])) / (gauss(y, a[2]) + gauss(y, a[3]))).ln();
    let got = level_llr(y, &LevelContext::new(1, vec![]).unwrap(), &c).unwrap();
    assert!((got - direct).abs() < 1e-12);
}
