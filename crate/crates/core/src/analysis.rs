//! Numeric checks of the constellation bounds and scaling fits.
//!
//! All logarithms are base 2 unless a function name says otherwise.

use std::io::Write;

use crate::awgn::{channel_capacity, mutual_information};
use crate::constellation::{build_constellation, shaping_variance, Constellation};
use crate::construction::{h2_inv, md_exponent};
use crate::error::{invalid, Result};
use crate::fmt_real;
use crate::gf2::log2_exact;
use crate::normal::{gaussian_quantile, normal_pdf};
use crate::quadrature::GaussLegendre;
use crate::BETA;

/// `κ = P² + 4P + (4P / log e)(1 + log sqrt(P / 2π))` with base-2 logs.
pub fn kappa(power: f64) -> f64 {
    let log_e = std::f64::consts::LOG2_E;
    power * power + 4.0 * power + 4.0 * power / log_e * (1.0 + (power / (2.0 * std::f64::consts::PI)).sqrt().log2())
}

/// `κ` rewritten in natural logarithms: `P² + 4P + 4P(ln 2 + ln sqrt(P / 2π))`.
pub fn kappa_nats(power: f64) -> f64 {
    power * power
        + 4.0 * power
        + 4.0 * power * (std::f64::consts::LN_2 + 0.5 * (power / (2.0 * std::f64::consts::PI)).ln())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundCheck {
    /// `∫ s_X(x) (x - g(x))² dx`.
    pub lhs: f64,
    /// `κ log n / n^{2(1-γ)/β}`.
    pub rhs: f64,
    pub holds: bool,
}

/// Reasons `(n, P, γ)` falls outside the range where the quantization bound
/// is claimed; empty when the point qualifies.
pub fn quantization_preconditions(n: usize, power: f64, gamma: f64) -> Vec<String> {
    let mut why = Vec::new();
    if log2_exact(n).is_none() || n < 64 {
        why.push(format!("n = {} must be a power of two >= 64", n));
        return why;
    }
    if !(power > 0.0) || !(0.0..1.0).contains(&gamma) {
        why.push(format!("P = {} must be positive and gamma = {} in [0, 1)", power, gamma));
        return why;
    }
    let a = (1.0 - gamma) / BETA;
    let slack = (n as f64).powf(-a);
    if !(slack > 0.0 && slack <= (1.0 + power) / 2.0) {
        why.push(format!("n^-(1-gamma)/beta = {} not in (0, (1+P)/2]", slack));
    }
    let variance = shaping_variance(n, power, gamma);
    let tail = (n as f64).powf(-(1.0 - a));
    match gaussian_quantile(tail, variance) {
        Ok(q) if q <= -1.0 => {}
        Ok(q) => why.push(format!("quantile of n^-(1-(1-gamma)/beta) is {} > -1", q)),
        Err(e) => why.push(e.to_string()),
    }
    why
}

/// Mean-square quantization error of `g` under the shaping Gaussian versus
/// the closed-form bound.
pub fn quantization_bound_check(n: usize, power: f64, gamma: f64) -> Result<BoundCheck> {
    let why = quantization_preconditions(n, power, gamma);
    if !why.is_empty() {
        return invalid(format!("quantization bound not applicable: {}", why.join("; ")));
    }
    let c = build_constellation(n, power, gamma)?;
    let lhs = quantization_mse(&c);
    let rhs = kappa(power) * (n as f64).log2() / (n as f64).powf(2.0 * (1.0 - gamma) / BETA);
    Ok(BoundCheck { lhs, rhs, holds: lhs <= rhs })
}

/// `∫ s_X(x) (x - g(x))² dx` by Gauss–Legendre quadrature cell by cell.
pub fn quantization_mse(c: &Constellation) -> f64 {
    let var = c.shaping_variance();
    let sd = var.sqrt();
    let rule = GaussLegendre::new(16);
    let mut pos: Vec<f64> = c.amplitudes().iter().copied().filter(|&a| a >= 0.0).collect();
    pos.sort_by(f64::total_cmp);
    pos.dedup();
    // g is odd, so integrate over x >= 0 and double.
    let mut half = 0.0;
    for (j, &lo) in pos.iter().enumerate() {
        let hi = pos.get(j + 1).copied().unwrap_or(lo + 40.0 * sd);
        half += rule.integrate(lo, hi, 0.25 * sd, |x| {
            let d = x - lo;
            normal_pdf(x, 0.0, var) * d * d
        });
    }
    2.0 * half
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingFit {
    pub mu_hat: f64,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least squares of `log2(gap)` on `log2(n)`; `mu_hat = -1/slope`.
pub fn scaling_fit(points: &[(usize, f64)]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return invalid(format!("scaling fit needs at least 3 points, got {}", points.len()));
    }
    if let Some(&(n, g)) = points.iter().find(|p| !(p.1 > 0.0)) {
        return invalid(format!("gap at n = {} is {}, must be positive", n, g));
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).log2()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.log2()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return invalid("scaling fit needs at least two distinct n");
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(ScalingFit { mu_hat: -1.0 / slope, slope, intercept, r2 })
}

/// The `n`-dependent factors of the moderate-deviations trade-off with the
/// unknown constants set to 1: `(log n / n^{(1-γ)/β}, (n log n + e³) 2^{-n^{γ h₂⁻¹(...)}})`.
pub fn md_envelope(n: usize, gamma: f64) -> Result<(f64, f64)> {
    let e = md_exponent(gamma)?;
    let nf = n as f64;
    let gap = nf.log2() / nf.powf((1.0 - gamma) / BETA);
    let err = (nf * nf.log2() + 3.0f64.exp()) * (-nf.powf(e)).exp2();
    Ok((gap, err))
}

/// `log2` of the error term of [`md_envelope`] at `n = 2^log2_n`, usable far
/// beyond the range of `usize`.
pub fn md_error_term_log2(log2_n: f64, gamma: f64) -> Result<f64> {
    let e = md_exponent(gamma)?;
    let n_log_n = log2_n + log2_n.log2();
    // log2(a + b) with a = n log n, b = e³.
    let b = 3.0 * std::f64::consts::LOG2_E;
    let (hi, lo) = if n_log_n > b { (n_log_n, b) } else { (b, n_log_n) };
    Ok(hi + (lo - hi).exp2().ln_1p() / std::f64::consts::LN_2 - (e * log2_n).exp2())
}

/// Re-exported for callers that only need the inverse entropy.
pub fn binary_entropy_inverse(y: f64) -> Result<f64> {
    h2_inv(y)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapPoint {
    pub n: usize,
    pub power: f64,
    pub gamma: f64,
    pub capacity: f64,
    pub mutual_information: f64,
    /// `C(P) - I(p'_X)`.
    pub gap_mi: f64,
    /// Achieved rate, when a simulation was run.
    pub rate: Option<f64>,
    /// `C(P) - rate`.
    pub gap_rate: Option<f64>,
    pub empirical_error: Option<f64>,
    pub bound: Option<BoundCheck>,
}

impl GapPoint {
    pub fn with_rate(mut self, rate: f64, empirical_error: f64) -> Self {
        self.rate = Some(rate);
        self.gap_rate = Some(self.capacity - rate);
        self.empirical_error = Some(empirical_error);
        self
    }
}

pub fn gap_point(n: usize, power: f64, gamma: f64) -> Result<GapPoint> {
    let c = build_constellation(n, power, gamma)?;
    let capacity = channel_capacity(power)?;
    let mi = mutual_information(&c)?;
    let bound = if quantization_preconditions(n, power, gamma).is_empty() {
        Some(quantization_bound_check(n, power, gamma)?)
    } else {
        None
    };
    Ok(GapPoint {
        n,
        power,
        gamma,
        capacity,
        mutual_information: mi,
        gap_mi: capacity - mi,
        rate: None,
        gap_rate: None,
        empirical_error: None,
        bound,
    })
}

pub fn capacity_gap_table(n_list: &[usize], power: f64, gamma: f64) -> Result<Vec<GapPoint>> {
    n_list.iter().map(|&n| gap_point(n, power, gamma)).collect()
}

pub const GAP_CSV_HEADER: &str = "n,P,gamma,capacity,mi,gap_mi,rate,gap_rate,err,bound_lhs,bound_rhs";

pub fn write_gap_csv<W: Write>(mut w: W, points: &[GapPoint]) -> Result<()> {
    let opt = |v: Option<f64>| v.map(fmt_real).unwrap_or_default();
    writeln!(w, "{}", GAP_CSV_HEADER)?;
    for p in points {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            p.n,
            fmt_real(p.power),
            fmt_real(p.gamma),
            fmt_real(p.capacity),
            fmt_real(p.mutual_information),
            fmt_real(p.gap_mi),
            opt(p.rate),
            opt(p.gap_rate),
            opt(p.empirical_error),
            opt(p.bound.map(|b| b.lhs)),
            opt(p.bound.map(|b| b.rhs)),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_bits_and_nats_agree() {
        for p in [0.5, 1.0, 2.0, 4.0, 10.0] {
            assert!((kappa(p) - kappa_nats(p)).abs() < 1e-12, "P = {p}");
        }
        // P = 1: 5 + 4 ln 2 - 2 ln(2π).
        let direct = 5.0 + 4.0 * std::f64::consts::LN_2 - 2.0 * (2.0 * std::f64::consts::PI).ln();
        assert!((kappa(1.0) - direct).abs() < 1e-13);
        assert!((kappa(1.0) - 4.0968).abs() < 1e-4);
    }

    #[test]
    fn bound_holds_at_64_and_lhs_shrinks() {
        let b = quantization_bound_check(64, 1.0, 0.0).unwrap();
        assert!(b.holds, "{b:?}");
        let l128 = quantization_bound_check(128, 1.0, 0.0).unwrap().lhs;
        let l256 = quantization_bound_check(256, 1.0, 0.0).unwrap().lhs;
        assert!(b.lhs > l128 && l128 > l256);
        assert!(quantization_bound_check(32, 1.0, 0.0).is_err());
    }

    #[test]
    fn mse_matches_cellwise_closed_form() {
        // On a cell [a, b) with g = a: ∫ φ(x)(x-a)² = σ²[Φ] + terms; compare
        // with a fine trapezoid rule instead.
        let c = build_constellation(64, 1.0, 0.0).unwrap();
        let var = c.shaping_variance();
        let sd = var.sqrt();
        let h = 1e-4 * sd;
        let mut acc = 0.0;
        let steps = (12.0 * sd / h) as usize;
        for s in 0..=steps {
            let x = s as f64 * h;
            let w = if s == 0 || s == steps { 0.5 } else { 1.0 };
            let d = x - c.quantize(x).unwrap();
            acc += w * normal_pdf(x, 0.0, var) * d * d;
        }
        let trap = 2.0 * acc * h;
        assert!((quantization_mse(&c) - trap).abs() < 1e-7, "{} vs {}", quantization_mse(&c), trap);
    }

    #[test]
    fn synthetic_fits_are_exact() {
        let pts: Vec<(usize, f64)> = (6..13).map(|m| (1usize << m, 0.7 * ((1u64 << m) as f64).powf(-1.0 / BETA))).collect();
        let f = scaling_fit(&pts).unwrap();
        assert!((f.mu_hat - BETA).abs() < 1e-9);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        let pts: Vec<(usize, f64)> = (6..10).map(|m| (1usize << m, 3.0 / ((1u64 << m) as f64).sqrt())).collect();
        assert!((scaling_fit(&pts).unwrap().mu_hat - 2.0).abs() < 1e-9);
        assert!(scaling_fit(&[(64, 0.1), (128, 0.0), (256, 0.05)]).is_err());
        assert!(scaling_fit(&[(64, 0.1), (128, 0.05)]).is_err());
    }

    #[test]
    fn md_envelope_behaviour() {
        let (_, err) = md_envelope(1024, 0.5).unwrap();
        let hinv = h2_inv((0.5 * BETA - 0.5) / (0.5 * BETA)).unwrap();
        let expected = (1024.0 * 10.0 + 3f64.exp()) * (-(1024f64).powf(0.5 * hinv)).exp2();
        assert!((err - expected).abs() < 1e-12 * expected);
        for m in [10, 16, 20] {
            let (_, e) = md_envelope(1 << m, 0.5).unwrap();
            let l = md_error_term_log2(m as f64, 0.5).unwrap();
            assert!((l - e.log2()).abs() < 1e-9, "{l} {}", e.log2());
        }
        // The double exponential only wins for n far beyond 2^20; past its
        // peak the term decreases and reaches 2^-1000 by n = 2^120.
        let logs: Vec<f64> = (40..=120).map(|m| md_error_term_log2(m as f64, 0.5).unwrap()).collect();
        assert!(logs.windows(2).all(|w| w[1] < w[0]));
        assert!(*logs.last().unwrap() < -1000.0);
        // Slower gap decay at larger γ.
        let ratio = |g: f64| md_envelope(1 << 16, g).unwrap().0 / md_envelope(1 << 8, g).unwrap().0;
        assert!(ratio(0.9) > ratio(0.2));
        assert!(md_envelope(1024, 0.1).is_err());
    }

    #[test]
    fn capacity_gaps_positive_and_shrinking() {
        let pts = capacity_gap_table(&[64, 128, 256], 1.0, 0.0).unwrap();
        assert!(pts.iter().all(|p| p.gap_mi > 0.0));
        assert!(pts.windows(2).all(|w| w[1].gap_mi < w[0].gap_mi));
    }
}
