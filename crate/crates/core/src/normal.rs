//! Normal distribution helpers: cdf, density and quantile.

use crate::error::{invalid, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Standard normal cdf, accurate in both tails.
pub fn std_normal_cdf(t: f64) -> f64 {
    0.5 * libm::erfc(-t / SQRT_2)
}

/// Density of `N(mean, variance)` at `x`.
pub fn normal_pdf(x: f64, mean: f64, variance: f64) -> f64 {
    let d = x - mean;
    (-0.5 * d * d / variance).exp() / (2.0 * std::f64::consts::PI * variance).sqrt()
}

/// Inverse cdf of `N(0, variance)` by bisection on the lower-tail cdf.
///
/// Values above 1/2 are obtained by odd symmetry, so
/// `gaussian_quantile(1 - p) == -gaussian_quantile(p)` up to the rounding of
/// `1 - p` itself.
pub fn gaussian_quantile(p: f64, variance: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return invalid(format!("quantile level {} is outside (0, 1)", p));
    }
    if !(variance > 0.0 && variance.is_finite()) {
        return invalid(format!("variance {} must be positive and finite", variance));
    }
    let sd = variance.sqrt();
    if p == 0.5 {
        return Ok(0.0);
    }
    if p > 0.5 {
        return Ok(-sd * std_quantile_lower(1.0 - p));
    }
    Ok(sd * std_quantile_lower(p))
}

/// Standard normal quantile for `p <= 1/2`, bisected until the bracket
/// cannot shrink further in double precision.
fn std_quantile_lower(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p <= 0.5);
    // cdf(-39) underflows below the smallest positive double.
    let (mut lo, mut hi) = (-39.0_f64, 0.0_f64);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if std_normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Pick whichever endpoint is closer in probability.
    if (std_normal_cdf(lo) - p).abs() <= (std_normal_cdf(hi) - p).abs() {
        lo
    } else {
        hi
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_is_zero() {
        assert_eq!(gaussian_quantile(0.5, 1.0).unwrap(), 0.0);
        assert_eq!(gaussian_quantile(0.5, 7.0).unwrap(), 0.0);
    }

    #[test]
    fn known_values() {
        let q = gaussian_quantile(0.975, 1.0).unwrap();
        assert!((q - 1.959963984540054).abs() < 1e-12, "{q}");
        let q = gaussian_quantile(0.25, 4.0).unwrap();
        assert!((q + 2.0 * 0.6744897501960817).abs() < 1e-12, "{q}");
    }

    #[test]
    fn cdf_round_trip_and_symmetry() {
        for i in 1..1000 {
            let p = i as f64 / 1000.0;
            let t = gaussian_quantile(p, 1.0).unwrap();
            assert!((std_normal_cdf(t) - p).abs() <= 1e-12, "p={p}");
            let s = gaussian_quantile(1.0 - p, 1.0).unwrap();
            assert!((s + t).abs() <= 1e-12, "p={p}");
        }
        let t = gaussian_quantile(1e-300, 1.0).unwrap();
        assert!(t < -37.0);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(gaussian_quantile(0.0, 1.0).is_err());
        assert!(gaussian_quantile(1.0, 1.0).is_err());
        assert!(gaussian_quantile(f64::NAN, 1.0).is_err());
        assert!(gaussian_quantile(0.3, 0.0).is_err());
    }
}
