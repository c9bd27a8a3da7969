//! The `n`-point Gaussian-quantile alphabet with two origins.
//!
//! For `n = 2^m` the distinct real points are `Φ⁻¹(ℓ/n)`, `ℓ = 1..n-1`, of the
//! `N(0, P(1 - n^{-(1-γ)/β}))` cdf; `ℓ = n/2` gives the origin `0`. A second
//! origin `0⁻` completes the set to `n` labels, so uniform labels put mass
//! `2/n` on the real value zero.
//!
//! Labeling: label value `ℓ` (natural binary, most significant bit on level 1)
//! carries `Φ⁻¹(ℓ/n)` for `ℓ >= 1` and label `0` carries `0⁻`. Amplitudes are
//! therefore nondecreasing in label value apart from label 0.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gf2::log2_exact;
use crate::normal::gaussian_quantile;
use crate::BETA;

#[derive(Clone, Debug, PartialEq)]
pub struct Constellation {
    n: usize,
    m: u32,
    power: f64,
    gamma: f64,
    shaping_variance: f64,
    /// Amplitude indexed by label value.
    amplitudes: Vec<f64>,
    negative_origin: Option<usize>,
    /// Sorted nonnegative distinct amplitudes, used by the quantizer.
    nonneg: Vec<f64>,
    /// Sorted nonpositive distinct amplitudes, descending.
    nonpos: Vec<f64>,
}

/// One labeled point of a constellation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub label: usize,
    pub amplitude: f64,
    pub is_negative_origin: bool,
}

/// `P(1 - n^{-(1-γ)/β})`, the variance of the Gaussian being quantized.
pub fn shaping_variance(n: usize, power: f64, gamma: f64) -> f64 {
    power * (1.0 - (n as f64).powf(-(1.0 - gamma) / BETA))
}

pub fn build_constellation(n: usize, power: f64, gamma: f64) -> Result<Constellation> {
    let m = match log2_exact(n) {
        Some(m) if n >= 4 => m,
        _ => return invalid(format!("constellation size n = {} must be a power of two and at least 4", n)),
    };
    if !(power > 0.0 && power.is_finite()) {
        return invalid(format!("power P = {} must be positive and finite", power));
    }
    if !(0.0..1.0).contains(&gamma) {
        return invalid(format!("gamma = {} must lie in [0, 1)", gamma));
    }
    let variance = shaping_variance(n, power, gamma);
    let mut amplitudes = vec![0.0; n];
    // Lower half by bisection, upper half mirrored so the set is exactly
    // symmetric about zero.
    for l in 1..n / 2 {
        let q = gaussian_quantile(l as f64 / n as f64, variance)?;
        amplitudes[l] = q;
        amplitudes[n - l] = -q;
    }
    amplitudes[n / 2] = 0.0;
    amplitudes[0] = 0.0;
    Ok(Constellation::assemble(n, m, power, gamma, variance, amplitudes, Some(0)))
}

impl Constellation {
    fn assemble(
        n: usize,
        m: u32,
        power: f64,
        gamma: f64,
        shaping_variance: f64,
        amplitudes: Vec<f64>,
        negative_origin: Option<usize>,
    ) -> Self {
        let mut distinct: Vec<f64> = amplitudes.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        let nonneg: Vec<f64> = distinct.iter().copied().filter(|&a| a >= 0.0).collect();
        let mut nonpos: Vec<f64> = distinct.iter().copied().filter(|&a| a <= 0.0).collect();
        nonpos.reverse();
        Constellation { n, m, power, gamma, shaping_variance, amplitudes, negative_origin, nonneg, nonpos }
    }

    /// An arbitrary labeled point set, mainly for test channels. `amplitudes`
    /// is indexed by label value and its length must be a power of two
    /// (`n = 2` allowed). Power and gamma are recorded but not checked.
    pub fn from_amplitudes(amplitudes: Vec<f64>, power: f64, gamma: f64) -> Result<Self> {
        let n = amplitudes.len();
        let m = match log2_exact(n) {
            Some(m) if n >= 2 => m,
            _ => return invalid(format!("custom constellation size {} must be a power of two >= 2", n)),
        };
        if amplitudes.iter().any(|a| !a.is_finite()) {
            return invalid("custom constellation amplitudes must be finite");
        }
        let variance = amplitudes.iter().map(|a| a * a).sum::<f64>() / n as f64;
        Ok(Constellation::assemble(n, m, power, gamma, variance, amplitudes, None))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of binary levels, `log2 n`.
    pub fn levels(&self) -> usize {
        self.m as usize
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn shaping_variance(&self) -> f64 {
        self.shaping_variance
    }

    pub fn beta(&self) -> f64 {
        BETA
    }

    /// Amplitudes indexed by label value.
    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, label: usize) -> f64 {
        self.amplitudes[label]
    }

    pub fn negative_origin(&self) -> Option<usize> {
        self.negative_origin
    }

    pub fn points(&self) -> Vec<Point> {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(label, &amplitude)| Point {
                label,
                amplitude,
                is_negative_origin: self.negative_origin == Some(label),
            })
            .collect()
    }

    /// Bit of `label` carried by `level` (1-based; level 1 is the MSB).
    pub fn label_bit(&self, label: usize, level: usize) -> u8 {
        ((label >> (self.levels() - level)) & 1) as u8
    }

    /// Label whose bits, level 1 first, are `bits`.
    pub fn label_of(&self, bits: &[u8]) -> usize {
        debug_assert_eq!(bits.len(), self.levels());
        bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    /// Label bits as a string, level 1 first.
    pub fn label_string(&self, label: usize) -> String {
        (1..=self.levels()).map(|l| if self.label_bit(label, l) == 1 { '1' } else { '0' }).collect()
    }

    /// `(1/n) Σ a²` over the distinct real amplitudes (the second origin
    /// contributes nothing).
    pub fn alphabet_power(&self) -> f64 {
        let mut distinct = self.amplitudes.clone();
        if let Some(o) = self.negative_origin {
            distinct[o] = 0.0;
        }
        distinct.iter().map(|a| a * a).sum::<f64>() / self.n as f64
    }

    /// `E[X²]` under uniform labels.
    pub fn mean_energy(&self) -> f64 {
        self.amplitudes.iter().map(|a| a * a).sum::<f64>() / self.n as f64
    }

    /// The quantizer `g`: the constellation point closest to `x` among those
    /// on the same side of zero with magnitude at most `|x|`. Inputs beyond
    /// the outermost points map to the outermost points.
    pub fn quantize(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return invalid(format!("cannot quantize non-finite value {}", x));
        }
        let pick = if x >= 0.0 {
            let idx = self.nonneg.partition_point(|&a| a <= x);
            idx.checked_sub(1).map(|i| self.nonneg[i])
        } else {
            let idx = self.nonpos.partition_point(|&a| a >= x);
            idx.checked_sub(1).map(|i| self.nonpos[i])
        };
        pick.ok_or_else(|| {
            Error::InvalidArgument(format!("no constellation point between 0 and {} (constellation lacks an origin)", x))
        })
    }

    /// The real input distribution induced by uniform labels: sorted
    /// `(amplitude, probability)` pairs over distinct amplitudes.
    pub fn symbol_prior(&self) -> Vec<(f64, f64)> {
        let mut amps = self.amplitudes.clone();
        amps.sort_by(f64::total_cmp);
        let mut out: Vec<(f64, f64)> = Vec::new();
        let w = 1.0 / self.n as f64;
        for a in amps {
            match out.last_mut() {
                Some((prev, p)) if *prev == a => *p += w,
                _ => out.push((a, w)),
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ConstellationDoc::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ConstellationDoc = serde_json::from_str(text)?;
        doc.try_into()
    }
}

/// Outage bound `e³·exp(-n^{1/2-(1-γ)/β})` on the probability that an
/// i.i.d. block exceeds the power budget.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutageBound {
    pub value: f64,
    /// Set when the exponent `1/2 - (1-γ)/β` is not positive; `value` is then
    /// capped at 1 and carries no information.
    pub trivial: bool,
}

pub fn outage_probability_bound(n: usize, gamma: f64) -> Result<OutageBound> {
    if log2_exact(n).is_none() {
        return invalid(format!("n = {} is not a power of two", n));
    }
    if !(0.0..1.0).contains(&gamma) {
        return invalid(format!("gamma = {} must lie in [0, 1)", gamma));
    }
    let exponent = 0.5 - (1.0 - gamma) / BETA;
    let value = (3.0 - (n as f64).powf(exponent)).exp();
    if exponent <= 0.0 {
        return Ok(OutageBound { value: value.min(1.0), trivial: true });
    }
    Ok(OutageBound { value, trivial: false })
}

#[derive(Serialize, Deserialize)]
pub(crate) struct PointDoc {
    label_bits: String,
    amplitude: f64,
    negative_origin: bool,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct ConstellationDoc {
    n: usize,
    m: u32,
    #[serde(rename = "P")]
    power: f64,
    gamma: f64,
    shaping_variance: f64,
    points: Vec<PointDoc>,
}

impl From<&Constellation> for ConstellationDoc {
    fn from(c: &Constellation) -> Self {
        ConstellationDoc {
            n: c.n,
            m: c.m,
            power: c.power,
            gamma: c.gamma,
            shaping_variance: c.shaping_variance,
            points: c
                .points()
                .into_iter()
                .map(|p| PointDoc {
                    label_bits: c.label_string(p.label),
                    amplitude: p.amplitude,
                    negative_origin: p.is_negative_origin,
                })
                .collect(),
        }
    }
}

impl TryFrom<ConstellationDoc> for Constellation {
    type Error = Error;

    fn try_from(doc: ConstellationDoc) -> Result<Self> {
        if doc.points.len() != doc.n {
            return Err(Error::Format(format!("constellation lists {} points, expected n = {}", doc.points.len(), doc.n)));
        }
        let mut amplitudes = vec![f64::NAN; doc.n];
        let mut negative_origin = None;
        for p in &doc.points {
            if p.label_bits.len() != doc.m as usize || !p.label_bits.chars().all(|c| c == '0' || c == '1') {
                return Err(Error::Format(format!("bad label '{}'", p.label_bits)));
            }
            let label = usize::from_str_radix(&p.label_bits, 2).map_err(|e| Error::Format(e.to_string()))?;
            if !amplitudes[label].is_nan() {
                return Err(Error::Format(format!("label '{}' appears twice", p.label_bits)));
            }
            amplitudes[label] = p.amplitude;
            if p.negative_origin {
                negative_origin = Some(label);
            }
        }
        let rebuilt = build_constellation(doc.n, doc.power, doc.gamma);
        match rebuilt {
            Ok(c) if negative_origin == Some(0) => {
                let close = c.amplitudes.iter().zip(&amplitudes).all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + a.abs()));
                if !close {
                    return Err(Error::Format("constellation amplitudes do not match (n, P, gamma)".into()));
                }
                Ok(c)
            }
            _ => {
                let mut c = Constellation::from_amplitudes(amplitudes, doc.power, doc.gamma)
                    .map_err(|e| Error::Format(e.to_string()))?;
                c.negative_origin = negative_origin;
                Ok(c)
            }
        }
    }
}
