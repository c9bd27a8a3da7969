//! Bit-channel reliabilities and information-set selection.
//!
//! The reliability of bit-channel `(i, k)` is its conditional Bhattacharyya
//! parameter `Z(U_{i,k} | U_i^{k-1}, X_{[i-1]}^n, Y^n)`. It is estimated by
//! genie-aided SC: every trial draws uniform `u` on all levels, transmits,
//! then decodes each level with the true past bits and true lower-level
//! inputs fed back. Each bit-channel visit yields one sample
//! `2 sqrt(p0 p1) ∈ [0, 1]` whose mean is `Z`.

use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::awgn::{AwgnMac, DiscreteBmc, LevelChannel};
use crate::constellation::Constellation;
use crate::error::{invalid, Error, Result};
use crate::fmt_real;
use crate::gf2::{log2_exact, transform_in_place};
use crate::rng::{fill_bits, stream, Purpose};
use crate::sc::{bhattacharyya_sample, hard_decision, ScDecoder};
use crate::BETA;

/// Trials per reduction chunk. Partial sums are formed per chunk and folded
/// in chunk order, so the result does not depend on the worker count.
const CHUNK: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reliability {
    pub z_mean: f64,
    pub z_stderr: f64,
    pub samples: u64,
    pub genie_errors: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReliabilityTable {
    n: usize,
    m: usize,
    /// Level-major: entry `(level - 1) * n + (k - 1)`.
    entries: Vec<Reliability>,
}

impl ReliabilityTable {
    pub fn from_entries(n: usize, m: usize, entries: Vec<Reliability>) -> Result<Self> {
        if entries.len() != n * m {
            return invalid(format!("expected {} entries, got {}", n * m, entries.len()));
        }
        if entries.iter().any(|e| !(0.0..=1.0).contains(&e.z_mean) || !(e.z_stderr >= 0.0)) {
            return invalid("z_mean must lie in [0, 1] and z_stderr must be nonnegative");
        }
        Ok(ReliabilityTable { n, m, entries })
    }

    /// A table with every entry set to `z` (one sample each).
    pub fn uniform(n: usize, m: usize, z: f64) -> Result<Self> {
        let e = Reliability { z_mean: z, z_stderr: 0.0, samples: 1, genie_errors: 0 };
        ReliabilityTable::from_entries(n, m, vec![e; n * m])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn levels(&self) -> usize {
        self.m
    }

    /// Entry for 1-based `level` and 1-based index `k`.
    pub fn get(&self, level: usize, k: usize) -> &Reliability {
        &self.entries[(level - 1) * self.n + (k - 1)]
    }

    pub fn entries(&self) -> &[Reliability] {
        &self.entries
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "level,k,z_mean,z_stderr,samples,genie_errors")?;
        for (idx, e) in self.entries.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                idx / self.n + 1,
                idx % self.n + 1,
                fmt_real(e.z_mean),
                fmt_real(e.z_stderr),
                e.samples,
                e.genie_errors
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty reliability table".into()))??;
        if header.trim() != "level,k,z_mean,z_stderr,samples,genie_errors" {
            return Err(Error::Format(format!("unexpected reliability table header '{}'", header.trim())));
        }
        let mut rows = Vec::new();
        for (no, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.trim().split(',').collect();
            let bad = || Error::Format(format!("line {}: malformed row '{}'", no + 2, line.trim()));
            if f.len() != 6 {
                return Err(bad());
            }
            let level: usize = f[0].parse().map_err(|_| bad())?;
            let k: usize = f[1].parse().map_err(|_| bad())?;
            let e = Reliability {
                z_mean: f[2].parse().map_err(|_| bad())?,
                z_stderr: f[3].parse().map_err(|_| bad())?,
                samples: f[4].parse().map_err(|_| bad())?,
                genie_errors: f[5].parse().map_err(|_| bad())?,
            };
            rows.push((level, k, e));
        }
        let m = rows.iter().map(|r| r.0).max().unwrap_or(0);
        let n = rows.iter().map(|r| r.1).max().unwrap_or(0);
        if m == 0 || log2_exact(n).is_none() || rows.len() != n * m {
            return Err(Error::Format(format!("table has {} rows for n = {}, m = {}", rows.len(), n, m)));
        }
        let mut entries = vec![None; n * m];
        for (level, k, e) in rows {
            if level == 0 || k == 0 {
                return Err(Error::Format("level and k are 1-based".into()));
            }
            let slot = &mut entries[(level - 1) * n + (k - 1)];
            if slot.is_some() {
                return Err(Error::Format(format!("duplicate row for level {}, k {}", level, k)));
            }
            *slot = Some(e);
        }
        let entries = entries.into_iter().collect::<Option<Vec<_>>>().ok_or_else(|| Error::Format("missing rows".into()))?;
        ReliabilityTable::from_entries(n, m, entries).map_err(|e| Error::Format(e.to_string()))
    }
}

struct Partial {
    sum: Vec<f64>,
    sumsq: Vec<f64>,
    errors: Vec<u64>,
}

impl Partial {
    fn zeros(len: usize) -> Self {
        Partial { sum: vec![0.0; len], sumsq: vec![0.0; len], errors: vec![0; len] }
    }

    fn absorb(&mut self, other: &Partial) {
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sumsq.iter_mut().zip(&other.sumsq) {
            *a += b;
        }
        for (a, b) in self.errors.iter_mut().zip(&other.errors) {
            *a += b;
        }
    }
}

/// Runs `f` on a pool of `workers` threads, or on the global pool when
/// `workers` is `None`.
pub(crate) fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::NumericFailure(format!("thread pool: {}", e)))?;
            Ok(pool.install(f))
        }
    }
}

/// Genie-aided Monte-Carlo estimate of all `m·n` conditional Bhattacharyya
/// parameters of `channel` at block length `n`.
pub fn estimate_reliability_with<C: LevelChannel>(
    channel: &C,
    n: usize,
    trials: u64,
    seed: u64,
    workers: Option<usize>,
) -> Result<ReliabilityTable> {
    if log2_exact(n).is_none() {
        return invalid(format!("block length n = {} is not a power of two", n));
    }
    if trials == 0 {
        return invalid("at least one trial is required");
    }
    let m = channel.levels();
    let len = n * m;
    let chunks = (trials as usize).div_ceil(CHUNK);
    let batch = 64;
    let mut total = Partial::zeros(len);
    with_workers(workers, || {
        for start in (0..chunks).step_by(batch) {
            let end = (start + batch).min(chunks);
            let partials: Vec<Partial> = (start..end)
                .into_par_iter()
                .map_init(
                    || GenieWorkspace::new(n, m),
                    |ws, c| {
                        let mut p = Partial::zeros(len);
                        let lo = (c * CHUNK) as u64;
                        let hi = ((c + 1) * CHUNK).min(trials as usize) as u64;
                        for t in lo..hi {
                            ws.trial(channel, seed, t, &mut p);
                        }
                        p
                    },
                )
                .collect();
            for p in &partials {
                total.absorb(p);
            }
        }
    })?;
    let tf = trials as f64;
    let entries = (0..len)
        .map(|j| {
            let mean = total.sum[j] / tf;
            let stderr = if trials > 1 {
                let var = ((total.sumsq[j] - total.sum[j] * mean) / (tf - 1.0)).max(0.0);
                (var / tf).sqrt()
            } else {
                0.0
            };
            if !mean.is_finite() {
                return Err(Error::NumericFailure(format!("non-finite Bhattacharyya estimate at entry {}", j)));
            }
            Ok(Reliability { z_mean: mean.clamp(0.0, 1.0), z_stderr: stderr, samples: trials, genie_errors: total.errors[j] })
        })
        .collect::<Result<Vec<_>>>()?;
    ReliabilityTable::from_entries(n, m, entries)
}

/// [`estimate_reliability_with`] for the AWGN channel driven through `c`,
/// block length `c.n()`.
pub fn estimate_reliability(c: &Constellation, trials: u64, seed: u64) -> Result<ReliabilityTable> {
    estimate_reliability_with(&AwgnMac::new(c.clone()), c.n(), trials, seed, None)
}

struct GenieWorkspace<O> {
    n: usize,
    m: usize,
    u: Vec<Vec<u8>>,
    labels: Vec<usize>,
    y: Vec<O>,
    llr: Vec<f64>,
    cw: Vec<u8>,
    dec: ScDecoder,
}

impl<O: Copy + Default> GenieWorkspace<O> {
    fn new(n: usize, m: usize) -> Self {
        GenieWorkspace {
            n,
            m,
            u: vec![vec![0; n]; m],
            labels: vec![0; n],
            y: vec![O::default(); n],
            llr: vec![0.0; n],
            cw: vec![0; n],
            dec: ScDecoder::new(n),
        }
    }

    fn trial<C: LevelChannel<Output = O>>(&mut self, channel: &C, seed: u64, t: u64, acc: &mut Partial) {
        let (n, m) = (self.n, self.m);
        self.labels.iter_mut().for_each(|l| *l = 0);
        for i in 0..m {
            let mut s = stream(seed, Purpose::ConstructionBits, (i + 1) as u64, t);
            fill_bits(&mut s, &mut self.u[i]);
            self.cw.copy_from_slice(&self.u[i]);
            transform_in_place(&mut self.cw);
            for (l, &b) in self.labels.iter_mut().zip(&self.cw) {
                *l |= (b as usize) << (m - 1 - i);
            }
        }
        let mut noise = stream(seed, Purpose::ConstructionNoise, 0, t);
        for (y, &l) in self.y.iter_mut().zip(&self.labels) {
            *y = channel.transmit_label(l, &mut noise);
        }
        for i in 0..m {
            let level = i + 1;
            let shift = m - i;
            for k in 0..n {
                self.llr[k] = channel.level_llr(self.y[k], level, self.labels[k] >> shift);
            }
            let u = &self.u[i];
            let base = i * n;
            self.dec.run(&self.llr, &mut self.cw, |k, l| {
                let z = bhattacharyya_sample(l);
                acc.sum[base + k] += z;
                acc.sumsq[base + k] += z * z;
                if hard_decision(l) != u[k] {
                    acc.errors[base + k] += 1;
                }
                u[k]
            });
        }
    }
}

/// Largest enumeration (inputs × output sequences) accepted by
/// [`exact_reliability_bmc`].
pub const EXACT_ENUMERATION_LIMIT: usize = 1 << 24;

/// Exact `Z(U_k | U^{k-1}, Y^n)` for `k = 1..n` under uniform inputs, by
/// enumerating every `u^n` and every `y^n`.
pub fn exact_reliability_bmc(channel: &DiscreteBmc, n: usize) -> Result<Vec<f64>> {
    if log2_exact(n).is_none() || n > 8 {
        return invalid(format!("exact enumeration needs n a power of two <= 8, got {}", n));
    }
    let q = channel.outputs();
    let outputs = (q as f64).powi(n as i32);
    let size = outputs * (1u64 << n) as f64;
    if size > EXACT_ENUMERATION_LIMIT as f64 {
        return invalid(format!(
            "enumeration of {} (input, output) pairs exceeds the limit of {}",
            size, EXACT_ENUMERATION_LIMIT
        ));
    }
    let ys = outputs as usize;
    let inputs = 1usize << n;
    let prior = 1.0 / inputs as f64;
    // joint[u * ys + y] = p(u^n, y^n); bit j of the index (MSB first) is u_{j+1}.
    let mut joint = vec![0.0; inputs * ys];
    let mut x = vec![0u8; n];
    let mut digits = vec![0usize; n];
    for u in 0..inputs {
        for (j, b) in x.iter_mut().enumerate() {
            *b = ((u >> (n - 1 - j)) & 1) as u8;
        }
        transform_in_place(&mut x);
        for y in 0..ys {
            let mut rest = y;
            for d in digits.iter_mut() {
                *d = rest % q;
                rest /= q;
            }
            let p: f64 = x.iter().zip(&digits).map(|(&xb, &yd)| channel.prob(xb, yd)).product();
            joint[u * ys + y] = prior * p;
        }
    }
    let mut out = Vec::with_capacity(n);
    for k in 1..=n {
        // marg[(prefix of length k) * ys + y]
        let prefixes = 1usize << k;
        let mut marg = vec![0.0; prefixes * ys];
        for u in 0..inputs {
            let pre = u >> (n - k);
            for y in 0..ys {
                marg[pre * ys + y] += joint[u * ys + y];
            }
        }
        let mut z = 0.0;
        for past in 0..(prefixes / 2) {
            let p0 = &marg[(2 * past) * ys..(2 * past + 1) * ys];
            let p1 = &marg[(2 * past + 1) * ys..(2 * past + 2) * ys];
            z += p0.iter().zip(p1).map(|(a, b)| (a * b).sqrt()).sum::<f64>();
        }
        out.push((2.0 * z).min(1.0));
    }
    Ok(out)
}

/// Binary entropy in bits.
pub fn h2(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// Inverse of the binary entropy function on `[0, 1/2]`.
pub fn h2_inv(y: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&y) {
        return invalid(format!("h2_inv argument {} is outside [0, 1]", y));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    if y == 1.0 {
        return Ok(0.5);
    }
    let (mut lo, mut hi) = (0.0_f64, 0.5_f64);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h2(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if (h2(lo) - y).abs() <= (h2(hi) - y).abs() { lo } else { hi })
}

/// Lower end of the admissible moderate-deviations range, `1/(1+β)`.
pub fn md_gamma_min() -> f64 {
    1.0 / (1.0 + BETA)
}

/// `γ h₂⁻¹((γβ + γ - 1)/(γβ))`, the exponent of `n` in the MD threshold.
pub fn md_exponent(gamma: f64) -> Result<f64> {
    if !(gamma > md_gamma_min() && gamma < 1.0) {
        return invalid(format!("gamma = {} must lie in (1/(1+beta), 1) = ({:.5}, 1)", gamma, md_gamma_min()));
    }
    let arg = (gamma * BETA + gamma - 1.0) / (gamma * BETA);
    Ok(gamma * h2_inv(arg)?)
}

/// `2^{-n^{γ h₂⁻¹((γβ+γ-1)/(γβ))}}`.
pub fn md_threshold(n: usize, gamma: f64) -> Result<f64> {
    Ok((-(n as f64).powf(md_exponent(gamma)?)).exp2())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SelectionRule {
    /// `Z <= n^{-ν}`.
    ScalingExponent,
    /// `Z <= 2^{-n^{γ h₂⁻¹(...)}}`.
    ModerateDeviations,
    /// A fixed number of most reliable bit-channels.
    RateTargeted,
}

impl SelectionRule {
    pub fn tag(&self) -> &'static str {
        match self {
            SelectionRule::ScalingExponent => "SE",
            SelectionRule::ModerateDeviations => "MD",
            SelectionRule::RateTargeted => "rate-targeted",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "SE" => Some(SelectionRule::ScalingExponent),
            "MD" => Some(SelectionRule::ModerateDeviations),
            "rate-targeted" => Some(SelectionRule::RateTargeted),
            _ => None,
        }
    }
}

/// Information sets for all levels. Indices are 0-based internally; files
/// use 1-based indices.
#[derive(Clone, Debug, PartialEq)]
pub struct InfoSets {
    pub n: usize,
    /// `sets[i]` holds the sorted information indices of level `i + 1`.
    pub sets: Vec<Vec<usize>>,
    pub rule: SelectionRule,
    /// Bhattacharyya threshold for SE/MD, union-bound target for calibrated
    /// rate-targeted selection.
    pub threshold: Option<f64>,
    pub gamma: Option<f64>,
}

impl InfoSets {
    pub fn new(n: usize, sets: Vec<Vec<usize>>, rule: SelectionRule, threshold: Option<f64>, gamma: Option<f64>) -> Result<Self> {
        for s in &sets {
            if s.windows(2).any(|w| w[0] >= w[1]) || s.iter().any(|&k| k >= n) {
                return invalid("information indices must be strictly increasing and below n");
            }
        }
        Ok(InfoSets { n, sets, rule, threshold, gamma })
    }

    pub fn levels(&self) -> usize {
        self.sets.len()
    }

    pub fn total(&self) -> usize {
        self.sets.iter().map(Vec::len).sum()
    }

    /// `Σ|J_i| / n`, bits per channel use.
    pub fn rate(&self) -> f64 {
        self.total() as f64 / self.n as f64
    }

    /// Per-level membership masks.
    pub fn masks(&self) -> Vec<Vec<bool>> {
        self.sets
            .iter()
            .map(|s| {
                let mut mask = vec![false; self.n];
                for &k in s {
                    mask[k] = true;
                }
                mask
            })
            .collect()
    }
}

fn select_by_threshold(table: &ReliabilityTable, threshold: f64) -> Vec<Vec<usize>> {
    (1..=table.m)
        .map(|i| (1..=table.n).filter(|&k| table.get(i, k).z_mean <= threshold).map(|k| k - 1).collect())
        .collect()
}

/// `J_i = {k : Z_{i,k} <= n^{-exponent}}`; the usual exponent is 4.
pub fn select_info_sets_se(table: &ReliabilityTable, exponent: f64) -> InfoSets {
    let threshold = (table.n as f64).powf(-exponent);
    InfoSets {
        n: table.n,
        sets: select_by_threshold(table, threshold),
        rule: SelectionRule::ScalingExponent,
        threshold: Some(threshold),
        gamma: None,
    }
}

pub fn select_info_sets_md(table: &ReliabilityTable, gamma: f64) -> Result<InfoSets> {
    let threshold = md_threshold(table.n, gamma)?;
    Ok(InfoSets {
        n: table.n,
        sets: select_by_threshold(table, threshold),
        rule: SelectionRule::ModerateDeviations,
        threshold: Some(threshold),
        gamma: Some(gamma),
    })
}

/// All `(level, k)` pairs (0-based) by increasing `z_mean`, ties by level
/// then index.
fn reliability_order(table: &ReliabilityTable) -> Vec<(usize, usize)> {
    let mut order: Vec<(usize, usize)> = (0..table.m).flat_map(|i| (0..table.n).map(move |k| (i, k))).collect();
    order.sort_by(|a, b| {
        let za = table.entries[a.0 * table.n + a.1].z_mean;
        let zb = table.entries[b.0 * table.n + b.1].z_mean;
        za.total_cmp(&zb).then(a.cmp(b))
    });
    order
}

fn sets_from_pairs(table: &ReliabilityTable, pairs: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut sets = vec![Vec::new(); table.m];
    for &(i, k) in pairs {
        sets[i].push(k);
    }
    sets.iter_mut().for_each(|s| s.sort_unstable());
    sets
}

/// The `⌊target_rate · n⌋` most reliable bit-channels across all levels.
pub fn select_info_sets_rate(table: &ReliabilityTable, target_rate: f64) -> Result<InfoSets> {
    if !(0.0..=table.m as f64).contains(&target_rate) {
        return invalid(format!("target rate {} outside [0, {}]", target_rate, table.m));
    }
    let count = ((target_rate * table.n as f64).floor() as usize).min(table.n * table.m);
    let order = reliability_order(table);
    Ok(InfoSets {
        n: table.n,
        sets: sets_from_pairs(table, &order[..count]),
        rule: SelectionRule::RateTargeted,
        threshold: None,
        gamma: None,
    })
}

/// The largest rate-targeted set whose union bound does not exceed
/// `max_union_bound`.
pub fn select_info_sets_calibrated(table: &ReliabilityTable, max_union_bound: f64) -> Result<InfoSets> {
    if !(max_union_bound >= 0.0) {
        return invalid(format!("union-bound target {} must be nonnegative", max_union_bound));
    }
    let order = reliability_order(table);
    let mut acc = 0.0;
    let mut count = 0;
    for &(i, k) in &order {
        let z = table.entries[i * table.n + k].z_mean;
        if acc + z > max_union_bound {
            break;
        }
        acc += z;
        count += 1;
    }
    Ok(InfoSets {
        n: table.n,
        sets: sets_from_pairs(table, &order[..count]),
        rule: SelectionRule::RateTargeted,
        threshold: Some(max_union_bound),
        gamma: None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnionBound {
    /// `Σ_i Σ_{k∈J_i} z_mean(i, k)`.
    pub value: f64,
    /// The same sum with `3·z_stderr` added to every term.
    pub conservative: f64,
}

pub fn union_bound(table: &ReliabilityTable, sets: &InfoSets) -> Result<UnionBound> {
    if sets.n != table.n || sets.levels() != table.m {
        return invalid("information sets do not match the reliability table");
    }
    let mut value = 0.0;
    let mut conservative = 0.0;
    for (i, s) in sets.sets.iter().enumerate() {
        for &k in s {
            let e = &table.entries[i * table.n + k];
            value += e.z_mean;
            conservative += e.z_mean + 3.0 * e.z_stderr;
        }
    }
    Ok(UnionBound { value, conservative })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_oracle_trivial_channels() {
        let perfect = DiscreteBmc::new(vec![1.0, 0.0], vec![0.0, 1.0]).unwrap();
        assert!(exact_reliability_bmc(&perfect, 8).unwrap().iter().all(|&z| z == 0.0));
        let useless = DiscreteBmc::new(vec![0.3, 0.7], vec![0.3, 0.7]).unwrap();
        assert!(exact_reliability_bmc(&useless, 4).unwrap().iter().all(|&z| (z - 1.0).abs() < 1e-12));
    }

    #[test]
    fn exact_oracle_bsc_closed_forms() {
        let p: f64 = 0.11;
        let ch = DiscreteBmc::bsc(p).unwrap();
        let z1 = exact_reliability_bmc(&ch, 1).unwrap();
        assert!((z1[0] - 2.0 * (p * (1.0 - p)).sqrt()).abs() < 1e-14);
        // Minus channel of a BSC(p) is a BSC(2p(1-p)); plus channel squares Z.
        let z2 = exact_reliability_bmc(&ch, 2).unwrap();
        let q = 2.0 * p * (1.0 - p);
        assert!((z2[0] - 2.0 * (q * (1.0 - q)).sqrt()).abs() < 1e-14);
        assert!((z2[1] - 4.0 * p * (1.0 - p)).abs() < 1e-14);
        assert!((z2[1] - 0.3916).abs() < 1e-12);
    }

    #[test]
    fn exact_oracle_rejects_large_instances() {
        let ch = DiscreteBmc::new(vec![0.25; 4], vec![0.25; 4]).unwrap();
        assert!(exact_reliability_bmc(&ch, 16).is_err());
        let wide = DiscreteBmc::new(vec![1.0 / 16.0; 16], vec![1.0 / 16.0; 16]).unwrap();
        let err = exact_reliability_bmc(&wide, 8).unwrap_err().to_string();
        assert!(err.contains("limit"), "{err}");
    }

    #[test]
    fn h2_inv_values() {
        assert_eq!(h2_inv(1.0).unwrap(), 0.5);
        assert_eq!(h2_inv(0.0).unwrap(), 0.0);
        let x = h2_inv(0.5).unwrap();
        assert!((x - 0.110028).abs() < 1e-6);
        assert!((h2(x) - 0.5).abs() < 1e-12);
        assert!(h2_inv(1.5).is_err());
        assert!(h2_inv(-0.1).is_err());
    }

    #[test]
    fn md_threshold_values() {
        let arg = (0.5 * BETA + 0.5 - 1.0) / (0.5 * BETA);
        assert!((arg - 0.787866).abs() < 1e-6);
        let hinv = h2_inv(arg).unwrap();
        // Independent bisection in Python: 0.23572936047924356.
        assert!((hinv - 0.23572936047924356).abs() < 1e-10, "{hinv}");
        let t = md_threshold(1024, 0.5).unwrap();
        let expected = (-(1024f64).powf(0.5 * hinv)).exp2();
        assert_eq!(t, expected);
        assert!((t - 0.20824538718755148).abs() < 1e-9, "{t}");
        assert!(md_threshold(1024, 0.17).is_err());
        assert!(md_threshold(1024, 1.0).is_err());
        // Near the lower end the exponent vanishes and the threshold tends to 1/2.
        let t = md_threshold(1 << 20, md_gamma_min() + 1e-9).unwrap();
        assert!((t - 0.5).abs() < 1e-3, "{t}");
    }

    #[test]
    fn threshold_rules_on_constant_tables() {
        let ones = ReliabilityTable::uniform(256, 3, 1.0).unwrap();
        assert_eq!(select_info_sets_se(&ones, 4.0).total(), 0);
        let zeros = ReliabilityTable::uniform(256, 3, 0.0).unwrap();
        let s = select_info_sets_se(&zeros, 4.0);
        assert_eq!(s.rate(), 3.0);
        assert!((s.threshold.unwrap() - 2.3283064365386963e-10).abs() < 1e-24);
        assert_eq!(union_bound(&zeros, &s).unwrap().value, 0.0);
    }

    #[test]
    fn rate_rule_extremes_and_ties() {
        let t = ReliabilityTable::uniform(8, 2, 0.5).unwrap();
        assert_eq!(select_info_sets_rate(&t, 0.0).unwrap().total(), 0);
        assert_eq!(select_info_sets_rate(&t, 2.0).unwrap().total(), 16);
        // All tied: the first ⌊0.5·8⌋ = 4 pairs in (level, index) order.
        let s = select_info_sets_rate(&t, 0.5).unwrap();
        assert_eq!(s.sets, vec![vec![0, 1, 2, 3], vec![]]);
        assert!(select_info_sets_rate(&t, 2.5).is_err());
        let empty = InfoSets::new(8, vec![vec![], vec![]], SelectionRule::RateTargeted, None, None).unwrap();
        assert_eq!(union_bound(&t, &empty).unwrap().value, 0.0);
    }

    #[test]
    fn calibrated_rule_respects_target() {
        let entries: Vec<Reliability> = (0..16)
            .map(|j| Reliability { z_mean: 1e-4 * (j + 1) as f64, z_stderr: 0.0, samples: 1, genie_errors: 0 })
            .collect();
        let t = ReliabilityTable::from_entries(8, 2, entries).unwrap();
        let s = select_info_sets_calibrated(&t, 1e-3).unwrap();
        // 1+2+3+4 = 10 (x1e-4) fits exactly; adding 5 would exceed.
        assert_eq!(s.total(), 4);
        assert!(union_bound(&t, &s).unwrap().value <= 1e-3);
    }

    #[test]
    fn csv_round_trip() {
        let entries: Vec<Reliability> = (0..8)
            .map(|j| Reliability { z_mean: 1.0 / (j as f64 + 3.0), z_stderr: 1e-3 / (j as f64 + 1.0), samples: 10, genie_errors: j })
            .collect();
        let t = ReliabilityTable::from_entries(4, 2, entries).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = ReliabilityTable::read_csv(&buf[..]).unwrap();
        assert_eq!(back, t);
        assert!(ReliabilityTable::read_csv(&b"level,k\n1,1\n"[..]).is_err());
    }

    #[test]
    fn noiseless_distinct_constellation_gives_tiny_z() {
        // Well separated amplitudes, zero noise: every channel LLR saturates
        // at the clamp, leaving only clamp leakage in the estimate.
        let amps: Vec<f64> = (0..8).map(|l| 100.0 * (l as f64 - 3.5)).collect();
        let c = Constellation::from_amplitudes(amps, 1.0, 0.0).unwrap();
        let ch = AwgnMac::with_noise_std(c, 0.0);
        let t = estimate_reliability_with(&ch, 16, 50, 3, None).unwrap();
        assert!(t.entries().iter().all(|e| e.z_mean <= 1e-12), "{:?}", t.entries().iter().map(|e| e.z_mean).fold(0.0, f64::max));
        assert!(t.entries().iter().all(|e| e.genie_errors == 0));
    }

    #[test]
    fn estimates_are_bounded_and_deterministic() {
        let c = crate::constellation::build_constellation(4, 1.0, 0.0).unwrap();
        let a = estimate_reliability_with(&AwgnMac::new(c.clone()), 4, 2000, 9, Some(1)).unwrap();
        let b = estimate_reliability_with(&AwgnMac::new(c), 4, 2000, 9, Some(3)).unwrap();
        assert_eq!(a, b);
        assert!(a.entries().iter().all(|e| (0.0..=1.0).contains(&e.z_mean) && e.samples == 2000));
    }
}
