//! Multilevel polar encoder and multistage successive-cancellation decoder.
//!
//! Level `i` carries `u_i = (message bits on J_i, frozen bits elsewhere)`,
//! transmitted as `x_i = u_i G_n`. Symbol `k` is the amplitude of the label
//! `(x_{1,k}, ..., x_{m,k})`, with `0⁻` sent as `0`. Frozen bits are i.i.d.
//! uniform and shared with the decoder through a keyed stream. The encoder
//! zeroes any symbol that would push the running energy above `nP`, so every
//! block meets the peak power constraint.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::awgn::{coset_llr, transmit};
use crate::constellation::{Constellation, ConstellationDoc};
use crate::construction::{InfoSets, SelectionRule};
use crate::error::{invalid, Error, Result};
use crate::gf2::transform_in_place;
use crate::rng::{fill_bits, stream, Purpose};
use crate::sc::{hard_decision, ScDecoder};

#[derive(Clone, Debug, PartialEq)]
pub struct CodeSpec {
    pub constellation: Constellation,
    pub info_sets: InfoSets,
    pub master_seed: u64,
    /// Exponent `ν` of the SE threshold `n^{-ν}`.
    pub se_exponent: f64,
    /// Union bound of the selected sets, when known from construction.
    pub union_bound: Option<f64>,
}

impl CodeSpec {
    pub fn new(constellation: Constellation, info_sets: InfoSets, master_seed: u64) -> Result<Self> {
        if info_sets.n != constellation.n() || info_sets.levels() != constellation.levels() {
            return invalid(format!(
                "information sets for n = {}, {} levels do not match constellation with n = {}, {} levels",
                info_sets.n,
                info_sets.levels(),
                constellation.n(),
                constellation.levels()
            ));
        }
        Ok(CodeSpec { constellation, info_sets, master_seed, se_exponent: 4.0, union_bound: None })
    }

    pub fn n(&self) -> usize {
        self.constellation.n()
    }

    pub fn levels(&self) -> usize {
        self.constellation.levels()
    }

    pub fn power(&self) -> f64 {
        self.constellation.power()
    }

    pub fn gamma(&self) -> f64 {
        self.constellation.gamma()
    }

    pub fn rate(&self) -> f64 {
        self.info_sets.rate()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&CodeSpecDoc::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CodeSpecDoc = serde_json::from_str(text)?;
        doc.try_into()
    }

    /// First 16 hex digits of the SHA-256 of the compact JSON form.
    pub fn digest(&self) -> String {
        let compact = serde_json::to_string(&CodeSpecDoc::from(self)).expect("code spec serializes");
        let hash = Sha256::digest(compact.as_bytes());
        hash.iter().take(8).map(|b| format!("{:02x}", b)).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct CodeSpecDoc {
    n: usize,
    m: usize,
    #[serde(rename = "P")]
    power: f64,
    gamma: f64,
    rule: String,
    threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    selection_gamma: Option<f64>,
    se_exponent: f64,
    /// Label-to-amplitude rule; only natural binary (MSB = level 1) exists.
    #[serde(default = "natural_labeling")]
    labeling: String,
    /// Order in which levels are decoded.
    #[serde(default)]
    level_order: Vec<usize>,
    /// 1-based level -> sorted 1-based indices.
    info_sets: BTreeMap<usize, Vec<usize>>,
    master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    union_bound: Option<f64>,
    constellation: ConstellationDoc,
}

const NATURAL_LABELING: &str = "natural-binary";

fn natural_labeling() -> String {
    NATURAL_LABELING.to_string()
}

impl From<&CodeSpec> for CodeSpecDoc {
    fn from(s: &CodeSpec) -> Self {
        CodeSpecDoc {
            n: s.n(),
            m: s.levels(),
            power: s.power(),
            gamma: s.gamma(),
            rule: s.info_sets.rule.tag().to_string(),
            threshold: s.info_sets.threshold,
            selection_gamma: s.info_sets.gamma,
            se_exponent: s.se_exponent,
            labeling: natural_labeling(),
            level_order: (1..=s.levels()).collect(),
            info_sets: s
                .info_sets
                .sets
                .iter()
                .enumerate()
                .map(|(i, set)| (i + 1, set.iter().map(|k| k + 1).collect()))
                .collect(),
            master_seed: s.master_seed,
            union_bound: s.union_bound,
            constellation: ConstellationDoc::from(&s.constellation),
        }
    }
}

impl TryFrom<CodeSpecDoc> for CodeSpec {
    type Error = Error;

    fn try_from(doc: CodeSpecDoc) -> Result<Self> {
        let fmt = |e: Error| Error::Format(e.to_string());
        let constellation = Constellation::try_from(doc.constellation)?;
        if constellation.n() != doc.n || constellation.levels() != doc.m {
            return Err(Error::Format("n/m disagree with the embedded constellation".into()));
        }
        if constellation.power() != doc.power || constellation.gamma() != doc.gamma {
            return Err(Error::Format("P/gamma disagree with the embedded constellation".into()));
        }
        if doc.labeling != NATURAL_LABELING {
            return Err(Error::Format(format!("unsupported labeling '{}', expected '{}'", doc.labeling, NATURAL_LABELING)));
        }
        if !doc.level_order.is_empty() && doc.level_order != (1..=doc.m).collect::<Vec<_>>() {
            return Err(Error::Format(format!("unsupported level order {:?}; levels are decoded as 1..={}", doc.level_order, doc.m)));
        }
        let rule = SelectionRule::from_tag(&doc.rule).ok_or_else(|| Error::Format(format!("unknown rule '{}'", doc.rule)))?;
        let mut sets = vec![Vec::new(); doc.m];
        for (level, idx) in doc.info_sets {
            if level == 0 || level > doc.m {
                return Err(Error::Format(format!("info set for level {} outside 1..={}", level, doc.m)));
            }
            if idx.contains(&0) {
                return Err(Error::Format("information indices are 1-based".into()));
            }
            sets[level - 1] = idx.into_iter().map(|k| k - 1).collect();
        }
        let info = InfoSets::new(doc.n, sets, rule, doc.threshold, doc.selection_gamma).map_err(fmt)?;
        let mut spec = CodeSpec::new(constellation, info, doc.master_seed).map_err(fmt)?;
        spec.se_exponent = doc.se_exponent;
        spec.union_bound = doc.union_bound;
        Ok(spec)
    }
}

/// Per-level frozen-bit words for one trial (values at information
/// positions are ignored).
pub fn frozen_bits(spec: &CodeSpec, seed: u64, trial: u64) -> Vec<Vec<u8>> {
    (0..spec.levels())
        .map(|i| {
            let mut bits = vec![0u8; spec.n()];
            fill_bits(&mut stream(seed, Purpose::Frozen, (i + 1) as u64, trial), &mut bits);
            bits
        })
        .collect()
}

/// Per-level uniform message bits for one trial, `|J_i|` bits on level `i`.
pub fn message_bits(spec: &CodeSpec, seed: u64, trial: u64) -> Vec<Vec<u8>> {
    spec.info_sets
        .sets
        .iter()
        .enumerate()
        .map(|(i, set)| {
            let mut bits = vec![0u8; set.len()];
            fill_bits(&mut stream(seed, Purpose::Message, (i + 1) as u64, trial), &mut bits);
            bits
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Encoded {
    pub u_words: Vec<Vec<u8>>,
    pub x_words: Vec<Vec<u8>>,
    pub labels: Vec<usize>,
    pub intended_symbols: Vec<f64>,
    pub sent_symbols: Vec<f64>,
    pub clamp_positions: Vec<usize>,
}

fn check_words(spec: &CodeSpec, words: &[Vec<u8>], lens: impl Fn(usize) -> usize, what: &str) -> Result<()> {
    if words.len() != spec.levels() {
        return invalid(format!("{} has {} levels, expected {}", what, words.len(), spec.levels()));
    }
    for (i, w) in words.iter().enumerate() {
        if w.len() != lens(i) {
            return invalid(format!("{} on level {} has {} bits, expected {}", what, i + 1, w.len(), lens(i)));
        }
        if w.iter().any(|&b| b > 1) {
            return invalid(format!("{} on level {} contains a non-binary value", what, i + 1));
        }
    }
    Ok(())
}

/// Encodes one block. With `clamp` set, any symbol whose inclusion would make
/// `(1/n) Σ_{ℓ<=k} x_ℓ²` exceed `P` is replaced by 0.
pub fn encode(spec: &CodeSpec, messages: &[Vec<u8>], frozen: &[Vec<u8>], clamp: bool) -> Result<Encoded> {
    let n = spec.n();
    let m = spec.levels();
    check_words(spec, messages, |i| spec.info_sets.sets[i].len(), "message")?;
    check_words(spec, frozen, |_| n, "frozen word")?;
    let mut u_words = Vec::with_capacity(m);
    let mut x_words = Vec::with_capacity(m);
    let mut labels = vec![0usize; n];
    for i in 0..m {
        let mut u = frozen[i].clone();
        for (&k, &b) in spec.info_sets.sets[i].iter().zip(&messages[i]) {
            u[k] = b;
        }
        let mut x = u.clone();
        transform_in_place(&mut x);
        for (l, &b) in labels.iter_mut().zip(&x) {
            *l |= (b as usize) << (m - 1 - i);
        }
        u_words.push(u);
        x_words.push(x);
    }
    let intended: Vec<f64> = labels.iter().map(|&l| spec.constellation.amplitude(l)).collect();
    let (sent, clamp_positions) = if clamp {
        apply_power_clamp(&intended, spec.power())
    } else {
        (intended.clone(), Vec::new())
    };
    Ok(Encoded { u_words, x_words, labels, intended_symbols: intended, sent_symbols: sent, clamp_positions })
}

/// Scans symbols in order and zeroes each one that would lift the running
/// average energy above `power`.
pub fn apply_power_clamp(symbols: &[f64], power: f64) -> (Vec<f64>, Vec<usize>) {
    let n = symbols.len() as f64;
    let mut energy = 0.0;
    let mut sent = Vec::with_capacity(symbols.len());
    let mut clamped = Vec::new();
    for (k, &a) in symbols.iter().enumerate() {
        if (energy + a * a) / n > power {
            sent.push(0.0);
            clamped.push(k);
        } else {
            energy += a * a;
            sent.push(a);
        }
    }
    (sent, clamped)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decoded {
    pub messages: Vec<Vec<u8>>,
    pub x_hat: Vec<Vec<u8>>,
}

/// Multistage SC decoder with reusable buffers.
#[derive(Clone, Debug)]
pub struct Decoder {
    sc: ScDecoder,
    llr: Vec<f64>,
    prefix: Vec<usize>,
    masks: Vec<Vec<bool>>,
}

impl Decoder {
    pub fn new(spec: &CodeSpec) -> Self {
        let n = spec.n();
        Decoder { sc: ScDecoder::new(n), llr: vec![0.0; n], prefix: vec![0; n], masks: spec.info_sets.masks() }
    }

    pub fn decode(&mut self, spec: &CodeSpec, received: &[f64], frozen: &[Vec<u8>]) -> Result<Decoded> {
        let n = spec.n();
        let m = spec.levels();
        if received.len() != n {
            return invalid(format!("received block has {} samples, expected {}", received.len(), n));
        }
        check_words(spec, frozen, |_| n, "frozen word")?;
        let amps = spec.constellation.amplitudes();
        self.prefix.iter_mut().for_each(|p| *p = 0);
        let mut messages = Vec::with_capacity(m);
        let mut x_hat = Vec::with_capacity(m);
        for (i, fz) in frozen.iter().enumerate() {
            for ((l, &y), &p) in self.llr.iter_mut().zip(received).zip(&self.prefix) {
                *l = coset_llr(amps, m, y, i + 1, p);
            }
            let mask = &self.masks[i];
            let mut u_hat = vec![0u8; n];
            let mut cw = vec![0u8; n];
            self.sc.run(&self.llr, &mut cw, |k, l| {
                let b = if mask[k] { hard_decision(l) } else { fz[k] };
                u_hat[k] = b;
                b
            });
            for (p, &b) in self.prefix.iter_mut().zip(&cw) {
                *p = (*p << 1) | b as usize;
            }
            messages.push(spec.info_sets.sets[i].iter().map(|&k| u_hat[k]).collect());
            x_hat.push(cw);
        }
        Ok(Decoded { messages, x_hat })
    }
}

pub fn decode(spec: &CodeSpec, received: &[f64], frozen: &[Vec<u8>]) -> Result<Decoded> {
    Decoder::new(spec).decode(spec, received, frozen)
}

/// Channel and encoder knobs for one trial.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialOptions {
    pub noise_std: f64,
    pub clamp: bool,
}

impl Default for TrialOptions {
    fn default() -> Self {
        TrialOptions { noise_std: 1.0, clamp: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransmissionRecord {
    pub trial: u64,
    pub message_bits: Vec<Vec<u8>>,
    pub u_words: Vec<Vec<u8>>,
    pub x_words: Vec<Vec<u8>>,
    pub intended_symbols: Vec<f64>,
    pub sent_symbols: Vec<f64>,
    pub clamp_positions: Vec<usize>,
    pub received: Vec<f64>,
    pub decoded_message_bits: Vec<Vec<u8>>,
    pub level_errors: Vec<bool>,
    pub block_error: bool,
}

/// Encode, transmit and decode one block; all randomness derives from
/// `(seed, trial)`.
pub fn end_to_end_trial(spec: &CodeSpec, trial: u64, seed: u64) -> Result<TransmissionRecord> {
    end_to_end_trial_with(spec, trial, seed, TrialOptions::default(), &mut Decoder::new(spec))
}

pub fn end_to_end_trial_with(
    spec: &CodeSpec,
    trial: u64,
    seed: u64,
    opts: TrialOptions,
    decoder: &mut Decoder,
) -> Result<TransmissionRecord> {
    let messages = message_bits(spec, seed, trial);
    let frozen = frozen_bits(spec, seed, trial);
    let enc = encode(spec, &messages, &frozen, opts.clamp)?;
    let mut noise = stream(seed, Purpose::Noise, 0, trial);
    let received: Vec<f64> = transmit(&enc.sent_symbols, &mut noise, opts.noise_std).into_iter().map(|s| s.y).collect();
    let dec = decoder.decode(spec, &received, &frozen)?;
    let level_errors: Vec<bool> = messages.iter().zip(&dec.messages).map(|(a, b)| a != b).collect();
    let block_error = level_errors.iter().any(|&e| e);
    Ok(TransmissionRecord {
        trial,
        message_bits: messages,
        u_words: enc.u_words,
        x_words: enc.x_words,
        intended_symbols: enc.intended_symbols,
        sent_symbols: enc.sent_symbols,
        clamp_positions: enc.clamp_positions,
        received,
        decoded_message_bits: dec.messages,
        level_errors,
        block_error,
    })
}
