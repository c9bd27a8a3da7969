//! Multilevel polar codes for the unit-variance AWGN channel.
//!
//! The input alphabet is an `n`-point set of Gaussian quantiles with a
//! duplicated origin, so that uniform `m`-bit labels induce a shaped real
//! input distribution. Each label bit is carried by one level of a
//! binary-input MAC; every level is protected by a length-`n` polar code
//! and the receiver decodes the levels in order with successive
//! cancellation, conditioning each level on the decisions of the previous
//! ones.
//!
//! Module map:
//!
//! * [`gf2`]: the polarization transform `x = u G_n`.
//! * [`constellation`]: alphabet construction, labeling, quantizer.
//! * [`awgn`]: channel, per-level likelihoods, mutual information.
//! * [`construction`]: Monte-Carlo Bhattacharyya estimation and info-set rules.
//! * [`codec`]: encoder with 0-power-outage clamp and multistage SC decoder.
//! * [`analysis`]: bound checks and scaling fits.
//! * [`harness`]: reproducible simulations, sweeps and report files.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod awgn;
pub mod cli;
pub mod codec;
pub mod constellation;
pub mod construction;
mod error;
pub mod gf2;
pub mod harness;
pub mod normal;
pub mod quadrature;
pub mod rng;
pub mod sc;
mod svg;

pub use error::{Error, Result};

/// Polarization-speed exponent used throughout (`β = 4.714`).
pub const BETA: f64 = 4.714;

/// Formats a real with 17 significant digits, the precision used by every
/// CSV writer in this crate.
pub fn fmt_real(x: f64) -> String {
    format!("{:.16e}", x)
}
