//! Per-trial physics for uplink network slicing of eMBB, URLLC and mMTC
//! traffic under orthogonal, non-orthogonal and rate-splitting multiple
//! access.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs: channel draws are derived from a
//! `(master_seed, trial_index)` pair, decoders evaluate one draw, and the
//! estimators and searches in [`estimate`] and [`search`] are driven by
//! caller-supplied probe closures. The parallel Monte Carlo driver, config
//! files and CLI live in the `slice-sim` crate.
//!
//! Noise power is normalized to one throughout, so received power and SNR
//! coincide, and all gains are linear. Decibels only appear through
//! [`channel::db_to_linear`].

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod channel;
pub mod embb;
pub mod error;
pub mod estimate;
pub(crate) mod math;
pub mod mmtc;
pub mod search;
pub mod special;
pub mod trace;
pub mod urllc;

pub use channel::{AverageGains, ChannelDraw, ChannelLayout, TrialRng, TrialSeed};
pub use embb::EmbbPolicy;
pub use error::{Error, Result};
pub use estimate::{OutageEstimate, Verdict};
pub use mmtc::{MmtcParams, MmtcTrialResult};
pub use search::{Constraint, GridBest, Probe, SearchResult, SearchSettings};
pub use trace::{DecodeStep, DecodeTrace, StreamId};
pub use urllc::{SplitConfig, UrllcTrialResult};

/// Achievable rate in bits/s/Hz for a given SINR, `log2(1 + sinr)`.
#[inline]
pub fn rate_from_sinr(sinr: f64) -> f64 {
    math::log2_1p(sinr)
}

/// Slack applied when comparing an achieved rate against a decode target.
///
/// Targets are often produced as `log2(1 + g)` from a `g = 2^r - 1` chosen
/// for that very target, which can land an ulp short.
pub const RATE_SLACK: f64 = 1e-12;

/// Whether `rate` is enough to decode a stream transmitted at `target`.
#[inline]
pub fn meets_rate(rate: f64, target: f64) -> bool {
    rate + RATE_SLACK >= target
}
