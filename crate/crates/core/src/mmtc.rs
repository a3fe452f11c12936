//! eMBB + mMTC coexistence on one frequency: greedy SIC over mMTC devices
//! in descending gain order, with the eMBB message (or its two split
//! streams under RSMA) decoded when an mMTC device gets stuck.
//!
//! After an eMBB stream is cancelled the BS retries the device that just
//! failed, since its SINR only improved. With retry disabled that device is
//! given up on and stays in the residual interference. A stream that
//! carries no power cancels nothing, so it never causes a device to be
//! skipped.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::trace::{DecodeTrace, StreamId, Tracer};
use crate::embb::target_snr_for_rate;
use crate::{meets_rate, rate_from_sinr, RATE_SLACK};

/// mMTC traffic parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmtcParams {
    /// Fixed per-device rate, bits/s/Hz.
    pub r_m: f64,
    pub lambda_m: f64,
    pub eps_m: f64,
}

impl MmtcParams {
    pub fn new(r_m: f64, lambda_m: f64, eps_m: f64) -> Result<Self> {
        if !(r_m > 0.0) || !r_m.is_finite() {
            return Err(Error::param("r_m", r_m, "a positive rate"));
        }
        if !(lambda_m >= 0.0) || !lambda_m.is_finite() {
            return Err(Error::param("lambda_m", lambda_m, "a non-negative arrival rate"));
        }
        if !(eps_m > 0.0 && eps_m < 1.0) {
            return Err(Error::param("eps_m", eps_m, "a probability in (0, 1)"));
        }
        Ok(Self {
            r_m,
            lambda_m,
            eps_m,
        })
    }
}

/// Decoder behaviour switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecodeOptions {
    pub retry_after_cancellation: bool,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        Self {
            retry_after_cancellation: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MmtcTrialResult {
    /// Active devices in the trial, `n_M`.
    pub devices: usize,
    /// Decoded devices, `D_M`.
    pub decoded: usize,
    /// `D_B`; always true under OMA where eMBB is not on this resource.
    pub embb_decoded: bool,
    /// Instantaneous rates of the eMBB message (NOMA: slot 0 only) or of
    /// its two split streams (RSMA), for the streams that were decoded.
    pub embb_stream_rates: [Option<f64>; 2],
    /// Number of mMTC devices decoded before each eMBB stream (`m₁`, `m₂`).
    pub split_positions: [Option<usize>; 2],
    pub trace: DecodeTrace,
}

impl MmtcTrialResult {
    pub fn d_m(&self) -> usize {
        self.decoded
    }

    pub fn d_b(&self) -> u8 {
        u8::from(self.embb_decoded)
    }
}

/// Gains sorted in decoding order with suffix sums of the not-yet-decoded
/// power; `suffix[k] = Σ_{m ≥ k} g[m]` and `suffix[n] = 0`.
struct Ordered {
    g: Vec<f64>,
    suffix: Vec<f64>,
}

impl Ordered {
    fn new(gains: &[f64]) -> Self {
        let mut g = gains.to_vec();
        g.sort_unstable_by(|a, b| b.total_cmp(a));
        let mut suffix = alloc::vec![0.0; g.len() + 1];
        for k in (0..g.len()).rev() {
            suffix[k] = g[k] + suffix[k + 1];
        }
        Self { g, suffix }
    }

    fn len(&self) -> usize {
        self.g.len()
    }

    /// SINR of device `k` with every later device, the `skipped` devices and
    /// `embb` residual eMBB power as interference.
    #[inline]
    fn device_sinr(&self, k: usize, skipped: f64, embb: f64) -> f64 {
        self.g[k] / (((1.0 + self.suffix[k + 1]) + skipped) + embb)
    }
}

/// Smallest SINR whose rate meets `rate` under the decode slack. Device
/// checks compare SINRs so the hot loop needs no logarithm.
fn sinr_needed(rate: f64) -> f64 {
    target_snr_for_rate(rate - RATE_SLACK)
}

#[inline]
fn device_step<T: Tracer>(tracer: &mut T, k: usize, sinr: f64, target: f64, ok: bool) {
    if tracer.enabled() {
        tracer.step(StreamId::Mmtc { rank: k }, None, sinr, rate_from_sinr(sinr), Some(target), ok);
    }
}

fn decode_oma<T: Tracer>(gains: &[f64], r_m_eff: f64, tracer: &mut T) -> MmtcTrialResult {
    let ord = Ordered::new(gains);
    let need = sinr_needed(r_m_eff);
    let mut decoded = 0;
    for k in 0..ord.len() {
        let sinr = ord.device_sinr(k, 0.0, 0.0);
        let ok = sinr >= need;
        device_step(tracer, k, sinr, r_m_eff, ok);
        if !ok {
            break;
        }
        tracer.cancel(StreamId::Mmtc { rank: k });
        decoded += 1;
    }
    MmtcTrialResult {
        devices: ord.len(),
        decoded,
        embb_decoded: true,
        ..Default::default()
    }
}

/// Greedy SIC with no eMBB on the resource; stops at the first device whose
/// rate falls short of `r_m_eff`.
pub fn oma_mmtc_decode(gains: &[f64], r_m_eff: f64) -> MmtcTrialResult {
    decode_oma(gains, r_m_eff, &mut ())
}

pub fn oma_mmtc_decode_traced(gains: &[f64], r_m_eff: f64) -> MmtcTrialResult {
    let mut trace = DecodeTrace::new();
    let mut r = decode_oma(gains, r_m_eff, &mut trace);
    r.trace = trace;
    r
}

fn decode_noma<T: Tracer>(
    gains: &[f64],
    g_tar: f64,
    r_m: f64,
    r_b: f64,
    opts: DecodeOptions,
    tracer: &mut T,
) -> MmtcTrialResult {
    let ord = Ordered::new(gains);
    let n = ord.len();
    let need = sinr_needed(r_m);
    let mut out = MmtcTrialResult {
        devices: n,
        ..Default::default()
    };
    let mut skipped = 0.0;
    let mut embb_done = false;
    let mut k = 0;
    while k < n {
        let residual = if embb_done { 0.0 } else { g_tar };
        let sinr = ord.device_sinr(k, skipped, residual);
        let ok = sinr >= need;
        device_step(tracer, k, sinr, r_m, ok);
        if ok {
            tracer.cancel(StreamId::Mmtc { rank: k });
            out.decoded += 1;
            k += 1;
            continue;
        }
        if embb_done {
            return out;
        }
        let sinr_b = g_tar / ((1.0 + ord.suffix[k]) + skipped);
        let rate_b = rate_from_sinr(sinr_b);
        let ok_b = meets_rate(rate_b, r_b);
        tracer.step(StreamId::Embb, None, sinr_b, rate_b, Some(r_b), ok_b);
        out.embb_stream_rates[0] = Some(rate_b);
        out.split_positions[0] = Some(out.decoded);
        if !ok_b {
            return out;
        }
        tracer.cancel(StreamId::Embb);
        out.embb_decoded = true;
        embb_done = true;
        if !opts.retry_after_cancellation && g_tar > 0.0 {
            skipped += ord.g[k];
            k += 1;
        }
    }
    if !embb_done {
        // Every device decoded: eMBB last, free of mMTC interference.
        let sinr_b = g_tar / ((1.0 + ord.suffix[n]) + skipped);
        let rate_b = rate_from_sinr(sinr_b);
        let ok_b = meets_rate(rate_b, r_b);
        tracer.step(StreamId::Embb, None, sinr_b, rate_b, Some(r_b), ok_b);
        out.embb_stream_rates[0] = Some(rate_b);
        out.split_positions[0] = Some(out.decoded);
        out.embb_decoded = ok_b;
    }
    out
}

/// NOMA: mMTC devices share the frequency with an always-active eMBB device
/// received at `g_tar`. When a device fails the BS tries eMBB at rate `r_b`;
/// success cancels it and decoding resumes, failure ends the procedure.
pub fn noma_mmtc_decode(gains: &[f64], g_tar: f64, r_m: f64, r_b: f64, opts: DecodeOptions) -> MmtcTrialResult {
    decode_noma(gains, g_tar, r_m, r_b, opts, &mut ())
}

pub fn noma_mmtc_decode_traced(
    gains: &[f64],
    g_tar: f64,
    r_m: f64,
    r_b: f64,
    opts: DecodeOptions,
) -> MmtcTrialResult {
    let mut trace = DecodeTrace::new();
    let mut r = decode_noma(gains, g_tar, r_m, r_b, opts, &mut trace);
    r.trace = trace;
    r
}

/// Rates of the two eMBB streams when decoded back to back with `residual`
/// interference power left on the channel. They always sum to the unsplit
/// rate `log2(1 + g_tar / (1 + residual))`.
pub fn split_stream_rates(g_tar: f64, beta: f64, residual: f64) -> [f64; 2] {
    let rest = (1.0 - beta) * g_tar;
    [
        rate_from_sinr((beta * g_tar) / ((1.0 + rest) + residual)),
        rate_from_sinr(rest / (1.0 + residual)),
    ]
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Stage {
    Neither,
    First,
    Both,
}

fn decode_rsma<T: Tracer>(
    gains: &[f64],
    g_tar: f64,
    beta: f64,
    r_m: f64,
    r_b: f64,
    opts: DecodeOptions,
    tracer: &mut T,
) -> MmtcTrialResult {
    let ord = Ordered::new(gains);
    let n = ord.len();
    let need = sinr_needed(r_m);
    let mut out = MmtcTrialResult {
        devices: n,
        ..Default::default()
    };
    let first_power = beta * g_tar;
    let second_power = (1.0 - beta) * g_tar;
    // Best case for stream 2: decoded with nothing else left on the channel.
    let second_ceiling = rate_from_sinr(second_power);
    let mut skipped = 0.0;
    let mut stage = Stage::Neither;
    let mut r1 = 0.0;
    let mut k = 0;
    while k < n {
        let residual = match stage {
            Stage::Neither => g_tar,
            Stage::First => second_power,
            Stage::Both => 0.0,
        };
        let sinr = ord.device_sinr(k, skipped, residual);
        let ok = sinr >= need;
        device_step(tracer, k, sinr, r_m, ok);
        if ok {
            tracer.cancel(StreamId::Mmtc { rank: k });
            out.decoded += 1;
            k += 1;
            continue;
        }
        match stage {
            Stage::Neither => {
                // Stream 1 always decodes, at whatever rate its SINR allows.
                let s1 = first_power / (((1.0 + second_power) + ord.suffix[k]) + skipped);
                r1 = rate_from_sinr(s1);
                tracer.step(StreamId::EmbbPart { part: 1 }, None, s1, r1, None, true);
                tracer.cancel(StreamId::EmbbPart { part: 1 });
                out.embb_stream_rates[0] = Some(r1);
                out.split_positions[0] = Some(out.decoded);
                stage = Stage::First;
                if !meets_rate(r1 + second_ceiling, r_b) {
                    // eMBB can no longer reach r_b; its interference stays.
                    return out;
                }
                if !opts.retry_after_cancellation && first_power > 0.0 {
                    skipped += ord.g[k];
                    k += 1;
                }
            }
            Stage::First => {
                let s2 = second_power / ((1.0 + ord.suffix[k]) + skipped);
                let r2 = rate_from_sinr(s2);
                let ok_b = meets_rate(r1 + r2, r_b);
                tracer.step(StreamId::EmbbPart { part: 2 }, None, s2, r2, Some(r_b - r1), ok_b);
                out.embb_stream_rates[1] = Some(r2);
                out.split_positions[1] = Some(out.decoded);
                if !ok_b {
                    return out;
                }
                tracer.cancel(StreamId::EmbbPart { part: 2 });
                out.embb_decoded = true;
                stage = Stage::Both;
                if !opts.retry_after_cancellation && second_power > 0.0 {
                    skipped += ord.g[k];
                    k += 1;
                }
            }
            Stage::Both => return out,
        }
    }
    // Devices exhausted: remaining streams decode free of mMTC interference.
    if stage == Stage::Neither {
        let s1 = first_power / (((1.0 + second_power) + ord.suffix[n]) + skipped);
        r1 = rate_from_sinr(s1);
        tracer.step(StreamId::EmbbPart { part: 1 }, None, s1, r1, None, true);
        tracer.cancel(StreamId::EmbbPart { part: 1 });
        out.embb_stream_rates[0] = Some(r1);
        out.split_positions[0] = Some(out.decoded);
        stage = Stage::First;
    }
    if stage == Stage::First {
        let s2 = second_power / ((1.0 + ord.suffix[n]) + skipped);
        let r2 = rate_from_sinr(s2);
        let ok_b = meets_rate(r1 + r2, r_b);
        tracer.step(StreamId::EmbbPart { part: 2 }, None, s2, r2, Some(r_b - r1), ok_b);
        out.embb_stream_rates[1] = Some(r2);
        out.split_positions[1] = Some(out.decoded);
        out.embb_decoded = ok_b;
    }
    out
}

/// RSMA: the eMBB message is split into streams with power `β·g_tar` and
/// `(1-β)·g_tar`. Stream 1 is decoded at the first stuck device, stream 2
/// at the next one; eMBB succeeds iff the two stream rates add up to `r_b`.
/// If after stream 1 even an interference-free stream 2 could not make up
/// the difference, the procedure stops there.
pub fn rsma_mmtc_decode(
    gains: &[f64],
    g_tar: f64,
    beta: f64,
    r_m: f64,
    r_b: f64,
    opts: DecodeOptions,
) -> MmtcTrialResult {
    decode_rsma(gains, g_tar, beta, r_m, r_b, opts, &mut ())
}

pub fn rsma_mmtc_decode_traced(
    gains: &[f64],
    g_tar: f64,
    beta: f64,
    r_m: f64,
    r_b: f64,
    opts: DecodeOptions,
) -> MmtcTrialResult {
    let mut trace = DecodeTrace::new();
    let mut r = decode_rsma(gains, g_tar, beta, r_m, r_b, opts, &mut trace);
    r.trace = trace;
    r
}

/// `1 - E[D_M]/λ_M` over a batch of trials, clamped to `[0, 1]`; zero when
/// no devices are expected.
pub fn mmtc_error_probability(trials: &[MmtcTrialResult], lambda_m: f64) -> f64 {
    if lambda_m <= 0.0 {
        return 0.0;
    }
    if trials.is_empty() {
        return 1.0;
    }
    let total: usize = trials.iter().map(|t| t.decoded).sum();
    let mean = total as f64 / trials.len() as f64;
    (1.0 - mean / lambda_m).clamp(0.0, 1.0)
}
