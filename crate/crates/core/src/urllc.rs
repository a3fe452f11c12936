//! eMBB + URLLC coexistence: per-trial SIC rates for OMA, NOMA and RSMA.
//!
//! URLLC users transmit at unit power and are always decoded before eMBB.
//! The BS orders them greedily: at each step it decodes the remaining user
//! with the largest frequency-averaged mutual information, treating every
//! other remaining user (and, when sharing frequencies, the eMBB signal at
//! its target SNR) as interference. Ties go to the lower user index.

use alloc::vec::Vec;

use crate::channel::ChannelDraw;
use crate::error::{Error, Result};
use crate::math::Log2Sum;
use crate::trace::{DecodeTrace, StreamId, Tracer};
use crate::{meets_rate, rate_from_sinr};

/// Power fraction `β` of the first stream of a split message.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitConfig {
    beta: f64,
}

impl SplitConfig {
    pub fn new(beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::param("beta", beta, "a power fraction in [0, 1]"));
        }
        Ok(Self { beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct UrllcTrialResult {
    /// Frequency-averaged achieved rate of each user, by user index.
    pub rates: Vec<f64>,
    /// User indices in the order the BS decoded them.
    pub decode_order: Vec<usize>,
    /// eMBB SINR per shared frequency once every URLLC stream is cancelled.
    /// Empty under OMA, where eMBB has its own frequencies.
    pub embb_sinr: Vec<f64>,
    pub trace: DecodeTrace,
}

/// Greedy SIC over the first `freqs` frequencies of `draw` with an extra
/// interference term `g_tar`. Returns the decode order and per-user rates.
fn greedy_sic<T: Tracer>(
    draw: &ChannelDraw,
    freqs: usize,
    g_tar: f64,
    tracer: &mut T,
) -> (Vec<usize>, Vec<f64>) {
    let n = draw.n_urllc;
    let mut rates = alloc::vec![0.0; n];
    let mut order = Vec::with_capacity(n);
    if freqs == 0 {
        order.extend(0..n);
        return (order, rates);
    }
    let scale = freqs as f64;
    let mut remaining: Vec<usize> = (0..n).collect();
    while !remaining.is_empty() {
        let mut best: Option<(usize, f64)> = None;
        for (pos, &u) in remaining.iter().enumerate() {
            let mut sum = Log2Sum::new();
            for f in 0..freqs {
                let others = remaining
                    .iter()
                    .filter(|&&j| j != u)
                    .fold(0.0, |acc, &j| acc + draw.urllc_gain(j, f));
                sum.add(draw.urllc_gain(u, f) / ((1.0 + others) + g_tar));
            }
            let info = sum.value() / scale;
            if best.is_none_or(|(_, b)| info > b) {
                best = Some((pos, info));
            }
        }
        let (pos, info) = best.expect("remaining is non-empty");
        let u = remaining.remove(pos);
        rates[u] = info;
        order.push(u);
    }
    trace_sic(draw, freqs, g_tar, &order, tracer);
    (order, rates)
}

fn trace_sic<T: Tracer>(draw: &ChannelDraw, freqs: usize, g_tar: f64, order: &[usize], tracer: &mut T) {
    if !tracer.enabled() {
        return;
    }
    for f in 0..freqs {
        tracer.reset_cancelled();
        for (k, &u) in order.iter().enumerate() {
            let mut later: Vec<usize> = order[k + 1..].to_vec();
            later.sort_unstable();
            let others = later.iter().fold(0.0, |acc, &j| acc + draw.urllc_gain(j, f));
            let sinr = draw.urllc_gain(u, f) / ((1.0 + others) + g_tar);
            tracer.step(StreamId::Urllc { user: u }, Some(f), sinr, rate_from_sinr(sinr), None, true);
            tracer.cancel(StreamId::Urllc { user: u });
        }
        if g_tar > 0.0 {
            tracer.step(StreamId::Embb, Some(f), g_tar, rate_from_sinr(g_tar), None, true);
        }
    }
}

fn urllc_oma<T: Tracer>(draw: &ChannelDraw, f_u: usize, tracer: &mut T) -> Result<UrllcTrialResult> {
    if f_u > draw.f_total {
        return Err(Error::FrequencyCount {
            requested: f_u,
            available: draw.f_total,
        });
    }
    let (decode_order, rates) = greedy_sic(draw, f_u, 0.0, tracer);
    Ok(UrllcTrialResult {
        rates,
        decode_order,
        embb_sinr: Vec::new(),
        trace: DecodeTrace::default(),
    })
}

/// URLLC rates on `f_u` dedicated frequencies (the first `f_u` of the draw).
/// With `f_u = 0` every rate is zero.
pub fn oma_urllc_rates(draw: &ChannelDraw, f_u: usize) -> Result<UrllcTrialResult> {
    urllc_oma(draw, f_u, &mut ())
}

pub fn oma_urllc_rates_traced(draw: &ChannelDraw, f_u: usize) -> Result<UrllcTrialResult> {
    let mut trace = DecodeTrace::new();
    let mut r = urllc_oma(draw, f_u, &mut trace)?;
    r.trace = trace;
    Ok(r)
}

fn urllc_noma<T: Tracer>(draw: &ChannelDraw, g_tar: f64, tracer: &mut T) -> UrllcTrialResult {
    let (decode_order, rates) = greedy_sic(draw, draw.f_total, g_tar, tracer);
    UrllcTrialResult {
        rates,
        decode_order,
        embb_sinr: alloc::vec![g_tar; draw.f_total],
        trace: DecodeTrace::default(),
    }
}

/// URLLC rates when all `F` frequencies are shared with an always-active
/// eMBB device received at SNR `g_tar`.
pub fn noma_urllc_rates(draw: &ChannelDraw, g_tar: f64) -> UrllcTrialResult {
    urllc_noma(draw, g_tar, &mut ())
}

pub fn noma_urllc_rates_traced(draw: &ChannelDraw, g_tar: f64) -> UrllcTrialResult {
    let mut trace = DecodeTrace::new();
    let mut r = urllc_noma(draw, g_tar, &mut trace);
    r.trace = trace;
    r
}

/// SINRs of the three RSMA URLLC streams on one frequency, in decoding
/// order: first part of the split user, the unsplit user, second part of
/// the split user. `g1` is the split user's gain.
#[inline]
pub fn rsma_stream_sinrs(g1: f64, g2: f64, g_tar: f64, beta: f64) -> [f64; 3] {
    let rest1 = (1.0 - beta) * g1;
    let base = 1.0 + rest1;
    [
        (beta * g1) / ((base + g2) + g_tar),
        g2 / (base + g_tar),
        rest1 / (1.0 + g_tar),
    ]
}

fn urllc_rsma<T: Tracer>(
    draw: &ChannelDraw,
    g_tar: f64,
    split: SplitConfig,
    tracer: &mut T,
) -> Result<UrllcTrialResult> {
    if draw.n_urllc != 2 {
        return Err(Error::UserCount {
            expected: 2,
            found: draw.n_urllc,
        });
    }
    // The split user is the one the greedy rule would decode first.
    let (decode_order, _) = greedy_sic(draw, draw.f_total, g_tar, &mut ());
    let (first, second) = (decode_order[0], decode_order[1]);
    let beta = split.beta();
    let (mut sum1, mut sum2) = (Log2Sum::new(), Log2Sum::new());
    for f in 0..draw.f_total {
        let [s11, s2, s12] = rsma_stream_sinrs(
            draw.urllc_gain(first, f),
            draw.urllc_gain(second, f),
            g_tar,
            beta,
        );
        sum1.add(s11);
        sum1.add(s12);
        sum2.add(s2);
        if tracer.enabled() {
            let (r11, r2, r12) = (rate_from_sinr(s11), rate_from_sinr(s2), rate_from_sinr(s12));
            tracer.reset_cancelled();
            let streams = [
                (StreamId::UrllcPart { user: first, part: 1 }, s11, r11),
                (StreamId::Urllc { user: second }, s2, r2),
                (StreamId::UrllcPart { user: first, part: 2 }, s12, r12),
            ];
            for (id, sinr, rate) in streams {
                tracer.step(id, Some(f), sinr, rate, None, true);
                tracer.cancel(id);
            }
            tracer.step(StreamId::Embb, Some(f), g_tar, rate_from_sinr(g_tar), None, true);
        }
    }
    let scale = draw.f_total as f64;
    let mut rates = alloc::vec![0.0; 2];
    rates[first] = sum1.value() / scale;
    rates[second] = sum2.value() / scale;
    Ok(UrllcTrialResult {
        rates,
        decode_order,
        embb_sinr: alloc::vec![g_tar; draw.f_total],
        trace: DecodeTrace::default(),
    })
}

/// Two URLLC users sharing all frequencies with eMBB; the user ranked first
/// splits its message with power fraction `β` on the first part, and the
/// BS decodes part 1, the other user, then part 2.
pub fn rsma_urllc_rates(draw: &ChannelDraw, g_tar: f64, split: SplitConfig) -> Result<UrllcTrialResult> {
    urllc_rsma(draw, g_tar, split, &mut ())
}

pub fn rsma_urllc_rates_traced(
    draw: &ChannelDraw,
    g_tar: f64,
    split: SplitConfig,
) -> Result<UrllcTrialResult> {
    let mut trace = DecodeTrace::new();
    let mut r = urllc_rsma(draw, g_tar, split, &mut trace)?;
    r.trace = trace;
    Ok(r)
}

/// Per-user outage flags: user `u` is in outage iff its rate is below the
/// common target.
pub fn urllc_outage_indicator(result: &UrllcTrialResult, r_u_target: f64) -> Vec<bool> {
    result.rates.iter().map(|&r| r < r_u_target).collect()
}

/// eMBB outage when sharing frequencies with URLLC.
///
/// Any URLLC user below target leaves interference that cannot be
/// cancelled, so the procedure stops before eMBB. Otherwise eMBB is
/// decoded on each frequency at its post-cancellation SINR, which equals
/// `g_tar` and so carries `r_b_per_freq` whenever the target was derived
/// from that rate.
pub fn embb_noma_outage_indicator(
    result: &UrllcTrialResult,
    g_tar: f64,
    r_b_per_freq: f64,
    r_u_target: f64,
) -> bool {
    if result.rates.iter().any(|&r| r < r_u_target) {
        return true;
    }
    let failed = result
        .embb_sinr
        .iter()
        .any(|&s| !meets_rate(rate_from_sinr(s), r_b_per_freq));
    debug_assert_eq!(
        failed,
        !result.embb_sinr.is_empty() && !meets_rate(rate_from_sinr(g_tar), r_b_per_freq)
    );
    failed
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::db_to_linear;
    use alloc::vec;

    fn two_users(g1: f64, g2: f64) -> ChannelDraw {
        ChannelDraw::from_gains(vec![1.0], &[vec![g1], vec![g2]], vec![]).unwrap()
    }

    #[test]
    fn single_user_single_frequency() {
        let d = ChannelDraw::from_gains(vec![1.0], &[vec![7.0]], vec![]).unwrap();
        let r = oma_urllc_rates(&d, 1).unwrap();
        assert!((r.rates[0] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn oma_hand_trace() {
        let r = oma_urllc_rates(&two_users(125.89, 79.43), 1).unwrap();
        assert_eq!(r.decode_order, vec![0, 1]);
        assert!((r.rates[0] - 1.359_078_053_085_496_7).abs() < 1e-12);
        assert!((r.rates[1] - 6.329_661_814_928_992_7).abs() < 1e-12);
    }

    #[test]
    fn worked_example_noma_and_rsma() {
        let d = two_users(db_to_linear(21.0), db_to_linear(19.0));
        let noma = noma_urllc_rates(&d, 10.0);
        assert!((noma.rates[0] - 1.258_284_421_568_261_3).abs() < 1e-12);
        assert!((noma.rates[1] - 3.039_342_984_134_026).abs() < 1e-12);
        let rsma = rsma_urllc_rates(&d, 10.0, SplitConfig::new(0.8).unwrap()).unwrap();
        assert!((rsma.rates[0] - 2.621_549_421_412_744).abs() < 1e-12);
        assert!((rsma.rates[1] - 1.676_077_984_289_543).abs() < 1e-12);
    }

    #[test]
    fn split_user_follows_ranking_not_index() {
        let d = two_users(db_to_linear(19.0), db_to_linear(21.0));
        let rsma = rsma_urllc_rates(&d, 10.0, SplitConfig::new(0.8).unwrap()).unwrap();
        assert_eq!(rsma.decode_order, vec![1, 0]);
        assert!((rsma.rates[1] - 2.621_549_421_412_744).abs() < 1e-12);
    }

    #[test]
    fn ties_go_to_lower_index() {
        let r = oma_urllc_rates(&two_users(5.0, 5.0), 1).unwrap();
        assert_eq!(r.decode_order, vec![0, 1]);
    }

    #[test]
    fn zero_target_noma_is_oma() {
        let d = ChannelDraw::from_gains(vec![1.0; 3], &[vec![3.0, 0.5, 9.0], vec![1.0, 4.0, 2.0]], vec![])
            .unwrap();
        assert_eq!(noma_urllc_rates(&d, 0.0).rates, oma_urllc_rates(&d, 3).unwrap().rates);
    }

    #[test]
    fn zero_frequencies_give_zero_rates() {
        let r = oma_urllc_rates(&two_users(3.0, 4.0), 0).unwrap();
        assert_eq!(r.rates, vec![0.0, 0.0]);
        assert!(oma_urllc_rates(&two_users(3.0, 4.0), 2).is_err());
    }

    #[test]
    fn rsma_needs_two_users() {
        let d = ChannelDraw::from_gains(vec![1.0], &[vec![7.0]], vec![]).unwrap();
        assert_eq!(
            rsma_urllc_rates(&d, 1.0, SplitConfig::new(0.5).unwrap()),
            Err(Error::UserCount { expected: 2, found: 1 })
        );
        assert!(SplitConfig::new(1.5).is_err());
    }

    #[test]
    fn outage_flags() {
        let r = UrllcTrialResult {
            rates: vec![2.62, 1.68],
            ..Default::default()
        };
        assert_eq!(urllc_outage_indicator(&r, 1.68), vec![false, false]);
        assert_eq!(urllc_outage_indicator(&r, 1.70), vec![false, true]);
        assert_eq!(urllc_outage_indicator(&r, 0.0), vec![false, false]);
    }

    #[test]
    fn embb_outage_follows_urllc() {
        let d = two_users(db_to_linear(21.0), db_to_linear(19.0));
        let g_tar = 10.0;
        let r_b = rate_from_sinr(g_tar);
        let r = noma_urllc_rates(&d, g_tar);
        assert!(!embb_noma_outage_indicator(&r, g_tar, r_b, 1.2));
        assert!(embb_noma_outage_indicator(&r, g_tar, r_b, 1.3));
    }

    #[test]
    fn traced_rsma_streams() {
        let d = two_users(db_to_linear(21.0), db_to_linear(19.0));
        let r = rsma_urllc_rates_traced(&d, 10.0, SplitConfig::new(0.8).unwrap()).unwrap();
        let rates: Vec<f64> = r.trace.steps.iter().take(3).map(|s| s.rate).collect();
        let want = [0.903_920_023_247_282_8, 1.676_077_984_289_543, 1.717_629_398_165_461_5];
        for (a, b) in rates.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(r.trace.steps[2].cancelled.len(), 2);
    }
}
