//! Parallel Monte Carlo driver.
//!
//! Trial `i` of a run always uses the random stream `(seed, i)`, results
//! are collected in trial order and only integer counts are reduced in
//! parallel, so no output depends on the number of workers.

use std::ops::Range;

use rayon::prelude::*;
use slice_sim_core::channel::draw_channels_into;
use slice_sim_core::mmtc::{noma_mmtc_decode, oma_mmtc_decode, rsma_mmtc_decode, DecodeOptions};
use slice_sim_core::urllc::{noma_urllc_rates, oma_urllc_rates, rsma_urllc_rates, SplitConfig};
use slice_sim_core::{
    AverageGains, ChannelDraw, ChannelLayout, Constraint, Error as ModelError, OutageEstimate, Probe,
    TrialSeed,
};

use crate::error::Result;

/// Trials handed to a worker at a time.
const MIN_CHUNK: usize = 2048;

pub struct Engine {
    pool: rayon::ThreadPool,
}

impl Engine {
    /// A pool of `workers` threads; 0 uses every available core.
    pub fn new(workers: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
        Ok(Self { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// `f` over every trial index in `range`, results in index order.
    /// `init` builds per-worker scratch state.
    pub fn map_trials<S, T, I, F>(&self, range: Range<u64>, init: I, f: F) -> Vec<T>
    where
        T: Send,
        I: Fn() -> S + Sync + Send,
        F: Fn(&mut S, u64) -> T + Sync + Send,
    {
        self.pool.install(|| {
            (range.start as usize..range.end as usize)
                .into_par_iter()
                .with_min_len(MIN_CHUNK)
                .map_init(init, |s, i| f(s, i as u64))
                .collect()
        })
    }

    /// Element-wise sum of integer counters over `range`.
    pub fn sum_trials<const K: usize, S, I, F>(&self, range: Range<u64>, init: I, f: F) -> [u64; K]
    where
        I: Fn() -> S + Sync + Send,
        F: Fn(&mut S, u64) -> [u64; K] + Sync + Send,
    {
        self.pool.install(|| {
            (range.start as usize..range.end as usize)
                .into_par_iter()
                .with_min_len(MIN_CHUNK)
                .map_init(init, |s, i| f(s, i as u64))
                .reduce(|| [0; K], |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                    a
                })
        })
    }

    /// Outage estimate of a per-trial failure indicator.
    pub fn estimate_outage<F>(&self, n_trials: u64, fails: F) -> OutageEstimate
    where
        F: Fn(u64) -> bool + Sync + Send,
    {
        let [failures] = self.sum_trials(0..n_trials, || (), |_, i| [u64::from(fails(i))]);
        OutageEstimate::from_counts(failures, n_trials)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UrllcMode {
    /// URLLC alone on its first `f_u` frequencies.
    Oma { f_u: usize },
    Noma { g_tar: f64 },
    Rsma { g_tar: f64, beta: f64 },
}

fn urllc_rates(draw: &ChannelDraw, mode: UrllcMode) -> std::result::Result<Vec<f64>, ModelError> {
    Ok(match mode {
        UrllcMode::Oma { f_u } => oma_urllc_rates(draw, f_u)?.rates,
        UrllcMode::Noma { g_tar } => noma_urllc_rates(draw, g_tar).rates,
        UrllcMode::Rsma { g_tar, beta } => rsma_urllc_rates(draw, g_tar, SplitConfig::new(beta)?)?.rates,
    })
}

/// Per-trial URLLC rates of one setting, computed once and reused by every
/// rate probe. Outage at a target rate is a count of stored rates below it.
pub struct UrllcRateTable<'e> {
    engine: &'e Engine,
    layout: ChannelLayout,
    seed: u64,
    mode: UrllcMode,
    /// Rates in trial order, `n_urllc` per trial.
    rates: Vec<f64>,
    /// Smallest user rate of each trial.
    minima: Vec<f64>,
}

/// Failure counts at one URLLC target rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UrllcCounts {
    pub trials: u64,
    pub user_trials: u64,
    /// User-trials below the target.
    pub user_failures: u64,
    /// Trials in which some user is below the target; each one leaves URLLC
    /// interference that blocks the eMBB decode.
    pub trial_failures: u64,
}

impl<'e> UrllcRateTable<'e> {
    pub fn new(engine: &'e Engine, layout: ChannelLayout, seed: u64, mode: UrllcMode) -> Result<Self> {
        layout.validate()?;
        if let UrllcMode::Rsma { beta, .. } = mode {
            SplitConfig::new(beta)?;
            if layout.n_urllc != 2 {
                return Err(ModelError::UserCount {
                    expected: 2,
                    found: layout.n_urllc,
                }
                .into());
            }
        }
        if let UrllcMode::Oma { f_u } = mode {
            if f_u > layout.f_total {
                return Err(ModelError::FrequencyCount {
                    requested: f_u,
                    available: layout.f_total,
                }
                .into());
            }
        }
        Ok(Self {
            engine,
            layout,
            seed,
            mode,
            rates: Vec::new(),
            minima: Vec::new(),
        })
    }

    pub fn mode(&self) -> UrllcMode {
        self.mode
    }

    fn ensure(&mut self, trials: u64) {
        let have = self.minima.len() as u64;
        if have >= trials {
            return;
        }
        let (layout, seed, mode) = (self.layout, self.seed, self.mode);
        let chunks = self.engine.map_trials(have..trials, ChannelDraw::default, |draw, i| {
            draw_channels_into(&layout, TrialSeed::new(seed, i), draw);
            urllc_rates(draw, mode).expect("mode validated against layout")
        });
        for r in chunks {
            self.minima.push(r.iter().copied().fold(f64::INFINITY, f64::min));
            self.rates.extend(r);
        }
    }

    /// Failures at target rate `r_u` over the first `trials` trials.
    pub fn counts(&mut self, trials: u64, r_u: f64) -> UrllcCounts {
        self.ensure(trials);
        let n_u = self.layout.n_urllc;
        let n = trials as usize;
        let below = |v: &[f64]| v.iter().filter(|&&x| x < r_u).count() as u64;
        UrllcCounts {
            trials,
            user_trials: trials * n_u as u64,
            user_failures: below(&self.rates[..n * n_u]),
            trial_failures: below(&self.minima[..n]),
        }
    }

    /// URLLC outage against `eps_u` and, when eMBB shares the frequencies,
    /// eMBB outage against `eps_b`.
    pub fn probe(&mut self, r_u: f64, trials: u64, eps_u: f64, eps_b: f64) -> Probe {
        let c = self.counts(trials, r_u);
        let mut constraints = vec![Constraint::new(
            OutageEstimate::from_counts(c.user_failures, c.user_trials),
            eps_u,
        )];
        if !matches!(self.mode, UrllcMode::Oma { .. }) {
            constraints.push(Constraint::new(
                OutageEstimate::from_counts(c.trial_failures, c.trials),
                eps_b,
            ));
        }
        Probe::new(constraints)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MmtcMode {
    /// mMTC alone at effective rate `r_eff`.
    Oma { r_eff: f64 },
    Noma { g_tar: f64, r_b: f64 },
    Rsma { g_tar: f64, beta: f64, r_b: f64 },
}

/// Integer totals of one batch of mMTC trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MmtcSums {
    pub trials: u64,
    pub decoded: u64,
    pub decoded_sq: u64,
    pub devices: u64,
    pub embb_failures: u64,
}

impl MmtcSums {
    fn add(&mut self, other: MmtcSums) {
        self.trials += other.trials;
        self.decoded += other.decoded;
        self.decoded_sq += other.decoded_sq;
        self.devices += other.devices;
        self.embb_failures += other.embb_failures;
    }

    pub fn shortfall(&self, lambda: f64) -> OutageEstimate {
        OutageEstimate::from_shortfall(self.decoded, self.decoded_sq, self.devices, self.trials, lambda)
    }

    pub fn embb_outage(&self) -> OutageEstimate {
        OutageEstimate::from_counts(self.embb_failures, self.trials)
    }
}

/// Monte Carlo estimates of the mMTC shortfall (and eMBB outage) for one
/// decoding setting as a function of the arrival rate.
pub struct MmtcEstimator<'e> {
    engine: &'e Engine,
    gains: AverageGains,
    seed: u64,
    r_m: f64,
    mode: MmtcMode,
    opts: DecodeOptions,
    last: Option<(f64, MmtcSums)>,
}

impl<'e> MmtcEstimator<'e> {
    pub fn new(
        engine: &'e Engine,
        gains: AverageGains,
        seed: u64,
        r_m: f64,
        mode: MmtcMode,
        opts: DecodeOptions,
    ) -> Self {
        Self {
            engine,
            gains,
            seed,
            r_m,
            mode,
            opts,
            last: None,
        }
    }

    fn batch(&self, lambda: f64, range: Range<u64>) -> MmtcSums {
        let layout = ChannelLayout {
            gains: self.gains,
            f_total: 1,
            n_urllc: 0,
            lambda_m: Some(lambda),
        };
        let (seed, r_m, mode, opts) = (self.seed, self.r_m, self.mode, self.opts);
        let n = range.end - range.start;
        let [decoded, decoded_sq, devices, embb_failures] =
            self.engine.sum_trials(range, ChannelDraw::default, |draw, i| {
                draw_channels_into(&layout, TrialSeed::new(seed, i), draw);
                let r = match mode {
                    MmtcMode::Oma { r_eff } => oma_mmtc_decode(&draw.g_m, r_eff),
                    MmtcMode::Noma { g_tar, r_b } => noma_mmtc_decode(&draw.g_m, g_tar, r_m, r_b, opts),
                    MmtcMode::Rsma { g_tar, beta, r_b } => {
                        rsma_mmtc_decode(&draw.g_m, g_tar, beta, r_m, r_b, opts)
                    }
                };
                let d = r.decoded as u64;
                [d, d * d, r.devices as u64, u64::from(!r.embb_decoded)]
            });
        MmtcSums {
            trials: n,
            decoded,
            decoded_sq,
            devices,
            embb_failures,
        }
    }

    /// Totals over the first `trials` trials at arrival rate `lambda`.
    /// Escalating at the same `lambda` only simulates the new trials.
    pub fn sums(&mut self, lambda: f64, trials: u64) -> MmtcSums {
        let mut sums = match self.last {
            Some((l, s)) if l == lambda && s.trials <= trials => s,
            _ => MmtcSums::default(),
        };
        if sums.trials < trials {
            sums.add(self.batch(lambda, sums.trials..trials));
        }
        self.last = Some((lambda, sums));
        sums
    }

    pub fn probe(&mut self, lambda: f64, trials: u64, eps_m: f64, eps_b: f64) -> Probe {
        let s = self.sums(lambda, trials);
        let mut constraints = vec![Constraint::new(s.shortfall(lambda), eps_m)];
        if !matches!(self.mode, MmtcMode::Oma { .. }) {
            constraints.push(Constraint::new(s.embb_outage(), eps_b));
        }
        Probe::new(constraints)
    }
}
