//! Rayleigh fading gains, Poisson arrivals and per-trial random streams.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::math::{exp, lgamma, log, sqrt};

/// `10^(db/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}

/// Average channel power gains of the three services, linear scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AverageGains {
    pub gamma_b: f64,
    pub gamma_u: f64,
    pub gamma_m: f64,
}

impl AverageGains {
    pub fn new(gamma_b: f64, gamma_u: f64, gamma_m: f64) -> Result<Self> {
        for (name, v) in [("gamma_b", gamma_b), ("gamma_u", gamma_u), ("gamma_m", gamma_m)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(name, v, "a finite positive linear gain"));
            }
        }
        Ok(Self {
            gamma_b,
            gamma_u,
            gamma_m,
        })
    }

    pub fn from_db(gamma_b_db: f64, gamma_u_db: f64, gamma_m_db: f64) -> Result<Self> {
        Self::new(
            db_to_linear(gamma_b_db),
            db_to_linear(gamma_u_db),
            db_to_linear(gamma_m_db),
        )
    }
}

/// Identifies the random stream of one Monte Carlo trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TrialSeed {
    pub master_seed: u64,
    pub trial_index: u64,
}

impl TrialSeed {
    pub fn new(master_seed: u64, trial_index: u64) -> Self {
        Self {
            master_seed,
            trial_index,
        }
    }

    pub fn rng(&self) -> TrialRng {
        TrialRng::new(*self)
    }
}

/// Random stream for one trial: ChaCha8 keyed by the master seed, with the
/// trial index selecting one of its 2⁶⁴ independent streams. Trial `i`
/// always sees the same numbers no matter which thread evaluates it or in
/// what order.
#[derive(Debug, Clone)]
pub struct TrialRng(ChaCha8Rng);

impl TrialRng {
    pub fn new(seed: TrialSeed) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.master_seed);
        rng.set_stream(seed.trial_index);
        Self(rng)
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Inverse CDF of the exponential distribution with mean `gamma`.
///
/// `|h|²` for `h ~ CN(0, Γ)` is exponential with mean `Γ`, so this is the
/// Rayleigh power gain. `u = 0` maps to a zero gain.
#[inline]
pub fn rayleigh_gain_from_uniform(gamma: f64, u: f64) -> f64 {
    -gamma * libm::log1p(-u)
}

/// One Rayleigh power gain with average `gamma`.
pub fn sample_rayleigh_gain(gamma: f64, rng: &mut TrialRng) -> Result<f64> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::param("gamma", gamma, "a finite positive linear gain"));
    }
    Ok(rayleigh_gain_from_uniform(gamma, rng.uniform()))
}

// Below this mean the pmf at zero, e^{-λ}, is comfortably representable.
const POISSON_DIRECT_LIMIT: f64 = 600.0;

/// Inverse CDF of `Poisson(lambda)` evaluated at `u`.
///
/// Inversion keeps the count monotone in `lambda` for a fixed `u`, so
/// searches over the arrival rate see common random numbers.
pub fn poisson_from_uniform(lambda: f64, u: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    let (mut k, mut pmf, mut cdf) = if lambda < POISSON_DIRECT_LIMIT {
        let p0 = exp(-lambda);
        (0u64, p0, p0)
    } else {
        // Mass below λ - 30√λ is below e^{-450}; start the walk there.
        let k0 = (lambda - 30.0 * sqrt(lambda)) as u64;
        let kf = k0 as f64;
        let p = exp(-lambda + kf * log(lambda) - lgamma(kf + 1.0));
        (k0, p, p)
    };
    while u >= cdf {
        k += 1;
        pmf *= lambda / k as f64;
        let next = cdf + pmf;
        if next == cdf {
            // Remaining tail is below double resolution.
            break;
        }
        cdf = next;
    }
    k
}

/// One Poisson count with mean `lambda_m`.
pub fn sample_poisson(lambda_m: f64, rng: &mut TrialRng) -> Result<u64> {
    if !(lambda_m >= 0.0) || !lambda_m.is_finite() {
        return Err(Error::param("lambda_m", lambda_m, "a finite non-negative arrival rate"));
    }
    Ok(poisson_from_uniform(lambda_m, rng.uniform()))
}

/// Shape of the channel state drawn each trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelLayout {
    pub gains: AverageGains,
    /// Total frequency channels `F`.
    pub f_total: usize,
    pub n_urllc: usize,
    /// mMTC arrival rate; `None` when the scenario has no mMTC traffic.
    pub lambda_m: Option<f64>,
}

impl ChannelLayout {
    pub fn validate(&self) -> Result<()> {
        AverageGains::new(self.gains.gamma_b, self.gains.gamma_u, self.gains.gamma_m)?;
        if self.f_total == 0 {
            return Err(Error::param("f_total", 0.0, "at least one frequency"));
        }
        if let Some(l) = self.lambda_m {
            if !(l >= 0.0) || !l.is_finite() {
                return Err(Error::param("lambda_m", l, "a finite non-negative arrival rate"));
            }
        }
        Ok(())
    }
}

/// Realized channel gains of one trial.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChannelDraw {
    /// eMBB gain per frequency.
    pub g_b: Vec<f64>,
    /// URLLC gains, row-major `n_urllc × f_total`.
    pub g_u: Vec<f64>,
    /// Gains of the active mMTC devices on their single frequency.
    pub g_m: Vec<f64>,
    pub n_urllc: usize,
    pub f_total: usize,
}

impl ChannelDraw {
    /// Builds a draw from explicit gains; `urllc` holds one row per user.
    pub fn from_gains(g_b: Vec<f64>, urllc: &[Vec<f64>], g_m: Vec<f64>) -> Result<Self> {
        let f_total = urllc.first().map_or(g_b.len(), |r| r.len());
        let mut g_u = Vec::with_capacity(urllc.len() * f_total);
        for row in urllc {
            if row.len() != f_total {
                return Err(Error::FrequencyCount {
                    requested: f_total,
                    available: row.len(),
                });
            }
            g_u.extend_from_slice(row);
        }
        if g_b.iter().chain(&g_u).chain(&g_m).any(|g| !(*g >= 0.0)) {
            return Err(Error::param("gain", f64::NAN, "non-negative gains"));
        }
        Ok(Self {
            g_b,
            g_u,
            g_m,
            n_urllc: urllc.len(),
            f_total,
        })
    }

    #[inline]
    pub fn urllc_gain(&self, user: usize, freq: usize) -> f64 {
        self.g_u[user * self.f_total + freq]
    }

    pub fn urllc_row(&self, user: usize) -> &[f64] {
        &self.g_u[user * self.f_total..(user + 1) * self.f_total]
    }
}

/// Draws all gains of one trial.
///
/// Consumption order of the stream is fixed: one uniform for the mMTC
/// count (always consumed), then `F` eMBB gains, then the URLLC matrix row
/// by row, then one gain per mMTC device. mMTC device `k` therefore has the
/// same gain for every arrival rate.
pub fn draw_channels(layout: &ChannelLayout, seed: TrialSeed) -> ChannelDraw {
    let mut draw = ChannelDraw::default();
    draw_channels_into(layout, seed, &mut draw);
    draw
}

/// [`draw_channels`] reusing the buffers of `draw`.
pub fn draw_channels_into(layout: &ChannelLayout, seed: TrialSeed, draw: &mut ChannelDraw) {
    let mut rng = seed.rng();
    let g = layout.gains;
    let count_u = rng.uniform();
    draw.f_total = layout.f_total;
    draw.n_urllc = layout.n_urllc;

    draw.g_b.clear();
    draw.g_b
        .extend((0..layout.f_total).map(|_| rayleigh_gain_from_uniform(g.gamma_b, rng.uniform())));
    draw.g_u.clear();
    draw.g_u.extend(
        (0..layout.n_urllc * layout.f_total)
            .map(|_| rayleigh_gain_from_uniform(g.gamma_u, rng.uniform())),
    );
    draw.g_m.clear();
    if let Some(lambda) = layout.lambda_m {
        let n = poisson_from_uniform(lambda, count_u);
        draw.g_m
            .extend((0..n).map(|_| rayleigh_gain_from_uniform(g.gamma_m, rng.uniform())));
    }
}
