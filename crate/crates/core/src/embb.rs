//! eMBB truncated channel inversion.
//!
//! The eMBB device knows its channel, stays silent when the gain is below
//! `g_min`, and otherwise inverts the channel to land at a fixed received
//! SNR `g_tar`. With unit average power the largest `g_tar` follows from
//! `E1`, and the reliability target fixes `g_min`.

use crate::error::{Error, Result};
use crate::special::upper_incomplete_gamma_zero;

fn check(gamma_b: f64, eps_b: f64) -> Result<()> {
    if !(gamma_b > 0.0) || !gamma_b.is_finite() {
        return Err(Error::param("gamma_b", gamma_b, "a finite positive linear gain"));
    }
    if !(eps_b > 0.0 && eps_b < 1.0) {
        return Err(Error::param("eps_b", eps_b, "a probability in (0, 1)"));
    }
    Ok(())
}

/// Activity threshold `g_min = Γ_B ln(1/(1-ε_B))`: the eMBB device is silent
/// (and in outage) exactly with probability `ε_B`.
pub fn threshold_snr(gamma_b: f64, eps_b: f64) -> Result<f64> {
    check(gamma_b, eps_b)?;
    Ok(-gamma_b * libm::log1p(-eps_b))
}

/// Largest received SNR reachable by inversion under unit average power,
/// `Γ_B / Γ(0, g_min/Γ_B)`.
pub fn max_target_snr(gamma_b: f64, eps_b: f64) -> Result<f64> {
    let g_min = threshold_snr(gamma_b, eps_b)?;
    Ok(gamma_b / upper_incomplete_gamma_zero(g_min / gamma_b)?)
}

/// Per-frequency eMBB rate when the service has its frequencies to itself.
pub fn orth_rate(gamma_b: f64, eps_b: f64) -> Result<f64> {
    Ok(crate::rate_from_sinr(max_target_snr(gamma_b, eps_b)?))
}

/// Received SNR needed to carry `rate` bits/s/Hz, `2^rate - 1`.
pub fn target_snr_for_rate(rate: f64) -> f64 {
    libm::expm1(rate * crate::math::LN_2).max(0.0)
}

/// Resolved eMBB inversion policy for one `(Γ_B, ε_B)` pair.
///
/// Carries no per-frequency state: the orthogonal rate is the same on every
/// frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbbPolicy {
    pub gamma_b: f64,
    pub eps_b: f64,
    pub g_min: f64,
    /// Largest admissible target SNR.
    pub g_tar: f64,
    pub r_b_orth: f64,
}

impl EmbbPolicy {
    pub fn new(gamma_b: f64, eps_b: f64) -> Result<Self> {
        let g_min = threshold_snr(gamma_b, eps_b)?;
        let g_tar = max_target_snr(gamma_b, eps_b)?;
        Ok(Self {
            gamma_b,
            eps_b,
            g_min,
            g_tar,
            r_b_orth: crate::rate_from_sinr(g_tar),
        })
    }

    /// Probability that the channel clears the activity threshold.
    pub fn activity_probability(&self) -> f64 {
        libm::exp(-self.g_min / self.gamma_b)
    }

    /// Checks a coexistence target SNR against the inversion bound.
    pub fn validate_target(&self, g_tar: f64) -> Result<()> {
        // A relative ulp-level margin: targets derived from r_b_orth round-trip.
        if !(g_tar >= 0.0) || g_tar > self.g_tar * (1.0 + 1e-12) {
            return Err(Error::param(
                "g_tar",
                g_tar,
                "a target SNR between 0 and the inversion bound",
            ));
        }
        Ok(())
    }

    /// Per-frequency target SNR that carries `rate`, if admissible.
    pub fn target_for_rate(&self, rate: f64) -> Result<f64> {
        let g = target_snr_for_rate(rate);
        self.validate_target(g)?;
        Ok(g)
    }
}
