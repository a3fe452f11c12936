//! Outage estimates with 95% confidence intervals.

use crate::math::sqrt;

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Outcome of comparing an estimate's interval with a target probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// The whole interval is at or below the target.
    Meets,
    /// The whole interval is above the target.
    Violates,
    Ambiguous,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageEstimate {
    /// Failure count; for the mMTC shortfall, undecoded devices.
    pub failures: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Wilson score interval for `failures` out of `trials`.
pub fn wilson_interval(failures: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = failures as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    let low = if failures == 0 { 0.0 } else { (centre - half).clamp(0.0, p) };
    let high = if failures == trials { 1.0 } else { (centre + half).clamp(p, 1.0) };
    (low, high)
}

impl OutageEstimate {
    /// Binomial estimate with a Wilson 95% interval.
    pub fn from_counts(failures: u64, trials: u64) -> Self {
        let p_hat = if trials == 0 { 0.0 } else { failures as f64 / trials as f64 };
        let (ci_low, ci_high) = wilson_interval(failures, trials, Z_95);
        Self {
            failures,
            trials,
            p_hat,
            ci_low,
            ci_high,
        }
    }

    /// mMTC shortfall `1 - mean(D)/λ` from the per-trial decoded counts
    /// `Σd` and `Σd²`, with a normal interval from the sample variance.
    /// `devices` is `Σ n_M`, used only for the failure count.
    pub fn from_shortfall(sum_d: u64, sum_d2: u64, devices: u64, trials: u64, lambda: f64) -> Self {
        let failures = devices.saturating_sub(sum_d);
        if lambda <= 0.0 || trials == 0 {
            let p = if trials == 0 && lambda > 0.0 { 1.0 } else { 0.0 };
            return Self {
                failures,
                trials,
                p_hat: p,
                ci_low: if trials == 0 { 0.0 } else { p },
                ci_high: if trials == 0 { 1.0 } else { p },
            };
        }
        let n = trials as f64;
        let mean = sum_d as f64 / n;
        let var = if trials > 1 {
            ((sum_d2 as f64 - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        let half = Z_95 * sqrt(var / n) / lambda;
        let p_hat = (1.0 - mean / lambda).clamp(0.0, 1.0);
        Self {
            failures,
            trials,
            p_hat,
            ci_low: (p_hat - half).clamp(0.0, p_hat),
            ci_high: (p_hat + half).clamp(p_hat, 1.0),
        }
    }

    pub fn verdict(&self, target: f64) -> Verdict {
        if self.ci_high <= target {
            Verdict::Meets
        } else if self.ci_low > target {
            Verdict::Violates
        } else {
            Verdict::Ambiguous
        }
    }

    /// Point decision used once the trial budget is exhausted.
    pub fn point_meets(&self, target: f64) -> bool {
        self.p_hat <= target
    }
}
