//! Scenario configuration: flat `key = value` files, command-line
//! overrides and the shipped presets.
//!
//! ```text
//! # comment
//! scenario = embb-urllc
//! scheme = oma, noma, rsma
//! gamma_b_db = 10
//! ```
//!
//! Unknown keys and malformed values are errors naming the key.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use sha2::{Digest, Sha256};
use slice_sim_core::{AverageGains, EmbbPolicy};

use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    EmbbUrllc,
    EmbbMmtc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Oma,
    Noma,
    Rsma,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Oma => "oma",
            Scheme::Noma => "noma",
            Scheme::Rsma => "rsma",
        })
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "oma" => Ok(Scheme::Oma),
            "noma" => Ok(Scheme::Noma),
            "rsma" => Ok(Scheme::Rsma),
            _ => Err(format!("unknown scheme {s:?} (expected oma, noma or rsma)")),
        }
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "embb-urllc" => Ok(Scenario::EmbbUrllc),
            "embb-mmtc" => Ok(Scenario::EmbbMmtc),
            _ => Err(format!("unknown scenario {s:?} (expected embb-urllc or embb-mmtc)")),
        }
    }
}

/// Everything a run depends on. Serialized (in field order) for the
/// config hash.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    /// Schemes to run, in output order.
    pub schemes: Vec<Scheme>,
    pub gamma_b_db: f64,
    pub gamma_u_db: f64,
    pub gamma_m_db: f64,
    pub f_total: usize,
    /// URLLC frequencies of the OMA split used as the reference eMBB rate in
    /// β sweeps.
    pub f_urllc: usize,
    pub n_urllc: usize,
    pub eps_b: f64,
    pub eps_u: f64,
    pub eps_m: f64,
    pub r_m: f64,
    /// Fixed per-frequency eMBB rate for the mMTC β sweep.
    pub r_b: Option<f64>,
    /// Fixed eMBB sum rate for the URLLC β sweep; defaults to the OMA rate
    /// with `f_urllc` URLLC frequencies.
    pub r_b_sum: Option<f64>,
    pub beta_grid: Vec<f64>,
    pub gtar_grid_size: usize,
    pub alpha_grid_size: usize,
    /// Points on the eMBB-rate axis of region and frontier sweeps.
    pub sweep_points: usize,
    /// Right end of the eMBB-rate sweep; defaults to the orthogonal rate
    /// (`F·r_orth` for sum rates).
    pub x_max: Option<f64>,
    /// Initial trials per estimate; defaults to `ceil(100/ε)` for the
    /// tightest target in play.
    pub trials: Option<u64>,
    /// Ambiguous estimates double their trials up to this multiple.
    pub trial_cap_factor: u64,
    pub seed: u64,
    pub retry_after_cancellation: bool,
    pub rate_max: f64,
    pub rate_tolerance: f64,
    pub lambda_max: f64,
    pub lambda_tolerance: f64,
    pub fast: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::EmbbUrllc,
            schemes: vec![Scheme::Oma, Scheme::Noma, Scheme::Rsma],
            gamma_b_db: 10.0,
            gamma_u_db: 20.0,
            gamma_m_db: 5.0,
            f_total: 10,
            f_urllc: 5,
            n_urllc: 2,
            eps_b: 1e-3,
            eps_u: 1e-5,
            eps_m: 0.1,
            r_m: 0.04,
            r_b: None,
            r_b_sum: None,
            beta_grid: uniform_grid(21),
            gtar_grid_size: 20,
            alpha_grid_size: 201,
            sweep_points: 17,
            x_max: None,
            trials: None,
            trial_cap_factor: 2,
            seed: 1,
            retry_after_cancellation: true,
            rate_max: 15.0,
            rate_tolerance: 1e-3,
            lambda_max: 200.0,
            lambda_tolerance: 0.25,
            fast: false,
        }
    }
}

/// `n` evenly spaced points covering `[0, 1]`.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

const FAST_EPS_U: f64 = 1e-3;
const FAST_URLLC_TRIALS: u64 = 1_000_000;

const PRESETS: [(&str, &str); 6] = [
    ("fig3", include_str!("../presets/fig3.conf")),
    ("fig4", include_str!("../presets/fig4.conf")),
    ("fig5", include_str!("../presets/fig5.conf")),
    ("fig6", include_str!("../presets/fig6.conf")),
    ("fig8", include_str!("../presets/fig8.conf")),
    ("fig9", include_str!("../presets/fig9.conf")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| SimError::config(key, format!("cannot parse {value:?}: {e}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

fn parse_optional<T: FromStr>(key: &str, value: &str) -> Result<Option<T>>
where
    T::Err: fmt::Display,
{
    if value.is_empty() || value == "auto" {
        Ok(None)
    } else {
        parse_value(key, value).map(Some)
    }
}

impl ScenarioConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let (_, text) = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| {
                let known: Vec<_> = preset_names().collect();
                SimError::config("preset", format!("unknown preset {name:?} (known: {})", known.join(", ")))
            })?;
        Self::parse(text)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| SimError::ReadConfig {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Defaults overridden by the `key = value` lines of `text`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                SimError::config(format!("line {}", lineno + 1), format!("expected key = value, got {line:?}"))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    /// Applies one `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| SimError::config(assignment, "override must look like key=value"))?;
        self.set(key.trim(), value.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "scenario" => self.scenario = parse_value(key, value)?,
            "scheme" | "schemes" => self.schemes = parse_list(key, value)?,
            "gamma_b_db" => self.gamma_b_db = parse_value(key, value)?,
            "gamma_u_db" => self.gamma_u_db = parse_value(key, value)?,
            "gamma_m_db" => self.gamma_m_db = parse_value(key, value)?,
            "f_total" => self.f_total = parse_value(key, value)?,
            "f_urllc" => self.f_urllc = parse_value(key, value)?,
            "n_urllc" => self.n_urllc = parse_value(key, value)?,
            "eps_b" => self.eps_b = parse_value(key, value)?,
            "eps_u" => self.eps_u = parse_value(key, value)?,
            "eps_m" => self.eps_m = parse_value(key, value)?,
            "r_m" => self.r_m = parse_value(key, value)?,
            "r_b" => self.r_b = parse_optional(key, value)?,
            "r_b_sum" => self.r_b_sum = parse_optional(key, value)?,
            "beta_grid" => self.beta_grid = parse_list(key, value)?,
            "beta_grid_size" => self.beta_grid = uniform_grid(parse_value(key, value)?),
            "gtar_grid_size" => self.gtar_grid_size = parse_value(key, value)?,
            "alpha_grid_size" => self.alpha_grid_size = parse_value(key, value)?,
            "sweep_points" => self.sweep_points = parse_value(key, value)?,
            "x_max" => self.x_max = parse_optional(key, value)?,
            "trials" => self.trials = parse_optional(key, value)?,
            "trial_cap_factor" => self.trial_cap_factor = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "retry_after_cancellation" => self.retry_after_cancellation = parse_value(key, value)?,
            "rate_max" => self.rate_max = parse_value(key, value)?,
            "rate_tolerance" => self.rate_tolerance = parse_value(key, value)?,
            "lambda_max" => self.lambda_max = parse_value(key, value)?,
            "lambda_tolerance" => self.lambda_tolerance = parse_value(key, value)?,
            "fast" => {
                if parse_value::<bool>(key, value)? {
                    self.enable_fast();
                } else {
                    self.fast = false;
                }
            }
            _ => return Err(SimError::config(key, "unknown key")),
        }
        Ok(())
    }

    /// Relaxes the URLLC target to 10⁻³ with 10⁶ trials per estimate. mMTC
    /// runs are unaffected; their targets already allow 10⁵ trials.
    pub fn enable_fast(&mut self) {
        self.fast = true;
        if self.scenario == Scenario::EmbbUrllc {
            self.eps_u = FAST_EPS_U;
            self.trials = Some(FAST_URLLC_TRIALS);
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("eps_b", self.eps_b), ("eps_u", self.eps_u), ("eps_m", self.eps_m)] {
            if !(p > 0.0 && p < 1.0) {
                return Err(SimError::config(name, format!("{p} is not a probability in (0, 1)")));
            }
        }
        AverageGains::from_db(self.gamma_b_db, self.gamma_u_db, self.gamma_m_db)
            .map_err(|e| SimError::config("gamma_*_db", e.to_string()))?;
        if self.schemes.is_empty() {
            return Err(SimError::config("scheme", "at least one scheme is required"));
        }
        if self.f_total == 0 {
            return Err(SimError::config("f_total", "must be at least 1"));
        }
        if self.f_urllc > self.f_total {
            return Err(SimError::config(
                "f_urllc",
                format!("{} exceeds f_total = {}", self.f_urllc, self.f_total),
            ));
        }
        if self.scenario == Scenario::EmbbUrllc {
            if self.n_urllc == 0 {
                return Err(SimError::config("n_urllc", "must be at least 1"));
            }
            if self.schemes.contains(&Scheme::Rsma) && self.n_urllc != 2 {
                return Err(SimError::config("n_urllc", "rate splitting is defined for exactly 2 URLLC users"));
            }
        }
        if !(self.r_m > 0.0) {
            return Err(SimError::config("r_m", "must be positive"));
        }
        for (name, v) in [("r_b", self.r_b), ("r_b_sum", self.r_b_sum), ("x_max", self.x_max)] {
            if let Some(v) = v {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(SimError::config(name, "must be a finite non-negative rate"));
                }
            }
        }
        if self.beta_grid.is_empty() {
            return Err(SimError::config("beta_grid", "must not be empty"));
        }
        if self.beta_grid.iter().any(|b| !(0.0..=1.0).contains(b)) {
            return Err(SimError::config("beta_grid", "values must lie in [0, 1]"));
        }
        if !self.beta_grid.contains(&0.0) || !self.beta_grid.contains(&1.0) {
            return Err(SimError::config("beta_grid", "must contain both 0 and 1"));
        }
        if self.beta_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SimError::config("beta_grid", "must be strictly increasing"));
        }
        for (name, n) in [
            ("gtar_grid_size", self.gtar_grid_size),
            ("alpha_grid_size", self.alpha_grid_size),
            ("sweep_points", self.sweep_points),
        ] {
            if n == 0 {
                return Err(SimError::config(name, "grid must not be empty"));
            }
        }
        if self.trials == Some(0) {
            return Err(SimError::config("trials", "must be at least 1"));
        }
        if self.trial_cap_factor == 0 {
            return Err(SimError::config("trial_cap_factor", "must be at least 1"));
        }
        for (name, v) in [
            ("rate_max", self.rate_max),
            ("rate_tolerance", self.rate_tolerance),
            ("lambda_max", self.lambda_max),
            ("lambda_tolerance", self.lambda_tolerance),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(SimError::config(name, "must be positive"));
            }
        }
        Ok(())
    }

    pub fn gains(&self) -> Result<AverageGains> {
        Ok(AverageGains::from_db(self.gamma_b_db, self.gamma_u_db, self.gamma_m_db)?)
    }

    pub fn embb_policy(&self) -> Result<EmbbPolicy> {
        let gains = self.gains()?;
        Ok(EmbbPolicy::new(gains.gamma_b, self.eps_b)?)
    }

    /// Initial trials per estimate.
    pub fn initial_trials(&self) -> u64 {
        self.trials.unwrap_or_else(|| {
            let eps = match self.scenario {
                Scenario::EmbbUrllc => self.eps_u.min(self.eps_b),
                Scenario::EmbbMmtc => self.eps_m.min(self.eps_b),
            };
            (100.0 / eps).ceil() as u64
        })
    }

    pub fn max_trials(&self) -> u64 {
        self.initial_trials().saturating_mul(self.trial_cap_factor)
    }

    /// Hex SHA-256 of the serialized config, first 16 digits.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&json);
        hex::encode(&digest[..8])
    }
}
