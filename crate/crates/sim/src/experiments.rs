//! Sweeps behind each CLI subcommand.

use std::fmt::Write as _;

use log::{debug, info};
use serde::Serialize;
use slice_sim_core::embb::target_snr_for_rate;
use slice_sim_core::mmtc::{
    noma_mmtc_decode_traced, oma_mmtc_decode_traced, rsma_mmtc_decode_traced, DecodeOptions,
    MmtcTrialResult,
};
use slice_sim_core::search::{bisect, optimize_grid, refine_band};
use slice_sim_core::urllc::{
    noma_urllc_rates_traced, oma_urllc_rates_traced, rsma_urllc_rates_traced, SplitConfig,
    UrllcTrialResult,
};
use slice_sim_core::{ChannelDraw, ChannelLayout, EmbbPolicy, SearchResult, SearchSettings};

use crate::config::{Scenario, ScenarioConfig, Scheme};
use crate::engine::{Engine, MmtcEstimator, MmtcMode, UrllcMode, UrllcRateTable};
use crate::error::{Result, SimError};

/// One output row.
///
/// In region and frontier sweeps `x` is the eMBB rate; in β sweeps it is β,
/// and the baseline rows of schemes that do not split leave it empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierPoint {
    pub scheme: Scheme,
    pub x: Option<f64>,
    /// URLLC sum rate or mMTC arrival rate.
    pub y: f64,
    /// Range of `y` the estimator could not resolve: the largest load whose
    /// intervals were all below target and the smallest with one above.
    pub y_low: f64,
    pub y_high: f64,
    pub best_beta: Option<f64>,
    pub best_gtar: Option<f64>,
    pub p_hat_b: Option<f64>,
    pub p_hat_service: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub trials_used: u64,
    pub meets: bool,
}

impl FrontierPoint {
    /// `scale` maps the search variable to `y`; for URLLC it is the user
    /// count, which also converts user-trials back to trials.
    fn from_search(scheme: Scheme, x: Option<f64>, scale: f64, r: &SearchResult) -> Self {
        let service = r.probe.constraints.first().map(|c| c.estimate);
        let embb = r.probe.constraints.get(1).map(|c| c.estimate);
        let y = if r.meets { scale * r.argmax } else { 0.0 };
        Self {
            scheme,
            x,
            y,
            y_low: if r.meets { scale * r.band_low } else { 0.0 },
            y_high: scale * r.band_high,
            best_beta: None,
            best_gtar: None,
            p_hat_b: embb.map(|e| e.p_hat),
            p_hat_service: service.map(|e| e.p_hat),
            ci_low: service.map(|e| e.ci_low),
            ci_high: service.map(|e| e.ci_high),
            trials_used: service.map_or(0, |e| e.trials / scale as u64),
            meets: r.meets,
        }
    }

    /// A point with no feasible configuration at all.
    fn infeasible(scheme: Scheme, x: Option<f64>) -> Self {
        Self {
            scheme,
            x,
            y: 0.0,
            y_low: 0.0,
            y_high: 0.0,
            best_beta: None,
            best_gtar: None,
            p_hat_b: None,
            p_hat_service: None,
            ci_low: None,
            ci_high: None,
            trials_used: 0,
            meets: false,
        }
    }

    /// A point that holds trivially with no traffic to estimate.
    fn exact(scheme: Scheme, x: Option<f64>, y: f64) -> Self {
        Self {
            y,
            y_low: y,
            y_high: y,
            meets: true,
            ..Self::infeasible(scheme, x)
        }
    }

    fn with_params(mut self, beta: Option<f64>, g_tar: Option<f64>) -> Self {
        self.best_beta = beta;
        self.best_gtar = g_tar;
        self
    }
}

fn log_point(p: &FrontierPoint) {
    info!(
        "{} x={} y={:.4} [{:.4}, {:.4}] beta={} g_tar={} trials={}{}",
        p.scheme,
        p.x.map_or("-".into(), |x| format!("{x:.4}")),
        p.y,
        p.y_low,
        p.y_high,
        p.best_beta.map_or("-".into(), |b| format!("{b:.2}")),
        p.best_gtar.map_or("-".into(), |g| format!("{g:.4}")),
        p.trials_used,
        if p.meets { "" } else { " infeasible" }
    );
}

fn log_search(what: &str, r: &SearchResult) {
    for (x, probe) in &r.history {
        let parts: Vec<String> = probe
            .constraints
            .iter()
            .map(|c| {
                format!(
                    "p_hat={:.3e} ci=[{:.3e}, {:.3e}] target={:.1e} trials={}",
                    c.estimate.p_hat, c.estimate.ci_low, c.estimate.ci_high, c.target, c.estimate.trials
                )
            })
            .collect();
        debug!("{what} probe={x:.6} {}", parts.join(" | "));
    }
}

/// Evenly spaced sweep over `[0, x_max]`.
pub fn sweep_grid(x_max: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![x_max];
    }
    (0..points).map(|i| x_max * i as f64 / (points - 1) as f64).collect()
}

/// Candidate eMBB target SNRs for rate `r_b`: log-spaced from the smallest
/// SNR carrying `r_b` up to the inversion bound. `None` when even the
/// bound cannot carry `r_b`.
pub fn gtar_grid(r_b: f64, bound: f64, size: usize) -> Option<Vec<f64>> {
    let lower = target_snr_for_rate(r_b);
    if lower > bound * (1.0 + 1e-12) {
        return None;
    }
    let lower = lower.min(bound);
    if lower == 0.0 {
        return Some(vec![0.0]);
    }
    if size == 1 {
        return Some(vec![lower]);
    }
    let ratio = bound / lower;
    let mut grid: Vec<f64> = (0..size)
        .map(|k| lower * ratio.powf(k as f64 / (size - 1) as f64))
        .collect();
    grid[0] = lower;
    grid[size - 1] = bound;
    Some(grid)
}

struct Run<'a> {
    cfg: &'a ScenarioConfig,
    engine: &'a Engine,
    policy: EmbbPolicy,
    settings: SearchSettings,
}

impl<'a> Run<'a> {
    fn new(cfg: &'a ScenarioConfig, engine: &'a Engine, scenario: Scenario) -> Result<Self> {
        cfg.validate()?;
        if cfg.scenario != scenario {
            return Err(SimError::config(
                "scenario",
                format!("this sweep needs scenario {}", match scenario {
                    Scenario::EmbbUrllc => "embb-urllc",
                    Scenario::EmbbMmtc => "embb-mmtc",
                }),
            ));
        }
        let tolerance = match scenario {
            Scenario::EmbbUrllc => cfg.rate_tolerance,
            Scenario::EmbbMmtc => cfg.lambda_tolerance,
        };
        Ok(Self {
            cfg,
            engine,
            policy: cfg.embb_policy()?,
            settings: SearchSettings::new(cfg.initial_trials(), cfg.max_trials(), tolerance)?,
        })
    }

    fn urllc_layout(&self) -> Result<ChannelLayout> {
        Ok(ChannelLayout {
            gains: self.cfg.gains()?,
            f_total: self.cfg.f_total,
            n_urllc: self.cfg.n_urllc,
            lambda_m: None,
        })
    }

    /// Searches from `floor`, or takes `prior` as already searched, then
    /// optionally tightens the band with the same trials.
    fn urllc_search(
        &self,
        mode: UrllcMode,
        floor: Option<f64>,
        prior: Option<SearchResult>,
        refine: bool,
    ) -> Result<SearchResult> {
        let cfg = self.cfg;
        let mut table = UrllcRateTable::new(self.engine, self.urllc_layout()?, cfg.seed, mode)?;
        let mut probe = |rate, n| table.probe(rate, n, cfg.eps_u, cfg.eps_b);
        let mut r = match prior {
            Some(r) => r,
            None => bisect(0.0, cfg.rate_max, floor, &self.settings, &mut probe),
        };
        if refine {
            refine_band(&mut r, &self.settings, &mut probe);
        }
        log_search(&format!("{mode:?}"), &r);
        Ok(r)
    }

    fn urllc_oma_point(&self, f_u: usize, x: Option<f64>) -> Result<FrontierPoint> {
        let r = self.urllc_search(UrllcMode::Oma { f_u }, None, None, true)?;
        Ok(FrontierPoint::from_search(Scheme::Oma, x, self.cfg.n_urllc as f64, &r))
    }

    fn urllc_shared_point(&self, scheme: Scheme, r_b_sum: f64, x: Option<f64>) -> Result<FrontierPoint> {
        let g_tar = target_snr_for_rate(r_b_sum / self.cfg.f_total as f64);
        if self.policy.validate_target(g_tar).is_err() {
            return Ok(FrontierPoint::infeasible(scheme, x));
        }
        let n_u = self.cfg.n_urllc as f64;
        match scheme {
            Scheme::Oma => unreachable!("OMA does not share frequencies"),
            Scheme::Noma => {
                let r = self.urllc_search(UrllcMode::Noma { g_tar }, None, None, true)?;
                Ok(FrontierPoint::from_search(scheme, x, n_u, &r).with_params(None, Some(g_tar)))
            }
            Scheme::Rsma => {
                let mut failure = None;
                let best = optimize_grid(&self.cfg.beta_grid, |&beta, floor| {
                    match self.urllc_search(UrllcMode::Rsma { g_tar, beta }, floor, None, false) {
                        Ok(r) => r,
                        Err(e) => {
                            failure.get_or_insert(e);
                            SearchResult::default()
                        }
                    }
                })?;
                if let Some(e) = failure {
                    return Err(e);
                }
                let mode = UrllcMode::Rsma { g_tar, beta: best.point };
                let r = self.urllc_search(mode, None, Some(best.result), true)?;
                Ok(FrontierPoint::from_search(scheme, x, n_u, &r).with_params(Some(best.point), Some(g_tar)))
            }
        }
    }

    fn rsma_urllc_at(&self, beta: f64, g_tar: f64) -> Result<FrontierPoint> {
        let r = self.urllc_search(UrllcMode::Rsma { g_tar, beta }, None, None, true)?;
        Ok(FrontierPoint::from_search(Scheme::Rsma, Some(beta), self.cfg.n_urllc as f64, &r)
            .with_params(Some(beta), Some(g_tar)))
    }

    /// Searches from `floor`, or takes `prior` as already searched, then
    /// optionally tightens the band.
    fn lambda_search(
        &self,
        mode: MmtcMode,
        floor: Option<f64>,
        prior: Option<SearchResult>,
        refine: bool,
    ) -> Result<SearchResult> {
        let cfg = self.cfg;
        let opts = DecodeOptions {
            retry_after_cancellation: cfg.retry_after_cancellation,
        };
        let mut est = MmtcEstimator::new(self.engine, cfg.gains()?, cfg.seed, cfg.r_m, mode, opts);
        let mut probe = |lambda, n| est.probe(lambda, n, cfg.eps_m, cfg.eps_b);
        let mut r = match prior {
            Some(r) => r,
            None => bisect(0.0, cfg.lambda_max, floor, &self.settings, &mut probe),
        };
        if refine {
            refine_band(&mut r, &self.settings, &mut probe);
        }
        log_search(&format!("{mode:?}"), &r);
        Ok(r)
    }

    fn max_lambda(&self, mode: MmtcMode, floor: Option<f64>) -> Result<SearchResult> {
        self.lambda_search(mode, floor, None, false)
    }

    /// OMA time sharing: eMBB gets fraction `alpha` of the resource.
    fn mmtc_oma_point(&self, alpha: f64, x: Option<f64>) -> Result<FrontierPoint> {
        if alpha >= 1.0 {
            return Ok(FrontierPoint::exact(Scheme::Oma, x, 0.0));
        }
        let r_eff = self.cfg.r_m / (1.0 - alpha);
        let mode = MmtcMode::Oma { r_eff };
        let r = self.lambda_search(mode, None, None, true)?;
        Ok(FrontierPoint::from_search(Scheme::Oma, x, 1.0, &r))
    }

    /// Best arrival rate over the `(β, g_tar)` grid at eMBB rate `r_b`.
    fn mmtc_shared_point(&self, scheme: Scheme, r_b: f64, betas: &[f64], x: Option<f64>) -> Result<FrontierPoint> {
        let Some(targets) = gtar_grid(r_b, self.policy.g_tar, self.cfg.gtar_grid_size) else {
            return Ok(FrontierPoint::infeasible(scheme, x));
        };
        let grid: Vec<(f64, f64)> = betas
            .iter()
            .flat_map(|&b| targets.iter().map(move |&g| (b, g)))
            .collect();
        let mode_at = |beta, g_tar| match scheme {
            Scheme::Rsma => MmtcMode::Rsma { g_tar, beta, r_b },
            _ => MmtcMode::Noma { g_tar, r_b },
        };
        let mut failure = None;
        let best = optimize_grid(&grid, |&(beta, g_tar), floor| {
            match self.max_lambda(mode_at(beta, g_tar), floor) {
                Ok(r) => r,
                Err(e) => {
                    failure.get_or_insert(e);
                    SearchResult::default()
                }
            }
        })?;
        if let Some(e) = failure {
            return Err(e);
        }
        let (beta, g_tar) = best.point;
        let r = self.lambda_search(mode_at(beta, g_tar), None, Some(best.result), true)?;
        let beta = (scheme == Scheme::Rsma).then_some(beta);
        Ok(FrontierPoint::from_search(scheme, x, 1.0, &r).with_params(beta, Some(g_tar)))
    }
}

/// `(r_B^sum, r_U^sum)` frontier of every configured scheme.
pub fn run_region_urllc(cfg: &ScenarioConfig, engine: &Engine) -> Result<Vec<FrontierPoint>> {
    let run = Run::new(cfg, engine, Scenario::EmbbUrllc)?;
    let r_orth = run.policy.r_b_orth;
    let f = cfg.f_total;
    let xs = sweep_grid(cfg.x_max.unwrap_or(f as f64 * r_orth), cfg.sweep_points);
    let mut out = Vec::new();
    for &scheme in &cfg.schemes {
        match scheme {
            Scheme::Oma => {
                for f_u in (0..=f).rev() {
                    let p = run.urllc_oma_point(f_u, Some((f - f_u) as f64 * r_orth))?;
                    log_point(&p);
                    out.push(p);
                }
            }
            _ => {
                for &x in &xs {
                    let p = run.urllc_shared_point(scheme, x, Some(x))?;
                    log_point(&p);
                    out.push(p);
                }
            }
        }
    }
    Ok(out)
}

/// URLLC sum rate per β at a fixed eMBB sum rate, with OMA and NOMA
/// baselines (empty `x`).
pub fn run_beta_sweep_urllc(cfg: &ScenarioConfig, engine: &Engine) -> Result<Vec<FrontierPoint>> {
    let run = Run::new(cfg, engine, Scenario::EmbbUrllc)?;
    let r_orth = run.policy.r_b_orth;
    let r_b_sum = cfg
        .r_b_sum
        .unwrap_or((cfg.f_total - cfg.f_urllc) as f64 * r_orth);
    let g_tar = target_snr_for_rate(r_b_sum / cfg.f_total as f64);
    run.policy
        .validate_target(g_tar)
        .map_err(|_| SimError::config("r_b_sum", format!("{r_b_sum} exceeds F·r_orth = {}", cfg.f_total as f64 * r_orth)))?;
    info!("eMBB sum rate {r_b_sum:.4} (g_tar {g_tar:.4} per frequency)");
    let mut out = Vec::new();
    for &scheme in &cfg.schemes {
        match scheme {
            Scheme::Oma => out.push(run.urllc_oma_point(cfg.f_urllc, None)?),
            Scheme::Noma => out.push(run.urllc_shared_point(Scheme::Noma, r_b_sum, None)?),
            Scheme::Rsma => {
                for &beta in &cfg.beta_grid {
                    let p = run.rsma_urllc_at(beta, g_tar)?;
                    log_point(&p);
                    out.push(p);
                }
                continue;
            }
        }
        log_point(out.last().expect("just pushed"));
    }
    Ok(out)
}

/// `(r_B, λ_M)` frontier of every configured scheme.
pub fn run_frontier_mmtc(cfg: &ScenarioConfig, engine: &Engine) -> Result<Vec<FrontierPoint>> {
    let run = Run::new(cfg, engine, Scenario::EmbbMmtc)?;
    let r_orth = run.policy.r_b_orth;
    let xs = sweep_grid(cfg.x_max.unwrap_or(r_orth), cfg.sweep_points);
    let mut out = Vec::new();
    for &scheme in &cfg.schemes {
        match scheme {
            Scheme::Oma => {
                let n = cfg.alpha_grid_size;
                for i in 0..n {
                    let alpha = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                    let p = run.mmtc_oma_point(alpha, Some(alpha * r_orth))?;
                    log_point(&p);
                    out.push(p);
                }
            }
            Scheme::Noma => {
                for &x in &xs {
                    let p = run.mmtc_shared_point(scheme, x, &[1.0], Some(x))?;
                    log_point(&p);
                    out.push(p);
                }
            }
            Scheme::Rsma => {
                for &x in &xs {
                    let p = run.mmtc_shared_point(scheme, x, &cfg.beta_grid, Some(x))?;
                    log_point(&p);
                    out.push(p);
                }
            }
        }
    }
    Ok(out)
}

/// Arrival rate per β at the fixed eMBB rate `r_b`, each row optimized
/// over the g_tar grid, with OMA and NOMA baselines (empty `x`).
pub fn run_beta_sweep_mmtc(cfg: &ScenarioConfig, engine: &Engine) -> Result<Vec<FrontierPoint>> {
    let run = Run::new(cfg, engine, Scenario::EmbbMmtc)?;
    let r_b = cfg
        .r_b
        .ok_or_else(|| SimError::config("r_b", "the mMTC β sweep needs a fixed eMBB rate"))?;
    let mut out = Vec::new();
    for &scheme in &cfg.schemes {
        match scheme {
            Scheme::Oma => out.push(run.mmtc_oma_point(r_b / run.policy.r_b_orth, None)?),
            Scheme::Noma => out.push(run.mmtc_shared_point(scheme, r_b, &[1.0], None)?),
            Scheme::Rsma => {
                for &beta in &cfg.beta_grid {
                    let p = run.mmtc_shared_point(scheme, r_b, &[beta], Some(beta))?;
                    log_point(&p);
                    out.push(p);
                }
                continue;
            }
        }
        log_point(out.last().expect("just pushed"));
    }
    Ok(out)
}

/// Explicit gains and operating point for a single traced trial.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceRequest {
    /// URLLC gains, one row per user, one entry per frequency.
    pub urllc_gains: Vec<Vec<f64>>,
    pub mmtc_gains: Vec<f64>,
    pub g_tar: f64,
    pub beta: f64,
    /// eMBB rate for the mMTC decoders.
    pub r_b: f64,
    /// Dedicated URLLC frequencies under OMA; all of them by default.
    pub f_urllc: Option<usize>,
}

fn urllc_summary(out: &mut String, r: &UrllcTrialResult) {
    let order: Vec<String> = r.decode_order.iter().map(|u| format!("U{}", u + 1)).collect();
    let _ = writeln!(out, "decode_order={}", order.join(","));
    for (u, rate) in r.rates.iter().enumerate() {
        let _ = writeln!(out, "rate U{}={rate:.17}", u + 1);
    }
}

fn mmtc_summary(out: &mut String, r: &MmtcTrialResult) {
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.17}"));
    let pos = |v: Option<usize>| v.map_or("-".to_string(), |x| x.to_string());
    let _ = writeln!(out, "d_m={} d_b={} n_m={}", r.decoded, r.d_b(), r.devices);
    let _ = writeln!(
        out,
        "m1={} m2={} r_b1={} r_b2={}",
        pos(r.split_positions[0]),
        pos(r.split_positions[1]),
        opt(r.embb_stream_rates[0]),
        opt(r.embb_stream_rates[1])
    );
}

/// Full-precision SIC trace of one trial with the given gains under the
/// first configured scheme.
pub fn run_single_trial_trace(cfg: &ScenarioConfig, req: &TraceRequest) -> Result<String> {
    let scheme = *cfg
        .schemes
        .first()
        .ok_or_else(|| SimError::config("scheme", "no scheme configured"))?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# scheme={scheme} g_tar={} beta={} r_b={}",
        req.g_tar, req.beta, req.r_b
    );
    match cfg.scenario {
        Scenario::EmbbUrllc => {
            let f = req.urllc_gains.first().map_or(0, Vec::len);
            let draw = ChannelDraw::from_gains(vec![0.0; f], &req.urllc_gains, Vec::new())?;
            let r = match scheme {
                Scheme::Oma => oma_urllc_rates_traced(&draw, req.f_urllc.unwrap_or(f))?,
                Scheme::Noma => noma_urllc_rates_traced(&draw, req.g_tar),
                Scheme::Rsma => rsma_urllc_rates_traced(&draw, req.g_tar, SplitConfig::new(req.beta)?)?,
            };
            let _ = write!(out, "{}", r.trace);
            urllc_summary(&mut out, &r);
        }
        Scenario::EmbbMmtc => {
            let opts = DecodeOptions {
                retry_after_cancellation: cfg.retry_after_cancellation,
            };
            if req.mmtc_gains.iter().any(|g| !(*g >= 0.0)) {
                return Err(SimError::config("gains", "mMTC gains must be non-negative"));
            }
            let g = &req.mmtc_gains;
            let r = match scheme {
                Scheme::Oma => oma_mmtc_decode_traced(g, cfg.r_m),
                Scheme::Noma => noma_mmtc_decode_traced(g, req.g_tar, cfg.r_m, req.r_b, opts),
                Scheme::Rsma => rsma_mmtc_decode_traced(g, req.g_tar, req.beta, cfg.r_m, req.r_b, opts),
            };
            let _ = write!(out, "{}", r.trace);
            mmtc_summary(&mut out, &r);
        }
    }
    Ok(out)
}
