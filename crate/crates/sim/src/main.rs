use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;
use slice_sim::experiments::{
    run_beta_sweep_mmtc, run_beta_sweep_urllc, run_frontier_mmtc, run_region_urllc, run_single_trial_trace,
};
use slice_sim::output::{write_csv, write_json};
use slice_sim::{Engine, FrontierPoint, Result, ScenarioConfig, SimError, TraceRequest};

#[derive(Parser)]
#[command(name = "slice-sim", version, about = "Monte Carlo uplink network slicing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Scenario file of `key = value` lines.
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario: fig3, fig4, fig5, fig6, fig8 or fig9.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Override one config key, e.g. `--set sweep_points=9`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Initial trials per estimate.
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Worker threads; 0 uses every core. Never changes the results.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// URLLC target 1e-3 with 1e6 trials per estimate.
    #[arg(long, global = true)]
    fast: bool,
    /// Write results here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON instead of CSV.
    #[arg(long, global = true)]
    json: bool,
    /// Do not retry an mMTC device after an eMBB stream is cancelled.
    #[arg(long, global = true)]
    no_retry: bool,
    /// More progress output on stderr (-v probes).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// (r_B^sum, r_U^sum) frontier for eMBB + URLLC.
    RegionUrllc,
    /// URLLC sum rate versus β at a fixed eMBB sum rate.
    BetaSweepUrllc,
    /// (r_B, λ_M) frontier for eMBB + mMTC.
    FrontierMmtc,
    /// mMTC arrival rate versus β at a fixed eMBB rate.
    BetaSweepMmtc,
    /// Decode one trial with explicit gains and print every SIC step.
    Trace(TraceArgs),
}

#[derive(Args)]
struct TraceArgs {
    /// Linear gains. URLLC: one row per user separated by `;`, frequencies
    /// by `,`. mMTC: one gain per device separated by `,`.
    #[arg(long, allow_hyphen_values = true, default_value = "")]
    gains: String,
    #[arg(long, default_value_t = 0.0)]
    g_tar: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// eMBB rate for the mMTC decoders.
    #[arg(long, default_value_t = 0.0)]
    r_b: f64,
    /// URLLC frequencies under OMA (default: all).
    #[arg(long)]
    f_urllc: Option<usize>,
}

fn parse_gains(field: &str, text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|e| SimError::config(field, format!("cannot parse {s:?}: {e}")))
        })
        .collect()
}

fn load_config(c: &Common) -> Result<ScenarioConfig> {
    let mut cfg = match (&c.config, &c.preset) {
        (Some(path), _) => ScenarioConfig::from_file(path)?,
        (None, Some(name)) => ScenarioConfig::preset(name)?,
        (None, None) => ScenarioConfig::default(),
    };
    for o in &c.overrides {
        cfg.apply_override(o)?;
    }
    if c.fast {
        cfg.enable_fast();
    }
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = c.trials {
        cfg.trials = Some(trials);
    }
    if c.no_retry {
        cfg.retry_after_cancellation = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    let cfg = load_config(&cli.common)?;
    let (name, points): (&str, Vec<FrontierPoint>) = match &cli.command {
        Command::Trace(t) => {
            let mut req = TraceRequest {
                g_tar: t.g_tar,
                beta: t.beta,
                r_b: t.r_b,
                f_urllc: t.f_urllc,
                ..Default::default()
            };
            match cfg.scenario {
                slice_sim::Scenario::EmbbUrllc => {
                    req.urllc_gains = t
                        .gains
                        .split(';')
                        .filter(|row| !row.trim().is_empty())
                        .map(|row| parse_gains("gains", row))
                        .collect::<Result<_>>()?;
                }
                slice_sim::Scenario::EmbbMmtc => req.mmtc_gains = parse_gains("gains", &t.gains)?,
            }
            let text = run_single_trial_trace(&cfg, &req)?;
            let mut w = sink(&cli.common.out)?;
            w.write_all(text.as_bytes())?;
            w.flush()?;
            return Ok(ExitCode::SUCCESS);
        }
        Command::RegionUrllc => ("region-urllc", run_region_urllc(&cfg, &Engine::new(cli.common.workers)?)?),
        Command::BetaSweepUrllc => ("beta-sweep-urllc", run_beta_sweep_urllc(&cfg, &Engine::new(cli.common.workers)?)?),
        Command::FrontierMmtc => ("frontier-mmtc", run_frontier_mmtc(&cfg, &Engine::new(cli.common.workers)?)?),
        Command::BetaSweepMmtc => ("beta-sweep-mmtc", run_beta_sweep_mmtc(&cfg, &Engine::new(cli.common.workers)?)?),
    };
    let mut w = sink(&cli.common.out)?;
    if cli.common.json {
        write_json(&mut w, name, &cfg, &points)?;
    } else {
        write_csv(&mut w, &cfg, &points)?;
    }
    w.flush()?;
    if points.iter().all(|p| !p.meets) {
        error!("no sweep point met its reliability constraints");
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.common.verbose {
        0 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
