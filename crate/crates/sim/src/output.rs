//! CSV and JSON writers for sweep results.

use std::io::Write;

use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::experiments::FrontierPoint;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const CSV_COLUMNS: &str =
    "scheme,x,y,y_low,y_high,best_beta,best_gtar,p_hat_b,p_hat_service,ci_low,ci_high,trials";

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_csv<W: Write>(mut w: W, cfg: &ScenarioConfig, points: &[FrontierPoint]) -> Result<()> {
    writeln!(w, "# slice-sim v{VERSION}, config_hash={}, seed={}", cfg.hash(), cfg.seed)?;
    writeln!(w, "{CSV_COLUMNS}")?;
    for p in points {
        let trials = if p.trials_used == 0 { String::new() } else { p.trials_used.to_string() };
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            p.scheme,
            cell(p.x),
            p.y,
            p.y_low,
            p.y_high,
            cell(p.best_beta),
            cell(p.best_gtar),
            cell(p.p_hat_b),
            cell(p.p_hat_service),
            cell(p.ci_low),
            cell(p.ci_high),
            trials
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Report<'a> {
    version: &'a str,
    command: &'a str,
    config_hash: String,
    seed: u64,
    config: &'a ScenarioConfig,
    points: &'a [FrontierPoint],
}

pub fn write_json<W: Write>(mut w: W, command: &str, cfg: &ScenarioConfig, points: &[FrontierPoint]) -> Result<()> {
    let report = Report {
        version: VERSION,
        command,
        config_hash: cfg.hash(),
        seed: cfg.seed,
        config: cfg,
        points,
    };
    serde_json::to_writer_pretty(&mut w, &report)?;
    writeln!(w)?;
    Ok(())
}
