//! CSV artifacts for single runs and seed batches.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ahsim_core::engine::RunOutput;
use ahsim_core::error::Result;
use ahsim_core::eventlog::write_events_csv;
use ahsim_core::metrics::{write_energy_csv, write_metrics_csv, MetricsReport};
use ahsim_core::Config;

/// Everything the batch aggregation needs from one finished run.
pub struct RunArtifacts {
    pub seed: u64,
    pub report: MetricsReport<f64>,
    pub metrics_path: PathBuf,
}

fn file_stem(cfg: &Config, seed: u64) -> String {
    format!("{}-seed{}", cfg.name, seed)
}

pub fn write_run(
    dir: &Path,
    cfg: &Config,
    out: RunOutput<f64>,
    events: bool,
) -> Result<RunArtifacts> {
    let stem = file_stem(cfg, out.report.seed);
    let metrics_path = dir.join(format!("{stem}-metrics.csv"));
    write_metrics_csv(&out.report, BufWriter::new(File::create(&metrics_path)?))?;

    let energy_path = dir.join(format!("{stem}-energy.csv"));
    write_energy_csv(
        &out.report,
        &cfg.energy.radio,
        BufWriter::new(File::create(energy_path)?),
    )?;

    let battery_path = dir.join(format!("{stem}-battery.csv"));
    let mut w = BufWriter::new(File::create(battery_path)?);
    writeln!(w, "battery,capacity_mah,worst_aid,avg_current_ma,lifetime_years")?;
    for row in out.report.battery_table(&cfg.energy.radio, &cfg.energy.batteries) {
        writeln!(
            w,
            "{},{:.1},{},{:.6},{:.3}",
            row.battery, row.capacity_mah, row.worst_aid, row.avg_current_ma, row.lifetime_years
        )?;
    }

    if events {
        let events_path = dir.join(format!("{stem}-events.csv"));
        write_events_csv(&out.events, BufWriter::new(File::create(events_path)?))?;
    }

    Ok(RunArtifacts { seed: out.report.seed, report: out.report, metrics_path })
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Aggregate summary plus chart-ready CSVs for state-time shares and battery
/// lifetimes.
pub fn write_batch(dir: &Path, cfg: &Config, runs: &[RunArtifacts]) -> Result<()> {
    let mut summary = BufWriter::new(File::create(dir.join("summary.csv"))?);
    writeln!(summary, "scenario,direction,metric,mean,stddev")?;
    type Pick = fn(&MetricsReport<f64>) -> &ahsim_core::metrics::DirectionMetrics<f64>;
    let picks: [(&str, Pick); 2] = [
        ("downlink", |r| &r.downlink),
        ("uplink", |r| &r.uplink),
    ];
    for (label, pick) in picks {
        let mut metric = |name: &str, f: &dyn Fn(&MetricsReport<f64>) -> f64| -> Result<()> {
            let values: Vec<f64> = runs.iter().map(|r| f(&r.report)).collect();
            let (mean, std) = mean_std(&values);
            writeln!(summary, "{},{label},{name},{mean:.6},{std:.6}", cfg.name)?;
            Ok(())
        };
        metric("pdr_pct", &|r| pick(r).pdr_pct)?;
        metric("pdd_s", &|r| pick(r).pdd_s.unwrap_or(0.0))?;
        metric("eta_pct", &|r| pick(r).eta_pct)?;
    }

    let mut shares = BufWriter::new(File::create(dir.join("state_shares.csv"))?);
    writeln!(shares, "scenario,seed,state,share_pct")?;
    for run in runs {
        let (rx, tx, idle, sleep) = run.report.state_shares_pct();
        for (state, pct) in [("receiving", rx), ("transmitting", tx), ("idle", idle), ("sleeping", sleep)]
        {
            writeln!(shares, "{},{},{state},{pct:.6}", cfg.name, run.seed)?;
        }
    }

    let mut battery = BufWriter::new(File::create(dir.join("battery_lifetime.csv"))?);
    writeln!(battery, "scenario,seed,battery,lifetime_years")?;
    for run in runs {
        for row in run.report.battery_table(&cfg.energy.radio, &cfg.energy.batteries) {
            writeln!(battery, "{},{},{},{:.3}", cfg.name, run.seed, row.battery, row.lifetime_years)?;
        }
    }
    Ok(())
}
