//! Batch scenario runner and debug tools for the 802.11ah MAC simulator.
//!
//! Exit codes: 0 success, 1 failed run or failed band check, 2 configuration
//! errors (unknown scenario, parse failure, bad override).

mod output;
mod table3;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};

use ahsim_core::aid::{assign_aids, decode_aid, GroupingPolicy};
use ahsim_core::config::{apply_overrides, load_scenario};
use ahsim_core::engine::RunOptions;
use ahsim_core::phy::{select_rate, Environment, PhyProfile};
use ahsim_core::tim::{build_beacon_sequence, BeaconFrame, PendingMap, SignalingMode};
use ahsim_core::{Config, Error};

#[derive(Parser)]
#[command(name = "ahsim", version, about = "IEEE 802.11ah MAC-layer discrete-event simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario over a batch of seeds and write CSV reports.
    Run(RunArgs),
    /// Decompose association identifiers and render signaling bitmaps.
    Aid(AidArgs),
    /// Print the rate-versus-distance staircase of a PHY profile as CSV.
    Phy(PhyArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Built-in scenario: agriculture, smart-metering, industrial, animal.
    #[arg(long, conflicts_with = "config")]
    scenario: Option<String>,
    /// Scenario TOML file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated seed list.
    #[arg(long, default_value = "1", value_delimiter = ',')]
    seed: Vec<u64>,
    /// Simulated duration in seconds (overrides the scenario file).
    #[arg(long)]
    duration: Option<u64>,
    /// Config override as key=value with dotted paths, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Also write the per-frame event log CSV.
    #[arg(long)]
    events: bool,
    /// Check the batch against the reference result bands.
    #[arg(long)]
    check_table3: bool,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for the seed sweep.
    #[arg(long, default_value_t = default_jobs())]
    jobs: usize,
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

#[derive(Args)]
struct AidArgs {
    /// Raw 13-bit association identifiers to decompose.
    #[arg(value_name = "AID")]
    aids: Vec<u16>,
    /// Render DTIM/TIM bitmaps for a network of this many stations.
    #[arg(long)]
    stations: Option<usize>,
    /// AIDs with pending downlink data, comma separated.
    #[arg(long, value_delimiter = ',', requires = "stations")]
    pending: Vec<u16>,
    #[arg(long, default_value = "non-tim-offset")]
    mode: String,
    /// Spread stations round-robin over this many blocks instead of densely.
    #[arg(long)]
    round_robin_blocks: Option<u8>,
}

#[derive(Args)]
struct PhyArgs {
    #[arg(long, default_value = "outdoor")]
    environment: String,
    /// Channel width in MHz (1 or 2).
    #[arg(long, default_value_t = 2)]
    width: u8,
    /// Transmit power override in dBm.
    #[arg(long)]
    tx_power: Option<f64>,
    #[arg(long, default_value_t = 1_200.0)]
    max_distance: f64,
    #[arg(long, default_value_t = 5.0)]
    step: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Aid(args) => cmd_aid(args),
        Command::Phy(args) => cmd_phy(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::UnknownScenario(_)
        | Error::Parse(_)
        | Error::ConfigInvalid(_)
        | Error::Infeasible(_)
        | Error::BeyondCoverage { .. }
        | Error::OutOfRange { .. }
        | Error::ZeroAid
        | Error::CapacityExceeded { .. }
        | Error::OffsetOverflow { .. } => 2,
        _ => 1,
    }
}

fn parse_overrides(raw: &[String]) -> Result<Vec<(String, String)>, Error> {
    raw.iter()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| {
                    Error::ConfigInvalid(format!("override '{kv}' is not of the form key=value"))
                })
        })
        .collect()
}

fn cmd_run(args: RunArgs) -> Result<ExitCode, Error> {
    let source = match (&args.scenario, &args.config) {
        (Some(name), None) => name.clone(),
        (None, Some(path)) => path.display().to_string(),
        (None, None) => {
            return Err(Error::ConfigInvalid(
                "one of --scenario or --config is required".into(),
            ))
        }
        _ => unreachable!("clap conflicts_with"),
    };
    let mut cfg: Config = load_scenario(&source)?;
    cfg = apply_overrides(&cfg, &parse_overrides(&args.set)?)?;
    if let Some(d) = args.duration {
        cfg.duration_s = d;
    }
    cfg.validate()?;
    if args.seed.is_empty() {
        return Err(Error::ConfigInvalid("at least one seed is required".into()));
    }

    std::fs::create_dir_all(&args.out)?;
    let options = RunOptions { record_events: args.events || args.check_table3 };

    // Seed sweep over a small worker pool; results are re-sorted by seed so
    // the artifacts never depend on scheduling.
    let jobs = args.jobs.max(1).min(args.seed.len());
    let results: Mutex<Vec<(u64, Result<output::RunArtifacts, Error>)>> = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for chunk in args.seed.chunks(args.seed.len().div_ceil(jobs)) {
            let cfg = &cfg;
            let out_dir = &args.out;
            let results = &results;
            scope.spawn(move || {
                for &seed in chunk {
                    let mut run_cfg = cfg.clone();
                    run_cfg.seed = seed;
                    let artifacts = ahsim_core::run(&run_cfg, options)
                        .and_then(|out| output::write_run(out_dir, &run_cfg, out, args.events));
                    results.lock().unwrap().push((seed, artifacts));
                }
            });
        }
    });
    let mut results = results.into_inner().unwrap();
    results.sort_by_key(|(seed, _)| *seed);

    let mut artifacts = Vec::new();
    let mut failed = false;
    for (seed, result) in results {
        match result {
            Ok(a) => artifacts.push(a),
            Err(err) => {
                eprintln!("run failed: {} seed {seed}: {err}", cfg.name);
                failed = true;
            }
        }
    }
    if failed {
        return Ok(ExitCode::from(1));
    }

    output::write_batch(&args.out, &cfg, &artifacts)?;
    for a in &artifacts {
        println!("wrote {}", a.metrics_path.display());
    }
    println!("wrote {}", args.out.join("summary.csv").display());

    if args.check_table3 {
        let ok = table3::check(&cfg, &artifacts);
        if !ok {
            return Ok(ExitCode::from(1));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_aid(args: AidArgs) -> Result<ExitCode, Error> {
    for &raw in &args.aids {
        let (page, block, subblock, index) = decode_aid(raw)?;
        println!("aid {raw}: page {page}, block {block}, subblock {subblock}, index {index} (group p{page}b{block})");
    }
    if let Some(n) = args.stations {
        let mode = match args.mode.as_str() {
            "non-tim-offset" => SignalingMode::NonTimOffset,
            "tim-offset" => SignalingMode::TimOffset,
            other => {
                return Err(Error::ConfigInvalid(format!(
                    "unknown signaling mode '{other}'"
                )))
            }
        };
        let policy = match args.round_robin_blocks {
            Some(blocks) => GroupingPolicy::RoundRobin { blocks },
            None => GroupingPolicy::Dense,
        };
        let aids = assign_aids(n, policy)?;
        let assigned: std::collections::BTreeSet<u16> = aids.iter().map(|a| a.raw()).collect();
        let mut pending = PendingMap::new();
        for &raw in &args.pending {
            if !assigned.contains(&raw) {
                return Err(Error::ConfigInvalid(format!(
                    "pending aid {raw} is not assigned in a {n}-station network"
                )));
            }
            let aid = ahsim_core::aid::Aid::new(raw)?;
            pending.entry(aid.group()).or_default().push(aid);
        }
        let groups = ahsim_core::aid::groups_of(&aids);
        println!("stations {n}, groups {}, mode {}", groups.len(), args.mode);
        for beacon in build_beacon_sequence(&groups, mode, &pending)? {
            match beacon {
                BeaconFrame::Dtim(d) => println!("dtim groups: {}", d.groups_hex()),
                BeaconFrame::Tim { position, bitmaps } => {
                    for bm in bitmaps {
                        println!("tim {position:2} {}: {}", bm.group, bm.stations_hex());
                    }
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_phy(args: PhyArgs) -> Result<ExitCode, Error> {
    let environment = match args.environment.as_str() {
        "outdoor" => Environment::Outdoor,
        "indoor" => Environment::Indoor,
        other => {
            return Err(Error::ConfigInvalid(format!("unknown environment '{other}'")));
        }
    };
    let mut profile: PhyProfile<f64> = match args.width {
        1 => PhyProfile::default_1mhz(environment),
        2 => PhyProfile::default_2mhz(environment),
        w => {
            return Err(Error::ConfigInvalid(format!(
                "unsupported channel width {w} MHz (expected 1 or 2)"
            )));
        }
    };
    if let Some(tx) = args.tx_power {
        profile.tx_power_dbm = tx;
    }
    if args.step <= 0.0 || args.max_distance <= 0.0 {
        return Err(Error::ConfigInvalid("step and max-distance must be positive".into()));
    }
    println!("distance_m,rate_kbps");
    let mut d = args.step;
    while d <= args.max_distance {
        match select_rate(d, &profile) {
            Ok(rate) => println!("{d:.1},{rate}"),
            Err(_) => println!("{d:.1},0"),
        }
        d += args.step;
    }
    Ok(ExitCode::SUCCESS)
}
