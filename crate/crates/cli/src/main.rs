//! `pdgate`: simulate and sweep logic-gate protocols on period-doubled
//! oscillator networks.
//!
//! Exit codes: 0 success, 1 configuration error (including bad flags),
//! 2 numerical or runtime failure.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use pdgate_core::basins::{basin_scan_lab, basin_scan_rotating, Frame};
use pdgate_core::config::RunConfig;
use pdgate_core::error::Error;
use pdgate_core::protocols::{GateClass, Runner};
use pdgate_core::sweep::{
    export_basins, export_grid, export_reset, export_trajectory, simulate_once, sweep_flip,
    sweep_gate, sweep_reset, ReadoutSummary,
};

/// Environment variable holding the default worker thread count.
const THREADS_ENV: &str = "PDGATE_THREADS";

#[derive(Parser)]
#[command(
    name = "pdgate",
    version,
    about = "Logic gates on period-doubled states of driven dissipative networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration: a .toml file, or the .json metadata echo of a
    /// previous run
    #[arg(long)]
    config: PathBuf,
    /// Override one config value, e.g. --set sweep.Tq.count=3 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Override integration.rng_seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: $PDGATE_THREADS, else all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory (default: the config's [output] dir)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured protocol once and dump trajectory + readout
    Simulate(Common),
    /// Bit-flip success map over (coupling, T_q)
    FlipScan(Common),
    /// One full truth table of the configured gate
    Gate(Common),
    /// Gate success map over (coupling, T_q)
    GateScan(Common),
    /// Basin-of-attraction map (lab or rotating frame per the config)
    Basins(Common),
    /// Reset-protocol phase distance over T_q
    ResetScan(Common),
    /// Parse and validate a configuration, then exit
    ValidateConfig(Common),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // includes --help/--version, which should exit 0
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::InvalidParams(_)
        | Error::InvalidConfig(_)
        | Error::ConfigParse(_)
        | Error::Schedule(_)
        | Error::VariantMismatch => 1,
        _ => 2,
    }
}

fn parse_overrides(common: &Common) -> Result<Vec<(String, String)>, Error> {
    let mut overrides = Vec::new();
    for item in &common.set {
        let Some((key, value)) = item.split_once('=') else {
            return Err(Error::ConfigParse(format!(
                "--set expects KEY=VALUE, got '{item}'"
            )));
        };
        overrides.push((key.to_string(), value.to_string()));
    }
    if let Some(seed) = common.seed {
        overrides.push(("integration.rng_seed".to_string(), seed.to_string()));
    }
    Ok(overrides)
}

fn init_threads(common: &Common) {
    let threads = common.threads.or_else(|| {
        std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn load(common: &Common) -> Result<(RunConfig, PathBuf), Error> {
    let overrides = parse_overrides(common)?;
    let cfg = RunConfig::load(&common.config, &overrides)?;
    init_threads(common);
    let out_dir = common.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    Ok((cfg, out_dir))
}

fn run(command: &Command) -> Result<(), Error> {
    match command {
        Command::ValidateConfig(common) => {
            let overrides = parse_overrides(common)?;
            RunConfig::load(&common.config, &overrides)?;
            println!("OK: {}", common.config.display());
            Ok(())
        }
        Command::Simulate(common) => {
            let (cfg, out_dir) = load(common)?;
            let artifacts = simulate_once(&cfg)?;
            let model = cfg.build_model()?;
            let prefix = cfg.output.prefix.clone();
            let traj_path =
                export_trajectory(&artifacts.trajectory, &model, &out_dir, &prefix)?;
            let runner = Runner::new(model, cfg.numerics())?;
            let summary =
                ReadoutSummary::new(&artifacts.readout, runner.calibration().r_min);
            let record = serde_json::json!({
                "outcome": artifacts.outcome,
                "readout": summary,
            });
            let json_path = out_dir.join(format!("{prefix}.outcome.json"));
            std::fs::write(&json_path, serde_json::to_string_pretty(&record).unwrap())?;
            for w in artifacts.trajectory.warnings() {
                eprintln!("warning: {w}");
            }
            println!("trajectory: {}", traj_path.display());
            println!("outcome:    {}", json_path.display());
            println!("{}", serde_json::to_string_pretty(&record["readout"]).unwrap());
            Ok(())
        }
        Command::Gate(common) => {
            let (cfg, out_dir) = load(common)?;
            let kind = cfg.gate_kind()?;
            let t_q = cfg.protocol()?.t_q.ok_or_else(|| {
                Error::InvalidConfig("gate needs protocol.t_q".into())
            })?;
            let runner = Runner::new(cfg.build_model()?, cfg.numerics())?;
            let seed = cfg.integration.noise.then_some(cfg.integration.rng_seed);
            let table = runner.run_truth_table(kind, t_q, seed)?;
            println!("inputs  output  expected  class");
            for o in &table.outcomes {
                println!(
                    "({}, {})  {}       {}         {:?}",
                    o.inputs.0 as u8, o.inputs.1 as u8, o.output, o.expected, o.classification
                );
            }
            println!("aggregate: {:?}", table.aggregate);
            let json_path = out_dir.join(format!("{}.table.json", cfg.output.prefix));
            if let Some(parent) = json_path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(&json_path, serde_json::to_string_pretty(&table).unwrap())?;
            println!("record: {}", json_path.display());
            if table.aggregate == GateClass::Fail {
                eprintln!("note: gate failed at this (coupling, T_q) point");
            }
            Ok(())
        }
        Command::FlipScan(common) => {
            let (cfg, out_dir) = load(common)?;
            let prefix = cfg.output.prefix.clone();
            let journal = out_dir.join(format!("{prefix}.cells.jsonl"));
            std::fs::create_dir_all(&out_dir)?;
            let grid = sweep_flip(&cfg, Some(&journal))?;
            let path = export_grid(&grid, &cfg, &out_dir, &prefix)?;
            println!("flip map: {}", path.display());
            Ok(())
        }
        Command::GateScan(common) => {
            let (cfg, out_dir) = load(common)?;
            let prefix = cfg.output.prefix.clone();
            let journal = out_dir.join(format!("{prefix}.cells.jsonl"));
            std::fs::create_dir_all(&out_dir)?;
            let grid = sweep_gate(&cfg, Some(&journal))?;
            let path = export_grid(&grid, &cfg, &out_dir, &prefix)?;
            println!("gate map: {}", path.display());
            Ok(())
        }
        Command::ResetScan(common) => {
            let (cfg, out_dir) = load(common)?;
            let table = sweep_reset(&cfg)?;
            let path = export_reset(&table, &cfg, &out_dir, &cfg.output.prefix)?;
            let marked = table.delta_phi.iter().filter(|v| v.is_none()).count();
            println!("reset scan: {} ({} undefined cells)", path.display(), marked);
            Ok(())
        }
        Command::Basins(common) => {
            let (cfg, out_dir) = load(common)?;
            let (frame, x, y, scan) = cfg.basin_scan()?;
            let model = cfg.build_model_with_topology(
                pdgate_core::models::Topology::isolated(1),
            )?;
            let params = match model {
                pdgate_core::models::Model::Dpo(p) => p,
                _ => {
                    return Err(Error::InvalidConfig(
                        "basin scans are defined for the DPO".into(),
                    ))
                }
            };
            let map = match frame {
                Frame::Lab => basin_scan_lab(&params, x, y, &scan)?,
                Frame::Rotating => basin_scan_rotating(&params, x, y, &scan)?,
            };
            let path = export_basins(&map, &cfg, &out_dir, &cfg.output.prefix)?;
            if frame == Frame::Rotating {
                println!(
                    "unreachable cells: {:.1}%",
                    100.0 * map.unreachable_fraction()
                );
            }
            println!("basin map: {}", path.display());
            Ok(())
        }
    }
}
