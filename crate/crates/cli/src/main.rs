//! Command-line driver for the fingerprinting experiments.
//!
//! Subcommands: `run-once` (one experiment at one Eb/N0), `montecarlo`
//! (the full sweep), `calibrate-evm` (operating-point scan) and
//! `emit-plot-data` (reshape emitted CSVs per figure). Master-seed
//! precedence: `--seed` flag, then `RFF_SEED`, then the config value.
//! On failure one machine-readable JSON line goes to stderr and the exit
//! code is nonzero.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use rff_core::features::FeatureKind;
use rff_core::harness::{
    calibrate_evm, emit_calibration, emit_montecarlo, emit_plot_data, emit_single_experiment,
    run_montecarlo, run_single_experiment, ExperimentConfig, PlotFigure,
};
use rff_core::with_threads;

#[derive(Parser)]
#[command(name = "rff", about = "OFDM transmitter fingerprinting experiments")]
struct Cli {
    /// Worker threads for the data-parallel loops (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment at a single Eb/N0 and emit its CSVs.
    RunOnce {
        #[arg(long)]
        config: PathBuf,
        /// Eb/N0 in dB for this experiment.
        #[arg(long)]
        ebn0: f64,
        /// Experiment seed (overrides RFF_SEED and the config master seed).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the Monte Carlo sweep over the configured Eb/N0 grid.
    Montecarlo {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the configured number of trials.
        #[arg(long)]
        trials: Option<usize>,
        /// Override the master seed (same precedence as run-once).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Scan the PA operating point and report per-transmitter EVM.
    CalibrateEvm {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reshape previously emitted CSVs into one plot-data file.
    EmitPlotData {
        /// Directory holding summary.csv / scatter.csv.
        #[arg(long = "in")]
        in_dir: PathBuf,
        /// One of: scatter-f1, scatter-f2, scatter-fe, rates.
        #[arg(long)]
        figure: String,
    },
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var("RFF_SEED") {
        Ok(text) => {
            let seed = text
                .parse::<u64>()
                .with_context(|| format!("RFF_SEED must be a u64, got {text:?}"))?;
            Ok(Some(seed))
        }
        Err(_) => Ok(None),
    }
}

/// Flag > environment > config.
fn resolve_seed(flag: Option<u64>, config_seed: u64) -> Result<u64> {
    Ok(flag.or(env_seed()?).unwrap_or(config_seed))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::RunOnce {
            config,
            ebn0,
            seed,
            out,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let seed = resolve_seed(seed, cfg.master_seed)?;
            let report = with_threads(cli.threads, || run_single_experiment(&cfg, ebn0, seed))?;
            emit_single_experiment(&report, &cfg, &out)?;
            for kind in [FeatureKind::F1, FeatureKind::F2, FeatureKind::Fe] {
                let acc = report.report_for(kind);
                let rates: Vec<String> = acc
                    .entries
                    .iter()
                    .map(|e| format!("k={} {:.4}", e.k, e.rate))
                    .collect();
                println!("{}: {}", kind.as_str(), rates.join("  "));
            }
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Montecarlo {
            config,
            out,
            trials,
            seed,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(t) = trials {
                cfg.trials = t;
            }
            cfg.master_seed = resolve_seed(seed, cfg.master_seed)?;
            let mc = with_threads(cli.threads, || run_montecarlo(&cfg))?;
            emit_montecarlo(&mc, &cfg, &out)?;
            println!(
                "completed {} of {} trials over {} grid points",
                mc.completed.len(),
                mc.trials_requested * mc.eb_n0_grid_db.len(),
                mc.eb_n0_grid_db.len()
            );
            if !mc.failures.is_empty() {
                println!("{} trial(s) failed; see failures.csv", mc.failures.len());
            }
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::CalibrateEvm { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let report = with_threads(cli.threads, || calibrate_evm(&cfg))?;
            emit_calibration(&report, &cfg, &out)?;
            match report.chosen_row() {
                Some(row) => {
                    let evm: Vec<String> = row.evm_db.iter().map(|e| format!("{e:.2}")).collect();
                    println!(
                        "calibrated input_rms = {:.6} (EVM dB: {})",
                        row.input_rms,
                        evm.join(", ")
                    );
                }
                None => println!("calibration failed: no scanned scale lands in the EVM band"),
            }
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::EmitPlotData { in_dir, figure } => {
            let figure: PlotFigure = figure.parse::<PlotFigure>()?;
            let path = emit_plot_data(&in_dir, figure)?;
            println!("wrote {}", path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // One machine-readable line on stderr.
            eprintln!("{}", serde_json::json!({ "error": format!("{e:#}") }));
            ExitCode::FAILURE
        }
    }
}
