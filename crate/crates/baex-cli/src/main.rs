//! `baex` — trains Bayesian autoencoder ensembles over multi-sensor
//! run-to-failure data, attributes predictions to sensors, and scores the
//! explanations against covariate-shift ground truth.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use baex::pipeline::{synth_drift, write_cube_binary, write_cube_csv, SynthConfig};
use baex::seed_for;
use baex_cli::config::{load_config, DataSource};
use baex_cli::experiment::run_experiment;
use baex_cli::report::{compare_runs, emit_report};

#[derive(Parser)]
#[command(
    name = "baex",
    about = "Bayesian autoencoder ensembles with scored per-sensor explanations",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full experiment sweep described by a config file.
    Run {
        /// Experiment config (flat key = value with section headers).
        config: PathBuf,
        /// Output directory for records, checkpoints and reports.
        #[arg(long)]
        out: PathBuf,
        /// Override the config's root seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Generate a synthetic drift cube (train cycles followed by test
    /// cycles) and write it to a file (.csv or binary otherwise).
    Synth {
        config: PathBuf,
        /// Output cube path; `.csv` writes CSV, anything else binary.
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-emit tables and plots from a directory of run records.
    Report {
        /// A run output directory (or its records/ subdirectory).
        records: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare methods across one or more record directories.
    Compare {
        /// Record directories to pool.
        records: Vec<PathBuf>,
        /// Metric to rank on: seqi | g_sdc | g_sser | pearson | mcc.
        #[arg(long, default_value = "seqi")]
        metric: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            jobs,
        } => {
            if let Some(n) = jobs {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .context("initialising the thread pool")?;
            }
            let cfg = load_config(&config)?;
            let summary = run_experiment(&cfg, Some(&out), seed)?;
            for diag in &summary.diagnostics {
                eprintln!("note: {diag}");
            }
            println!(
                "{} records written to {}",
                summary.records.len(),
                out.join("records").display()
            );
            let written = emit_report(&summary.records, &out.join("report"))?;
            println!("report: {} files under {}", written.len(), out.join("report").display());
            Ok(())
        }
        Command::Synth { config, out } => {
            let cfg = load_config(&config)?;
            if cfg.data.source != DataSource::Synth {
                bail!("synth command needs a config with source = synth");
            }
            let synth = SynthConfig {
                sensors: cfg.data.sensors,
                features: cfg.data.features,
                train_cycles: cfg.data.train_cycles,
                test_cycles: cfg.data.test_cycles,
                drift_profile: cfg.data.drift_profile,
                drift_amplitude: cfg.data.drift_amplitude,
                noise_level: cfg.data.noise_level,
                drift_sensors: cfg.data.drift_sensors.clone(),
                seed: seed_for(cfg.run.seed, "synth", 0),
            };
            let (train, test, shift) = synth_drift(&synth)?;
            let combined = train.concat_cycles(&test)?;
            if out.extension().is_some_and(|e| e == "csv") {
                write_cube_csv(&combined, &out)?;
            } else {
                write_cube_binary(&combined, &out)?;
            }
            println!(
                "wrote {} cycles x {} sensors x {} features to {} \
                 (first {} cycles are the training phase; drifting sensors: {:?})",
                combined.cycles(),
                combined.sensors(),
                combined.features(),
                out.display(),
                train.cycles(),
                shift
            );
            Ok(())
        }
        Command::Report { records, out } => {
            let records_dir = if records.join("records").is_dir() {
                records.join("records")
            } else {
                records
            };
            let loaded = baex_cli::experiment::load_records(&records_dir)?;
            let written = emit_report(&loaded, &out)?;
            println!("report: {} files under {}", written.len(), out.display());
            Ok(())
        }
        Command::Compare {
            records,
            metric,
            out,
        } => {
            if records.is_empty() {
                bail!("compare needs at least one records directory");
            }
            let written = compare_runs(&records, &metric, &out)?;
            for path in written {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}
