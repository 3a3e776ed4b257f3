//! Reproducible experiment runner: every verification and estimation
//! pipeline of the engine as a subcommand with a config file, a mandatory
//! seed, and CSV/JSON outputs that replay bit-for-bit.

mod config;
mod report;
mod runners;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{catalog, ExperimentConfig, ExperimentKind};
use report::{content_hash, write_json, RunReport};

#[derive(Parser)]
#[command(
    name = "startri",
    about = "Star-triangle percolation experiments: kernels, sweeps, crossings, growth"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config file (flat key=value lines).
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config trial count.
    #[arg(long)]
    trials: Option<u64>,
    /// Output base path; writes `<out>.csv` and `<out>.json`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (affects speed only; outputs are schedule-independent).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Exhaustive star-triangle kernel verification over a self-dual grid.
    VerifyKernel(RunArgs),
    /// Monte Carlo box-crossing estimation (optionally vs the exact oracle).
    Crossing(RunArgs),
    /// Path transport drift bounds and openness checks.
    Transport(RunArgs),
    /// Interface-height process of down sweeps, with walk domination.
    HeightProcess(RunArgs),
    /// Growth process: first-passage equivalence or tail bound.
    Growth(RunArgs),
    /// Cluster radius statistics across the critical surface.
    Cluster(RunArgs),
    /// Two-step Markov chain stochastic-domination checks.
    Domination(RunArgs),
    /// Print the machine-readable experiment catalog.
    ListExperiments,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::ListExperiments => {
            let text = serde_json::to_string_pretty(&catalog()).expect("catalog serializes");
            println!("{text}");
            return ExitCode::SUCCESS;
        }
        Command::VerifyKernel(a) => (ExperimentKind::VerifyKernel, a),
        Command::Crossing(a) => (ExperimentKind::Crossing, a),
        Command::Transport(a) => (ExperimentKind::Transport, a),
        Command::HeightProcess(a) => (ExperimentKind::HeightProcess, a),
        Command::Growth(a) => (ExperimentKind::Growth, a),
        Command::Cluster(a) => (ExperimentKind::Cluster, a),
        Command::Domination(a) => (ExperimentKind::Domination, a),
    };
    match execute(kind, &args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            // engine invariant violations are bug signals, distinct from
            // config mistakes and statistical failures
            let invariant = e
                .downcast_ref::<startri::Error>()
                .map(|se| matches!(se, startri::Error::InvariantViolation(_)))
                .unwrap_or(false);
            if invariant {
                ExitCode::from(3)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn execute(kind: ExperimentKind, args: &RunArgs) -> Result<bool> {
    if let Some(threads) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("thread pool already initialised")?;
    }
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("cannot read {}", args.config.display()))?;
    let mut overrides = Vec::new();
    if let Some(seed) = args.seed {
        overrides.push(("seed".to_string(), seed.to_string()));
    }
    if let Some(trials) = args.trials {
        overrides.push(("trials".to_string(), trials.to_string()));
    }
    let config = ExperimentConfig::parse(&text, &overrides)?;
    if config.experiment != kind {
        anyhow::bail!(
            "config declares experiment `{}` but the `{}` subcommand was invoked",
            config.experiment.name(),
            kind.name()
        );
    }
    let output = runners::run(&config)?;
    let pass = output.verdicts.iter().all(|v| v.pass);
    let run_report = RunReport {
        experiment: kind.name().to_string(),
        config_hash: content_hash(&config.canonical()),
        config: config.values.clone(),
        verdicts: output.verdicts,
        pass,
        csv_rows: output.csv.rows.len(),
    };
    for v in &run_report.verdicts {
        println!(
            "{}: {} ({})",
            v.name,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    if let Some(out) = &args.out {
        let csv_path = out.with_extension("csv");
        let json_path = out.with_extension("json");
        output.csv.write(&csv_path)?;
        write_json(&run_report, &json_path)?;
        println!(
            "wrote {} rows to {} and summary to {}",
            run_report.csv_rows,
            csv_path.display(),
            json_path.display()
        );
    } else {
        println!("{}", serde_json::to_string_pretty(&run_report)?);
    }
    Ok(pass)
}
