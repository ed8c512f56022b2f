use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use timebin::pipeline::QptMethod;
use timebin_cli::{ingest_counts, run_scenario, Scenario, ScenarioName};

#[derive(Parser)]
#[command(
    name = "timebin",
    version,
    about = "Time-bin controlled-phase gate simulation and tomography"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its artifacts.
    Run {
        /// ideal-qpt, noisy-qpt, entangle, cnot-table, qst-single or deconvolve
        #[arg(long)]
        scenario: ScenarioName,
        /// Noise configuration (JSON, or TOML with a .toml extension)
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Infinite-statistics mode
        #[arg(long)]
        exact: bool,
        /// Integration time per measurement setting in seconds
        #[arg(long, default_value_t = 600.0)]
        duration: f64,
        /// Bootstrap replicas for noisy-qpt error bars (0 disables)
        #[arg(long, default_value_t = 100)]
        bootstrap: usize,
        /// χ fit: `joint` (all counts) or `states` (per-input states)
        #[arg(long, default_value = "joint")]
        qpt_method: QptMethod,
        /// Use the 16-setting two-qubit projector set
        #[arg(long)]
        minimal_projectors: bool,
        /// Measured χ for the deconvolve scenario
        #[arg(long)]
        total: Option<PathBuf>,
        /// χ_input for the deconvolve scenario
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Validate a count CSV file and print a summary.
    Ingest { path: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TIMEBIN_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run {
            scenario,
            config,
            out,
            seed,
            exact,
            duration,
            bootstrap,
            qpt_method,
            minimal_projectors,
            total,
            input,
        } => {
            let s = Scenario {
                config_path: config,
                seed,
                exact,
                duration_s: duration,
                bootstrap,
                qpt_method,
                minimal_projectors,
                total_chi: total,
                input_chi: input,
                ..Scenario::new(scenario, out)
            };
            let out = run_scenario(&s)?;
            for path in &out.files {
                log::info!("wrote {}", path.display());
            }
            for line in &out.summary {
                println!("{line}");
            }
        }
        Command::Ingest { path } => {
            let rows = ingest_counts(&path)?;
            let inputs: std::collections::BTreeSet<String> =
                rows.iter().map(|r| r.input.to_string()).collect();
            let total: u64 = rows.iter().map(|r| r.counts).sum();
            println!(
                "{} records, {} inputs, {} counts",
                rows.len(),
                inputs.len(),
                total
            );
        }
    }
    Ok(())
}
