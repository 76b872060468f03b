use clap::{Parser, Subcommand};
use perfsim::{RunError, ScenarioConfig};
use std::path::PathBuf;
use std::process::ExitCode;

/// Strategic classification scenarios: retraining dynamics, aggregate responses and estimation.
#[derive(Parser)]
#[command(name = "perfsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its data files.
    Run {
        /// Scenario config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the population size.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Parse and range-check a config without running it.
    Validate {
        /// Scenario config (JSON).
        #[arg(long)]
        config: PathBuf,
    },
}

fn execute(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Run { config, out, seed, samples } => {
            let mut cfg = ScenarioConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(n) = samples {
                cfg.n = n;
            }
            for path in perfsim::run(&cfg, &out)? {
                println!("{}", path.display());
            }
        }
        Command::Validate { config } => {
            let cfg = ScenarioConfig::load(&config)?;
            cfg.validate()?;
            println!("{}: ok ({})", config.display(), cfg.scenario.name());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("perfsim: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
