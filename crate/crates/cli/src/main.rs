use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use corrbath_cli::commands::{self, Options, Outcome};

/// Correlated initial states coupled to a thermal bosonic reservoir: Davies
/// generators, exact finite-bath dynamics and the Markovian decomposition.
#[derive(Parser)]
#[command(name = "corrbath", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for independent scenario runs.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Largest composite dimension any engine may allocate.
    #[arg(long = "max-dim", global = true)]
    max_dim: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Report assumptions (A1) and (A2a); exit 1 if either fails.
    Check,
    /// Export the Davies generator and its spectral decomposition for each coupling.
    Davies,
    /// Exact and Markovian trajectories for every scenario and coupling.
    Simulate,
    /// Fits and assertions on the trajectories of a previous `simulate`.
    Analyze,
    /// `simulate` followed by `analyze`.
    Sweep,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = Options { config: cli.config, out: cli.out, workers: cli.workers, max_dim: cli.max_dim };
    let result = match cli.command {
        Command::Check => commands::check(&opts),
        Command::Davies => commands::davies(&opts),
        Command::Simulate => commands::simulate(&opts),
        Command::Analyze => commands::analyze(&opts),
        Command::Sweep => commands::sweep(&opts),
    };
    match result {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Failed(why)) => {
            eprintln!("failed: {why}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
