use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use quarterlab_cli::{run, RunOptions, Task};

#[derive(Parser)]
#[command(name = "quarterlab", version, about = "Quarter-plane Robin spectra from experiment configs")]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parameter sweeps.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every task listed in the config.
    Run,
    /// Lowest eigenpairs on each configured grid.
    Solve,
    /// Analytic bounds report.
    Bounds,
    /// Bound-state certificate.
    Certify,
    /// Interval Robin eigenvalues.
    Roots1d,
    /// Closed-form constant-potential reference.
    Reference,
    /// Ground-state decay profile and fit.
    Decay,
    /// Parameter sweep.
    Sweep,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let Some(config) = cli.config else {
        eprintln!("error: --config is required");
        return ExitCode::from(2);
    };
    let tasks = match cli.command {
        Command::Run => None,
        Command::Solve => Some(vec![Task::Solve]),
        Command::Bounds => Some(vec![Task::Bounds]),
        Command::Certify => Some(vec![Task::Certify]),
        Command::Roots1d => Some(vec![Task::Roots1d]),
        Command::Reference => Some(vec![Task::Reference]),
        Command::Decay => Some(vec![Task::Decay]),
        Command::Sweep => Some(vec![Task::Sweep]),
    };
    let opts = RunOptions { out: cli.out, workers: cli.workers };
    match run(&config, tasks, &opts) {
        Ok(outcome) => {
            for name in &outcome.files {
                println!("{}", outcome.dir.join(name).display());
            }
            for (task, err) in &outcome.failures {
                eprintln!("error in {}: {err}", task.name());
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
