//! Config-driven experiments: parse a TOML description, run the requested
//! tasks and write reproducible artifacts with a manifest.

pub mod config;
pub mod error;
pub mod output;
pub mod tasks;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{ExperimentConfig, Task};
pub use error::CliError;
use output::Artifacts;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides `output_dir` from the config.
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps; defaults to the available parallelism.
    pub workers: Option<usize>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub files: Vec<String>,
    /// Tasks that failed after validation, in task order.
    pub failures: Vec<(Task, CliError)>,
}

impl RunOutcome {
    /// Exit status of the first failure, or 0.
    pub fn exit_code(&self) -> i32 {
        self.failures.first().map_or(0, |(_, e)| e.exit_code())
    }
}

/// Runs `tasks` (or the config's own list) and writes artifacts.
///
/// Config problems are reported before anything touches the file system.
pub fn run(config_path: &Path, tasks: Option<Vec<Task>>, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    let (cfg, raw) = ExperimentConfig::load(config_path)?;
    run_config(&cfg, &raw, tasks, opts)
}

pub fn run_config(
    cfg: &ExperimentConfig,
    raw: &[u8],
    tasks: Option<Vec<Task>>,
    opts: &RunOptions,
) -> Result<RunOutcome, CliError> {
    let mut tasks = tasks.unwrap_or_else(|| cfg.tasks.clone());
    tasks.sort();
    tasks.dedup();
    cfg.validate(&tasks)?;
    let dir = opts
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| CliError::Config("no output directory (set output_dir or pass --out)".into()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;

    let mut artifacts = Artifacts::default();
    let mut cache = tasks::SolveCache::default();
    let mut failures = Vec::new();
    for &task in &tasks {
        let start = Instant::now();
        let result = pool.install(|| match task {
            Task::Reference => tasks::reference(cfg, &mut artifacts),
            Task::Bounds => tasks::bounds(cfg, &mut artifacts),
            Task::Certify => tasks::certify(cfg, &mut artifacts),
            Task::Roots1d => tasks::roots1d(cfg, &mut artifacts),
            Task::Solve => tasks::solve(cfg, &mut cache, &mut artifacts),
            Task::Decay => tasks::decay(cfg, &mut cache, &mut artifacts),
            Task::Sweep => tasks::sweep(cfg, &mut artifacts),
        });
        // timing goes to the log only, so artifacts stay byte-identical
        log::info!("task {} finished in {:.3} s", task.name(), start.elapsed().as_secs_f64());
        if let Err(e) = result {
            log::error!("task {} failed: {e}", task.name());
            failures.push((task, e));
        }
    }

    let names = tasks.iter().map(|t| t.name()).collect();
    let failed = failures.iter().map(|(t, e): &(Task, CliError)| (t.name(), e.to_string())).collect();
    artifacts.write(&dir, raw, names, failed)?;
    let mut files = artifacts.names();
    files.push("manifest.json".into());
    Ok(RunOutcome { dir, files, failures })
}
