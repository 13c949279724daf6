//! Declarative experiment runner for the velocity-flip harmonic chain.

pub mod config;
pub mod output;
pub mod plot;
pub mod pool;
pub mod runner;

use std::path::PathBuf;

use thiserror::Error;

use config::{ConfigError, ExperimentConfig, Kind};
use output::RunOutput;
use runner::Exec;

/// Overrides from the command line.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub max_events: Option<f64>,
    /// Omit timestamps from generated files.
    pub deterministic: bool,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("estimated {estimated:.3e} flip events exceed the cap {cap:.3e}")]
    Budget { estimated: f64, cap: f64 },
    #[error(transparent)]
    Failed(#[from] anyhow::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Budget { .. } => 2,
            RunError::Failed(_) => 1,
        }
    }
}

/// Result of a completed run.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub output: RunOutput,
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.output.passed()
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

/// Runs the experiment without writing files.
pub fn run_in_memory(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutput, RunError> {
    config.validate()?;
    let estimated = config.estimated_events();
    if let Some(cap) = opts.max_events {
        if estimated > cap {
            return Err(RunError::Budget { estimated, cap });
        }
    }
    let exec = Exec {
        seed: config.seed,
        threads: opts.threads.unwrap_or_else(rayon::current_num_threads),
    };
    Ok(match config.kind {
        Kind::Hydro => runner::run_hydro(config, exec)?,
        Kind::Equilibrium => runner::run_equilibrium(config, exec)?,
        Kind::MatrixVerify => runner::run_matrix_verify(config, exec)?,
        Kind::WignerLe => runner::run_wigner_le(config, exec)?,
    })
}

/// Applies overrides, runs, and writes results.csv, report.json and plots.
pub fn execute(mut config: ExperimentConfig, opts: &RunOptions) -> Result<Outcome, RunError> {
    if let Some(s) = opts.seed {
        config.seed = s;
    }
    if let Some(d) = &opts.output_dir {
        config.output_dir = d.clone();
    }
    let output = run_in_memory(&config, opts)?;
    let stamp = (!opts.deterministic).then(|| {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        format!("unix time {secs}")
    });
    let files = output::write_all(&config.output_dir, &config, &output, stamp.as_deref())?;
    Ok(Outcome {
        output,
        output_dir: config.output_dir,
        files,
    })
}
