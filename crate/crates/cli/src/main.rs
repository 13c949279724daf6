use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};
use hydrochain_cli::config::ExperimentConfig;
use hydrochain_cli::{execute, RunError, RunOptions};

#[derive(Parser)]
#[command(name = "hydrochain", version, about = "Velocity-flip harmonic chain experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config file.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        /// Abort when the estimated number of flips exceeds this cap.
        #[arg(long)]
        max_events: Option<f64>,
        /// Keep generated files free of timestamps.
        #[arg(long, default_value_t = true, num_args = 0..=1, default_missing_value = "true", action = ArgAction::Set)]
        deterministic: bool,
    },
    /// Run the built-in matrix identity sweep.
    VerifyMatrix {
        #[arg(long, default_value = "default")]
        preset: String,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (config, mut opts) = match cli.command {
        Command::Run {
            config,
            seed,
            threads,
            max_events,
            deterministic,
        } => match ExperimentConfig::load(&config) {
            Ok(c) => (
                c,
                RunOptions {
                    seed,
                    threads,
                    max_events,
                    deterministic,
                    output_dir: None,
                },
            ),
            Err(e) => return fail(&RunError::from(e)),
        },
        Command::VerifyMatrix { preset, threads } => {
            if preset != "default" {
                eprintln!("error: unknown preset `{preset}`");
                return ExitCode::from(2);
            }
            (
                ExperimentConfig::matrix_preset(),
                RunOptions {
                    threads,
                    deterministic: true,
                    ..Default::default()
                },
            )
        }
    };
    if let Some(dir) = std::env::var_os("HYDROCHAIN_OUT") {
        opts.output_dir = Some(PathBuf::from(dir));
    }
    let events = config.estimated_events();
    if events > 0.0 {
        eprintln!("estimated flip events: {events:.3e}");
    }
    match execute(config, &opts) {
        Ok(outcome) => {
            for c in &outcome.output.checks {
                println!(
                    "{} {:<40} observed {:.4e} threshold {:.4e}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.id,
                    c.observed,
                    c.threshold
                );
            }
            println!("wrote {} files to {}", outcome.files.len(), outcome.output_dir.display());
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => fail(&e),
    }
}

fn fail(e: &RunError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}
