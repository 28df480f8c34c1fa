use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use povm_cli::commands::{
    demo_envariance, demo_meters, demo_sum_rule, parse_matrix_file, reconstruct_device, verify_born, DEFAULT_SEED,
};
use povm_cli::{emit, parse_experiment_spec, run_suite_with, CommandError, OutputFormat, RunOptions, Tabulate};

/// Simulate entangled-pair flash experiments and verify probability rules.
#[derive(Parser)]
#[command(name = "povm", version)]
struct Cli {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Structured)]
    format: OutputFormat,
    /// Seed for random draws; overrides the seed of a spec file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Include per-section wall-clock times (makes output non-reproducible).
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment spec file.
    Run { spec: PathBuf },
    /// Built-in demonstrations.
    Demo {
        #[arg(value_enum)]
        which: Demo,
        #[arg(long, default_value_t = 3)]
        n: usize,
    },
    /// Recover a device's operator from its probability rule.
    Reconstruct { device: PathBuf },
    /// Check that a device measuring an observable is an eigenspace projector.
    VerifyBorn {
        device: PathBuf,
        observable: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Demo {
    /// `U` on one particle undone by `U*` on the other.
    Fig2,
    /// Correlated meter readings on the entangled pair.
    Fig3,
    /// Flash probability of variants a–c and the basis-sum rule.
    Fig4,
}

fn read(path: &Path) -> Result<String, CommandError> {
    std::fs::read_to_string(path).map_err(|source| CommandError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_report<T: Serialize + Tabulate>(cli: &Cli, report: &T) -> Result<ExitCode, CommandError> {
    let text = emit(report, cli.format);
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|source| CommandError::Io {
            path: path.display().to_string(),
            source,
        })?,
        None => print!("{text}"),
    }
    Ok(ExitCode::from(if report.numerical_failure() {
        3
    } else if report.passed() {
        0
    } else {
        1
    }))
}

fn execute(cli: &Cli) -> Result<ExitCode, CommandError> {
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    match &cli.command {
        Command::Run { spec } => {
            let mut spec = parse_experiment_spec(&read(spec)?)?;
            if let Some(s) = cli.seed {
                spec.seed = s;
            }
            let report = run_suite_with(&spec, RunOptions { timings: cli.timings })?;
            write_report(cli, &report)
        }
        Command::Demo { which, n } => match which {
            Demo::Fig2 => write_report(cli, &demo_envariance(*n, seed)?),
            Demo::Fig3 => write_report(cli, &demo_meters(*n, seed)?),
            Demo::Fig4 => write_report(cli, &demo_sum_rule(*n, seed)?),
        },
        Command::Reconstruct { device } => {
            let matrix = parse_matrix_file(&read(device)?)?;
            write_report(cli, &reconstruct_device(matrix, seed)?)
        }
        Command::VerifyBorn {
            device,
            observable,
            lambda,
        } => {
            let a = parse_matrix_file(&read(device)?)?;
            let o = parse_matrix_file(&read(observable)?)?;
            write_report(cli, &verify_born(a, o, *lambda)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
