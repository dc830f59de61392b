//! Command implementations behind the `cevi` binary.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use cevi::{CensoringError, DistributionError, EstimatorError, McError};
use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub mod asym;
pub mod estimate;
pub mod figures;
pub mod simulate;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Censoring(#[from] CensoringError),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    MonteCarlo(#[from] McError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: io::Error,
    },
    #[error(transparent)]
    Stdout(#[from] io::Error),
}

#[derive(Debug, Parser)]
#[command(name = "cevi", version, about = "Extreme value index estimation under random right-censoring")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the tail index of a `z,delta` CSV sample over a range of k.
    Estimate(estimate::EstimateArgs),
    /// Monte Carlo median bias and MSE curves for a censoring model.
    Simulate(simulate::SimulateArgs),
    /// Tabulate asymptotic variances, biases and lambda for a model.
    Asym(asym::AsymArgs),
    /// Regenerate the six bias/MSE panels and a gnuplot script.
    Figures(figures::FiguresArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct KRange {
    #[arg(long)]
    pub k_min: Option<usize>,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub k_step: usize,
}

#[derive(Debug, Clone, Args)]
pub struct Output {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Output {
    /// Writes through `f` to `--out` or to `stdout`.
    fn write_with<F>(&self, stdout: &mut dyn Write, f: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut dyn Write) -> Result<(), CliError>,
    {
        match &self.out {
            Some(path) => {
                let mut w = BufWriter::new(create(path)?);
                f(&mut w)?;
                w.flush().map_err(|e| io_error(path, e))
            }
            None => f(stdout),
        }
    }
}

pub(crate) fn create(path: &Path) -> Result<File, CliError> {
    File::create(path).map_err(|e| io_error(path, e))
}

pub(crate) fn io_error(path: &Path, source: io::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Runs a parsed command. Data goes to `stdout`, notes and warnings to `stderr`.
pub fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Estimate(args) => estimate::run(&args, stdout),
        Command::Simulate(args) => simulate::run(&args, stdout, stderr),
        Command::Asym(args) => asym::run(&args, stdout),
        Command::Figures(args) => figures::run(&args, stderr),
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run_from<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Config(e.to_string()))?;
    run(cli, stdout, stderr)
}
