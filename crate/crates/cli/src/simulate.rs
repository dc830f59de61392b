use std::fs;
use std::io::Write;
use std::path::PathBuf;

use cevi::montecarlo::{run_experiment, DEFAULT_SEED};
use cevi::{CensorModel, EstimatorSpec, HeavyTailDist, McConfig};
use clap::Args;

use crate::{io_error, CliError, Format, KRange, Output};

/// The estimator set of the published simulation study.
pub const STUDY_ESTIMATORS: [&str; 7] = [
    "H",
    "W",
    "G:beta=-1",
    "G:beta=0.5",
    "G:beta=1.5",
    "BR:rho1=-1.5",
    "BR:rho1=-2",
];

pub fn study_estimators() -> Vec<EstimatorSpec<f64>> {
    STUDY_ESTIMATORS
        .iter()
        .map(|s| s.parse().expect("valid estimator spec"))
        .collect()
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// JSON configuration mirroring the Monte Carlo config; replaces the model flags.
    #[arg(long, conflicts_with_all = ["model_x", "model_c"])]
    pub config: Option<PathBuf>,
    /// Target law, e.g. burr:10,2,5, frechet:0.25, pareto:0.5.
    #[arg(long, required_unless_present = "config")]
    pub model_x: Option<HeavyTailDist<f64>>,
    /// Censoring law, same syntax as --model-x.
    #[arg(long, required_unless_present = "config")]
    pub model_c: Option<HeavyTailDist<f64>>,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 2000)]
    pub reps: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub k: KRange,
    /// Estimators to run (repeatable); the seven study estimators by default.
    #[arg(long = "est")]
    pub estimators: Vec<EstimatorSpec<f64>>,
    #[command(flatten)]
    pub output: Output,
}

impl SimulateArgs {
    pub fn to_config(&self) -> Result<McConfig, CliError> {
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
            let config: McConfig = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            return Ok(config.with_default_grid());
        }
        let (Some(x), Some(c)) = (self.model_x, self.model_c) else {
            return Err(CliError::Config("--model-x and --model-c are required".into()));
        };
        let k_grid = match (self.k.k_min, self.k.k_max) {
            (None, None) if self.k.k_step == 1 => Vec::new(),
            (lo, hi) => {
                if self.k.k_step == 0 {
                    return Err(CliError::Config("--k-step must be positive".into()));
                }
                let lo = lo.unwrap_or(2);
                let hi = hi.unwrap_or(self.n.saturating_sub(1));
                (lo..=hi).step_by(self.k.k_step).collect()
            }
        };
        let estimators = if self.estimators.is_empty() {
            study_estimators()
        } else {
            self.estimators.clone()
        };
        Ok(McConfig {
            model: CensorModel::new(x, c),
            n: self.n,
            replicates: self.reps,
            k_grid,
            estimators,
            seed: self.seed,
        }
        .with_default_grid())
    }
}

/// Theoretical `p`, `p_beta` per estimator and a warning for each estimator
/// whose `p_beta <= 1/2`.
pub fn regime_notes(config: &McConfig, w: &mut dyn Write) -> Result<(), CliError> {
    writeln!(w, "theoretical p = {}", config.model.theoretical_p())?;
    for spec in &config.estimators {
        match config.p_beta_for(spec) {
            Some(pb) => {
                writeln!(w, "p_beta for {spec} = {pb}")?;
                if pb <= 0.5 {
                    writeln!(
                        w,
                        "warning: p_beta = {pb} <= 1/2 for {spec}; no normal limit is known in this regime"
                    )?;
                }
            }
            None => writeln!(w, "p_beta for {spec} = n/a")?,
        }
    }
    Ok(())
}

pub fn run(args: &SimulateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let config = args.to_config()?;
    config.validate()?;
    regime_notes(&config, stderr)?;
    let summary = run_experiment(&config)?;
    args.output.write_with(stdout, |w| {
        match args.output.format {
            Format::Csv => summary.write_csv(&mut *w)?,
            Format::Json => {
                summary.write_json(&mut *w)?;
                writeln!(w)?;
            }
        }
        Ok(())
    })
}
