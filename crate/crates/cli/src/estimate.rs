use std::io::Write;
use std::path::PathBuf;

use cevi::estimators::EstimationContext;
use cevi::{CensoredSample, EstimateResult, EstimatorSpec};
use clap::Args;
use serde::Serialize;

use crate::{fmt_opt, CliError, Format, KRange, Output};

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    /// CSV file with header `z,delta`.
    pub data: PathBuf,
    /// Estimator: W, WL, H, T:beta=<f>, G:beta=<f> or BR:rho1=<f>. Repeatable.
    #[arg(long = "est", default_value = "W")]
    pub estimators: Vec<EstimatorSpec<f64>>,
    #[command(flatten)]
    pub k: KRange,
    /// Confidence level of the plug-in normal intervals.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[command(flatten)]
    pub output: Output,
}

/// One output row. Estimator failures keep the row with `error` set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateRow {
    pub estimator: String,
    pub k: usize,
    pub value: Option<f64>,
    pub stderr: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub p_hat: Option<f64>,
    pub p_beta_hat: Option<f64>,
    pub flags: Vec<&'static str>,
    pub error: Option<String>,
}

impl EstimateRow {
    fn from_result(spec: &EstimatorSpec<f64>, k: usize, r: Result<EstimateResult<f64>, cevi::EstimatorError>) -> Self {
        let mut row = EstimateRow {
            estimator: spec.to_string(),
            k,
            value: None,
            stderr: None,
            ci_low: None,
            ci_high: None,
            p_hat: None,
            p_beta_hat: None,
            flags: Vec::new(),
            error: None,
        };
        match r {
            Ok(r) => {
                row.value = Some(r.value);
                row.stderr = r.stderr;
                row.ci_low = r.ci.map(|c| c.0);
                row.ci_high = r.ci.map(|c| c.1);
                row.p_hat = Some(r.p_hat);
                row.p_beta_hat = r.p_beta_hat;
                let f = r.flags;
                for (set, name) in [
                    (f.negative_estimate, "negative_estimate"),
                    (f.beta_below_validity, "beta_below_validity"),
                    (f.outside_theorem, "outside_theorem"),
                ] {
                    if set {
                        row.flags.push(name);
                    }
                }
            }
            Err(e) => {
                row.flags.push("error");
                row.error = Some(e.to_string());
            }
        }
        row
    }
}

pub const CSV_HEADER: [&str; 10] = [
    "estimator",
    "k",
    "value",
    "stderr",
    "ci_low",
    "ci_high",
    "p_hat",
    "p_beta_hat",
    "flags",
    "error",
];

/// Evaluates every estimator over the k range.
pub fn estimate_rows(sample: &CensoredSample<f64>, args: &EstimateArgs) -> Result<Vec<EstimateRow>, CliError> {
    if !(0.0..1.0).contains(&args.level) {
        return Err(CliError::Config(format!("--level must lie in [0, 1), got {}", args.level)));
    }
    let n = sample.len();
    let k_min = args.k.k_min.unwrap_or(2);
    let k_max = args.k.k_max.unwrap_or(n.saturating_sub(1));
    let ctx = EstimationContext::new(sample);
    let mut rows = Vec::new();
    for spec in &args.estimators {
        for point in ctx.sweep(spec, k_min, k_max, args.k.k_step)? {
            let r = point.outcome.map(|r| r.with_ci(args.level));
            rows.push(EstimateRow::from_result(spec, point.k, r));
        }
    }
    Ok(rows)
}

pub fn write_csv(rows: &[EstimateRow], w: &mut dyn Write) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in rows {
        out.write_record([
            r.estimator.clone(),
            r.k.to_string(),
            fmt_opt(r.value),
            fmt_opt(r.stderr),
            fmt_opt(r.ci_low),
            fmt_opt(r.ci_high),
            fmt_opt(r.p_hat),
            fmt_opt(r.p_beta_hat),
            r.flags.join(";"),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn run(args: &EstimateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let sample = CensoredSample::load(&args.data)?;
    let rows = estimate_rows(&sample, args)?;
    args.output.write_with(stdout, |w| match args.output.format {
        Format::Csv => write_csv(&rows, w),
        Format::Json => {
            serde_json::to_writer_pretty(&mut *w, &rows)?;
            writeln!(w)?;
            Ok(())
        }
    })
}
