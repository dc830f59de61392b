use std::io::Write;

use cevi::asymptotics::{AsymptoticError, AsymptoticParams};
use cevi::{CensorModel, HeavyTailDist};
use clap::Args;
use serde::Serialize;

use crate::{CliError, Format, Output};

#[derive(Debug, Clone, Args)]
pub struct AsymArgs {
    #[arg(long)]
    pub model_x: HeavyTailDist<f64>,
    #[arg(long)]
    pub model_c: HeavyTailDist<f64>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub beta: f64,
    /// Number of top order statistics, for lambda.
    #[arg(long)]
    pub k: Option<usize>,
    /// Sample size, for lambda.
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub output: Output,
}

/// A tabulated quantity, or the reason it is unavailable.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Value(f64),
    Note(String),
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Value(v) => write!(f, "{v}"),
            Cell::Note(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymRow {
    pub quantity: &'static str,
    pub value: Cell,
}

fn cell(r: Result<f64, AsymptoticError>) -> Cell {
    match r {
        Ok(v) => Cell::Value(v),
        Err(AsymptoticError::OutsideTheorem { p_beta }) => {
            Cell::Note(format!("violation: p_beta = {p_beta} <= 1/2"))
        }
        Err(e) => Cell::Note(format!("violation: {e}")),
    }
}

pub fn asym_rows(args: &AsymArgs) -> Result<Vec<AsymRow>, CliError> {
    let model = CensorModel::new(args.model_x, args.model_c);
    let params = match (args.k, args.n) {
        (Some(k), Some(n)) => {
            if k < 1 || k > n {
                return Err(CliError::Config(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
            }
            AsymptoticParams::at_sample_size(&model, args.beta, k, n)
        }
        (None, None) => AsymptoticParams::from_model(&model, args.beta, 0.0),
        _ => return Err(CliError::Config("--k and --n must be given together".into())),
    };
    let sigma2_br = match params.sigma2_br() {
        None => Cell::Note("n/a: target law has no second-order term".into()),
        Some(Err(AsymptoticError::OutsideTheorem { .. })) => {
            Cell::Note(format!("violation: p = {} <= 1/2", params.p))
        }
        Some(r) => cell(r),
    };
    let lambda = match (args.k, args.n) {
        (Some(_), Some(_)) => Cell::Value(params.lambda),
        _ => Cell::Note("n/a: needs --k and --n".into()),
    };
    Ok(vec![
        AsymRow { quantity: "gamma1", value: Cell::Value(params.gamma1) },
        AsymRow { quantity: "gamma2", value: Cell::Value(params.gamma2) },
        AsymRow { quantity: "gamma", value: Cell::Value(params.gamma) },
        AsymRow { quantity: "p", value: Cell::Value(params.p) },
        AsymRow { quantity: "p_beta", value: Cell::Value(params.p_beta()) },
        AsymRow { quantity: "sigma2_t", value: cell(params.sigma2_t()) },
        AsymRow { quantity: "sigma2_gamma", value: cell(params.sigma2_gamma()) },
        AsymRow { quantity: "sigma2_br", value: sigma2_br },
        AsymRow { quantity: "sigma2_hill", value: Cell::Value(params.sigma2_hill()) },
        AsymRow { quantity: "m_t", value: cell(params.m_t()) },
        AsymRow { quantity: "m_gamma", value: cell(params.m_gamma()) },
        AsymRow { quantity: "lambda", value: lambda },
    ])
}

pub fn run(args: &AsymArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let rows = asym_rows(args)?;
    args.output.write_with(stdout, |w| {
        match args.output.format {
            Format::Csv => {
                let mut out = csv::Writer::from_writer(w);
                out.write_record(["quantity", "value"])?;
                for r in &rows {
                    out.write_record([r.quantity.to_string(), r.value.to_string()])?;
                }
                out.flush()?;
            }
            Format::Json => {
                serde_json::to_writer_pretty(&mut *w, &rows)?;
                writeln!(w)?;
            }
        }
        Ok(())
    })
}
