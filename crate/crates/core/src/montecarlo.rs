//! Seeded Monte Carlo engine: finite-sample median bias and MSE curves
//! across `k`, and distributional checks of the normal limit.
//!
//! Replicate `r` draws from a ChaCha8 generator seeded with the experiment
//! seed and switched to stream `r`, so results do not depend on how the
//! replicates are scheduled across threads, and adding replicates never
//! changes earlier ones.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::asymptotics::{AsymptoticError, AsymptoticParams};
use crate::censoring::{CensorModel, CensoringError};
use crate::estimators::{EstimationContext, EstimatorSpec};
use crate::ks::ks_statistic;
use crate::HeavyTailDist;

pub const DEFAULT_SEED: u64 = 20_190_117;

#[derive(Debug, Error)]
pub enum McError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Asymptotic(#[from] AsymptoticError),
    #[error(transparent)]
    Censoring(#[from] CensoringError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Generator for replicate `replicate` of an experiment seeded with `seed`.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub model: CensorModel<f64>,
    pub n: usize,
    pub replicates: usize,
    #[serde(default)]
    pub k_grid: Vec<usize>,
    pub estimators: Vec<EstimatorSpec<f64>>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl McConfig {
    /// Every 5th `k` in `[10, n - 25]`, or all of `[2, n - 1]` for tiny `n`.
    pub fn default_k_grid(n: usize) -> Vec<usize> {
        if n >= 35 {
            (10..=n - 25).step_by(5).collect()
        } else {
            (2..n.max(3)).collect()
        }
    }

    /// Fills an empty `k_grid` with [`default_k_grid`](Self::default_k_grid).
    pub fn with_default_grid(mut self) -> Self {
        if self.k_grid.is_empty() {
            self.k_grid = Self::default_k_grid(self.n);
        }
        self
    }

    pub fn validate(&self) -> Result<(), McError> {
        let bad = |m: String| Err(McError::InvalidConfig(m));
        if self.n < 3 {
            return bad(format!("n must be at least 3, got {}", self.n));
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if self.estimators.is_empty() {
            return bad("no estimators requested".into());
        }
        if self.k_grid.is_empty() {
            return bad("empty k grid".into());
        }
        if let Some(k) = self.k_grid.iter().find(|&&k| k < 2 || k > self.n - 1) {
            return bad(format!("k = {k} outside [2, {}]", self.n - 1));
        }
        for spec in &self.estimators {
            if let EstimatorSpec::BiasReduced { rho1 } = spec {
                if !(*rho1 < 0.0) {
                    return bad(format!("rho1 must be negative in {spec}"));
                }
            }
        }
        Ok(())
    }

    pub fn gamma1(&self) -> f64 {
        self.model.gamma1()
    }

    /// `p_beta` of the estimator's normal limit (`p` for the bias-reduced
    /// estimator); `None` for the Hill estimator.
    pub fn p_beta_for(&self, spec: &EstimatorSpec<f64>) -> Option<f64> {
        let p = self.model.theoretical_p();
        match spec {
            EstimatorSpec::Hill => None,
            EstimatorSpec::BiasReduced { .. } => Some(p),
            other => other
                .beta()
                .map(|b| crate::censoring::p_beta(p, self.model.gamma(), b)),
        }
    }
}

/// Aggregates for one `(estimator, k)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub estimator: String,
    pub k: usize,
    /// `None` when no replicate produced a value.
    pub median_bias: Option<f64>,
    pub mse: Option<f64>,
    pub valid_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub config: McConfig,
    pub gamma1: f64,
    pub theoretical_p: f64,
    pub rows: Vec<EstimatorSummary>,
}

impl McSummary {
    pub const CSV_HEADER: &'static str = "estimator,k,median_bias,mse,valid_count";

    pub fn row(&self, spec: &EstimatorSpec<f64>, k: usize) -> Option<&EstimatorSummary> {
        let name = spec.to_string();
        self.rows.iter().find(|r| r.estimator == name && r.k == k)
    }

    pub fn rows_for<'a>(&'a self, spec: &EstimatorSpec<f64>) -> impl Iterator<Item = &'a EstimatorSummary> + 'a {
        let name = spec.to_string();
        self.rows.iter().filter(move |r| r.estimator == name)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.estimator,
                r.k,
                fmt_opt(r.median_bias),
                fmt_opt(r.mse),
                r.valid_count
            )?;
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<(), McError> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }
}

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

/// Runs every replicate and aggregates median bias and MSE per
/// `(estimator, k)`. Estimator failures drop the replicate from that cell.
pub fn run_experiment(config: &McConfig) -> Result<McSummary, McError> {
    config.validate()?;
    let gamma1 = config.gamma1();
    let cells = config.estimators.len() * config.k_grid.len();

    // errors[r][e * |grid| + g], NaN when the estimator failed
    let errors: Vec<Vec<f64>> = (0..config.replicates)
        .into_par_iter()
        .map(|r| -> Result<Vec<f64>, McError> {
            let mut rng = replicate_rng(config.seed, r as u64);
            let sample = config.model.sample(&mut rng, config.n)?;
            let ctx = EstimationContext::new(&sample);
            let mut out = Vec::with_capacity(cells);
            for spec in &config.estimators {
                for &k in &config.k_grid {
                    let v = ctx
                        .estimate(spec, k)
                        .ok()
                        .map(|e| e.value)
                        .filter(|v| v.is_finite());
                    out.push(v.map_or(f64::NAN, |v| v - gamma1));
                }
            }
            Ok(out)
        })
        .collect::<Result<_, _>>()?;

    let mut rows = Vec::with_capacity(cells);
    let mut column = Vec::with_capacity(config.replicates);
    for (e, spec) in config.estimators.iter().enumerate() {
        for (g, &k) in config.k_grid.iter().enumerate() {
            let idx = e * config.k_grid.len() + g;
            column.clear();
            column.extend(errors.iter().map(|rep| rep[idx]).filter(|v| !v.is_nan()));
            let valid_count = column.len();
            let (median_bias, mse) = if valid_count == 0 {
                (None, None)
            } else {
                let mse = column.iter().map(|b| b * b).sum::<f64>() / valid_count as f64;
                (Some(median(&mut column)), Some(mse))
            };
            rows.push(EstimatorSummary {
                estimator: spec.to_string(),
                k,
                median_bias,
                mse,
                valid_count,
            });
        }
    }

    Ok(McSummary {
        config: config.clone(),
        gamma1,
        theoretical_p: config.model.theoretical_p(),
        rows,
    })
}

/// Standardized replicates of `sqrt(k) (T_k(beta) - gamma1/(1 + gamma1 beta))`
/// and their KS distance to N(0, 1).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltCheck {
    pub standardized: Vec<f64>,
    pub ks_statistic: f64,
    pub p_beta: f64,
    /// `lambda m_beta` used as the limit mean.
    pub mean: f64,
    pub sigma: f64,
    pub lambda: f64,
    /// Replicates where `T_k(beta)` could not be computed.
    pub failed: usize,
}

impl CltCheck {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "standardized")?;
        for v in &self.standardized {
            writeln!(w, "{v}")?;
        }
        Ok(())
    }
}

pub fn clt_check(
    model: &CensorModel<f64>,
    n: usize,
    k: usize,
    beta: f64,
    replicates: usize,
    seed: u64,
) -> Result<CltCheck, McError> {
    if k < 2 || k + 1 > n {
        return Err(McError::InvalidConfig(format!("k = {k} outside [2, {}]", n.saturating_sub(1))));
    }
    if replicates == 0 {
        return Err(McError::InvalidConfig("replicates must be at least 1".into()));
    }
    let params = AsymptoticParams::at_sample_size(model, beta, k, n);
    let sigma = params.sigma2_t()?.sqrt();
    let mean = params.lambda * params.m_t()?;
    let gamma1 = params.gamma1;
    let centre = gamma1 / (1.0 + gamma1 * beta);
    let root_k = (k as f64).sqrt();

    let draws: Vec<Option<f64>> = (0..replicates)
        .into_par_iter()
        .map(|r| -> Result<Option<f64>, McError> {
            let mut rng = replicate_rng(seed, r as u64);
            let sample = model.sample(&mut rng, n)?;
            let t = EstimationContext::new(&sample).t_stat(k, beta).ok();
            Ok(t.map(|t| (root_k * (t - centre) - mean) / sigma))
        })
        .collect::<Result<_, _>>()?;
    let failed = draws.iter().filter(|d| d.is_none()).count();
    let standardized: Vec<f64> = draws.into_iter().flatten().collect();
    let normal = Normal::standard();
    let ks = ks_statistic(&standardized, |x| normal.cdf(x));
    Ok(CltCheck {
        standardized,
        ks_statistic: ks,
        p_beta: params.p_beta(),
        mean,
        sigma,
        lambda: params.lambda,
        failed,
    })
}

/// KS distance to Exp(1) of the scaled log-spacings `j log(Y_{n-j+1,n}/Y_{n-j,n})`,
/// `j = 1..=k`, of a standard Pareto sample.
pub fn renyi_diagnostic(n: usize, k: usize, seed: u64) -> Result<f64, McError> {
    if k < 2 || k + 1 > n {
        return Err(McError::InvalidConfig(format!("k = {k} outside [2, {}]", n.saturating_sub(1))));
    }
    let pareto = HeavyTailDist::pareto(1.0, 1.0).expect("valid parameters");
    let mut y = pareto.sample(&mut replicate_rng(seed, 0), n);
    y.sort_by(f64::total_cmp);
    let spacings: Vec<f64> = (1..=k)
        .map(|j| j as f64 * (y[n - j] / y[n - j - 1]).ln())
        .collect();
    Ok(ks_statistic(&spacings, |x| if x <= 0.0 { 0.0 } else { -(-x).exp_m1() }))
}
