//! Tail index estimators for censored samples.
//!
//! The central statistic is the Kaplan-Meier weighted Box-Cox excess
//!
//! ```text
//! T_k(beta) = sum_{j=2}^{k} w_{j,k} [ k_{-beta}(Z_{n-j+1,n}/Z_{n-k,n}) - k_{-beta}(Z_{n-j,n}/Z_{n-k,n}) ]
//! w_{j,k}   = F_KM(Z_{n-j+1,n}) / F_KM(Z_{n-k,n})
//! ```
//!
//! from which `gamma1(beta) = T/(1 - beta T)`, the `beta = 0` special case
//! `gamma_w`, and the bias-reduced combination are derived. The censored
//! Hill (pseudo-ML) estimator is provided for comparison.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::asymptotics;
use crate::censoring::CensoredSample;
use crate::kaplan_meier::KmCurve;
use crate::Scalar;

/// Below this `|beta|` the Box-Cox transform uses its log expansion.
const BOX_COX_LOG_BRANCH: f64 = 1e-8;
/// `|1 - beta T|` below this is treated as a singular estimate.
const SINGULAR_DENOMINATOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("k = {k} outside [{min}, {max}] for a sample of size {n}")]
    KOutOfRange {
        k: usize,
        min: usize,
        max: usize,
        n: usize,
    },
    #[error("Box-Cox transform needs u >= 1, got {0}")]
    BoxCoxDomain(f64),
    #[error("singular estimate: 1 - beta*T = {denominator} (beta = {beta}, T = {t_stat})")]
    Singular {
        beta: f64,
        t_stat: f64,
        denominator: f64,
    },
    #[error("all top-{k} observations are censored")]
    AllCensored { k: usize },
    #[error("bias reduction undefined: gamma_w = {gamma_w} <= 0 at k = {k}")]
    NonPositiveGammaW { k: usize, gamma_w: f64 },
    #[error("invalid estimator spec: {0}")]
    InvalidSpec(String),
    #[error("empty k range: k_min = {k_min}, k_max = {k_max}, k_step = {k_step}")]
    EmptyRange {
        k_min: usize,
        k_max: usize,
        k_step: usize,
    },
}

/// Which Kaplan-Meier value weights the `j`-th log spacing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightConvention {
    /// `F_KM(Z_{n-j+1,n})`, summing over `j = 2..=k`.
    #[default]
    PostJump,
    /// Left limit `F_KM(Z_{n-j,n})`, summing over `j = 1..=k`.
    LeftLimit,
}

/// An estimator choice. String form: `W`, `WL`, `H`, `T:beta=<f>`,
/// `G:beta=<f>`, `BR:rho1=<f>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorSpec<T> {
    TStat { beta: T },
    GammaBeta { beta: T },
    GammaW,
    /// `gamma_w` with left-limit Kaplan-Meier weights.
    GammaWLeftLimit,
    Hill,
    BiasReduced { rho1: T },
}

impl<T: Scalar> EstimatorSpec<T> {
    pub fn bias_reduced(rho1: T) -> Result<Self, EstimatorError> {
        if rho1 < T::zero() {
            Ok(Self::BiasReduced { rho1 })
        } else {
            Err(EstimatorError::InvalidSpec(format!(
                "rho1 must be negative, got {rho1}"
            )))
        }
    }

    /// The Box-Cox parameter whose `p_beta` governs the limit law, if any.
    pub fn beta(&self) -> Option<T> {
        match *self {
            Self::TStat { beta } | Self::GammaBeta { beta } => Some(beta),
            Self::GammaW | Self::GammaWLeftLimit => Some(T::zero()),
            Self::Hill | Self::BiasReduced { .. } => None,
        }
    }
}

impl<T: Scalar> fmt::Display for EstimatorSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::TStat { beta } => write!(f, "T:beta={beta}"),
            Self::GammaBeta { beta } => write!(f, "G:beta={beta}"),
            Self::GammaW => f.write_str("W"),
            Self::GammaWLeftLimit => f.write_str("WL"),
            Self::Hill => f.write_str("H"),
            Self::BiasReduced { rho1 } => write!(f, "BR:rho1={rho1}"),
        }
    }
}

impl<T: Scalar> FromStr for EstimatorSpec<T> {
    type Err = EstimatorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || EstimatorError::InvalidSpec(s.to_string());
        let value = |rest: &str, key: &str| -> Result<T, EstimatorError> {
            let v = rest.strip_prefix(key).and_then(|r| r.strip_prefix('='));
            let v: f64 = v.ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
            if v.is_finite() {
                Ok(T::lit(v))
            } else {
                Err(bad())
            }
        };
        match s.split_once(':') {
            None => match s {
                "W" => Ok(Self::GammaW),
                "WL" => Ok(Self::GammaWLeftLimit),
                "H" => Ok(Self::Hill),
                _ => Err(bad()),
            },
            Some(("T", rest)) => Ok(Self::TStat {
                beta: value(rest, "beta")?,
            }),
            Some(("G", rest)) => Ok(Self::GammaBeta {
                beta: value(rest, "beta")?,
            }),
            Some(("BR", rest)) => Self::bias_reduced(value(rest, "rho1")?),
            Some(_) => Err(bad()),
        }
    }
}

impl<T: Scalar> Serialize for EstimatorSpec<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for EstimatorSpec<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EstimateFlags {
    pub negative_estimate: bool,
    /// `beta <= -1/gamma_hat`: the Box-Cox limit has a non-positive denominator.
    pub beta_below_validity: bool,
    /// Plug-in `p_beta <= 1/2`: no normal limit is available, so no stderr.
    pub outside_theorem: bool,
}

/// One estimate at a given `k`, with a first-order plug-in standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult<T> {
    pub k: usize,
    pub value: T,
    pub stderr: Option<T>,
    pub ci: Option<(T, T)>,
    pub p_hat: T,
    /// Plug-in `p_beta` used for the stderr, when the estimator has one.
    pub p_beta_hat: Option<T>,
    pub flags: EstimateFlags,
}

impl<T: Scalar> EstimateResult<T> {
    /// Attaches a symmetric normal interval at the given level. Leaves `ci`
    /// empty when no stderr is available.
    pub fn with_ci(mut self, level: f64) -> Self {
        self.ci = asymptotics::confidence_interval(&self, level).ok();
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint<T> {
    pub k: usize,
    pub outcome: Result<EstimateResult<T>, EstimatorError>,
}

/// Box-Cox transform `k_{-beta}(u) = (1 - u^{-beta}) / beta`, `log u` at
/// `beta = 0`.
pub fn box_cox<T: Scalar>(u: T, beta: T) -> Result<T, EstimatorError> {
    if !(u >= T::one()) {
        return Err(EstimatorError::BoxCoxDomain(u.as_f64()));
    }
    Ok(box_cox_log(u.ln(), beta))
}

/// `t / (1 - beta t)`, rejecting denominators within `1e-8` of zero.
pub fn gamma_from_t<T: Scalar>(t: T, beta: T) -> Result<T, EstimatorError> {
    let denominator = T::one() - beta * t;
    if denominator.abs() < T::lit(SINGULAR_DENOMINATOR) {
        return Err(EstimatorError::Singular {
            beta: beta.as_f64(),
            t_stat: t.as_f64(),
            denominator: denominator.as_f64(),
        });
    }
    Ok(t / denominator)
}

/// Box-Cox transform expressed through `log u`.
fn box_cox_log<T: Scalar>(log_u: T, beta: T) -> T {
    if beta.abs() < T::lit(BOX_COX_LOG_BRANCH) {
        log_u - beta * log_u * log_u / T::lit(2.0)
    } else {
        -(-beta * log_u).exp_m1() / beta
    }
}

/// A sample prepared for repeated estimation: the Kaplan-Meier curve and
/// the log order statistics are computed once.
#[derive(Debug, Clone)]
pub struct EstimationContext<'a, T> {
    sample: &'a CensoredSample<T>,
    km: KmCurve<T>,
    log_z: Vec<T>,
    convention: WeightConvention,
}

impl<'a, T: Scalar> EstimationContext<'a, T> {
    pub fn new(sample: &'a CensoredSample<T>) -> Self {
        Self {
            sample,
            km: KmCurve::new(sample),
            log_z: sample.z().iter().map(|z| z.ln()).collect(),
            convention: WeightConvention::PostJump,
        }
    }

    pub fn with_convention(mut self, convention: WeightConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn sample(&self) -> &CensoredSample<T> {
        self.sample
    }

    pub fn km(&self) -> &KmCurve<T> {
        &self.km
    }

    fn n(&self) -> usize {
        self.sample.len()
    }

    fn check_k(&self, k: usize, min: usize) -> Result<(), EstimatorError> {
        let n = self.n();
        if k < min || k + 1 > n {
            Err(EstimatorError::KOutOfRange {
                k,
                min,
                max: n - 1,
                n,
            })
        } else {
            Ok(())
        }
    }

    /// Mean of the top-`k` non-censoring indicators, `1 <= k <= n`.
    pub fn p_hat(&self, k: usize) -> Result<T, EstimatorError> {
        let n = self.n();
        if k < 1 || k > n {
            return Err(EstimatorError::KOutOfRange {
                k,
                min: 1,
                max: n,
                n,
            });
        }
        let events = self.sample.delta()[n - k..].iter().filter(|&&d| d).count();
        Ok(T::from_count(events) / T::from_count(k))
    }

    pub fn t_stat(&self, k: usize, beta: T) -> Result<T, EstimatorError> {
        self.check_k(k, 2)?;
        Ok(self.t_stat_unchecked(k, beta, self.convention))
    }

    fn t_stat_unchecked(&self, k: usize, beta: T, convention: WeightConvention) -> T {
        let n = self.n();
        let lz = &self.log_z;
        // 0-based index of Z_{m,n} is m - 1
        let base = lz[n - k - 1];
        let denom = self.km.at_rank(n - k);
        let (first, numerator_rank): (usize, fn(usize, usize) -> usize) = match convention {
            WeightConvention::PostJump => (2, |n, j| n - j + 1),
            WeightConvention::LeftLimit => (1, |n, j| n - j),
        };
        let exact_log = beta == T::zero();
        let mut sum = T::zero();
        for j in first..=k {
            let w = self.km.at_rank(numerator_rank(n, j)) / denom;
            let increment = if exact_log {
                lz[n - j] - lz[n - j - 1]
            } else {
                box_cox_log(lz[n - j] - base, beta) - box_cox_log(lz[n - j - 1] - base, beta)
            };
            sum = sum + w * increment;
        }
        sum
    }

    fn finish(
        &self,
        k: usize,
        value: T,
        p_hat: T,
        variance: Option<Result<T, asymptotics::AsymptoticError>>,
        p_beta_hat: Option<T>,
        beta: Option<T>,
    ) -> EstimateResult<T> {
        let mut flags = EstimateFlags {
            negative_estimate: value < T::zero(),
            ..Default::default()
        };
        if let Some(beta) = beta {
            flags.beta_below_validity = T::one() + beta * value <= T::zero();
        }
        let stderr = match variance {
            Some(Ok(v)) => Some((v / T::from_count(k)).sqrt()),
            Some(Err(_)) => {
                flags.outside_theorem = true;
                None
            }
            None => None,
        };
        EstimateResult {
            k,
            value,
            stderr,
            ci: None,
            p_hat,
            p_beta_hat,
            flags,
        }
    }

    /// `T_k(beta)` wrapped as a result, with the stderr of its normal limit.
    pub fn t_stat_estimate(&self, k: usize, beta: T) -> Result<EstimateResult<T>, EstimatorError> {
        let t = self.t_stat(k, beta)?;
        let p_hat = self.p_hat(k)?;
        let gamma1 = gamma_from_t(t, beta).ok().filter(|g| *g > T::zero());
        let (variance, p_beta_hat) = match gamma1 {
            Some(g1) => {
                let gamma = p_hat * g1;
                (
                    Some(asymptotics::sigma2_t(gamma, p_hat, beta)),
                    Some(p_hat * (T::one() + g1 * beta)),
                )
            }
            None => (None, None),
        };
        let mut r = self.finish(k, t, p_hat, variance, p_beta_hat, None);
        r.flags.beta_below_validity = gamma1.is_some_and(|g| T::one() + beta * g <= T::zero());
        Ok(r)
    }

    /// `T / (1 - beta T)`.
    pub fn gamma_beta(&self, k: usize, beta: T) -> Result<EstimateResult<T>, EstimatorError> {
        let t = self.t_stat(k, beta)?;
        self.gamma_beta_from_t(k, beta, t)
    }

    fn gamma_beta_from_t(&self, k: usize, beta: T, t: T) -> Result<EstimateResult<T>, EstimatorError> {
        let value = gamma_from_t(t, beta)?;
        let p_hat = self.p_hat(k)?;
        let (variance, p_beta_hat) = if value > T::zero() {
            (
                Some(asymptotics::sigma2_gamma(value, p_hat, beta)),
                Some(p_hat * (T::one() + value * beta)),
            )
        } else {
            (None, None)
        };
        Ok(self.finish(k, value, p_hat, variance, p_beta_hat, Some(beta)))
    }

    pub fn gamma_w(&self, k: usize) -> Result<EstimateResult<T>, EstimatorError> {
        self.gamma_beta(k, T::zero())
    }

    /// `gamma_w` with left-limit weights, summing from `j = 1`.
    pub fn gamma_w_left_limit(&self, k: usize) -> Result<EstimateResult<T>, EstimatorError> {
        self.check_k(k, 2)?;
        let t = self.t_stat_unchecked(k, T::zero(), WeightConvention::LeftLimit);
        self.gamma_beta_from_t(k, T::zero(), t)
    }

    /// Pseudo-ML Hill estimator: classical Hill divided by `p_hat`.
    pub fn gamma_hill(&self, k: usize) -> Result<EstimateResult<T>, EstimatorError> {
        self.check_k(k, 1)?;
        let p_hat = self.p_hat(k)?;
        if p_hat == T::zero() {
            return Err(EstimatorError::AllCensored { k });
        }
        let value = self.hill(k) / p_hat;
        let variance = (value > T::zero()).then(|| Ok(asymptotics::sigma2_hill(value, p_hat)));
        Ok(self.finish(k, value, p_hat, variance, None, None))
    }

    /// Classical (uncensored) Hill statistic `(1/k) sum log(Z_{n-i+1,n}/Z_{n-k,n})`.
    pub fn hill(&self, k: usize) -> T {
        let n = self.n();
        let base = self.log_z[n - k - 1];
        let sum = self.log_z[n - k..]
            .iter()
            .fold(T::zero(), |acc, &l| acc + (l - base));
        sum / T::from_count(k)
    }

    /// Bias-reduced estimator with `beta1 * gamma_w` replaced by `-rho1`.
    pub fn gamma_br(&self, k: usize, rho1: T) -> Result<EstimateResult<T>, EstimatorError> {
        if !(rho1 < T::zero()) {
            return Err(EstimatorError::InvalidSpec(format!(
                "rho1 must be negative, got {rho1}"
            )));
        }
        self.check_k(k, 2)?;
        let g = self.t_stat_unchecked(k, T::zero(), self.convention);
        if !(g > T::zero()) {
            return Err(EstimatorError::NonPositiveGammaW {
                k,
                gamma_w: g.as_f64(),
            });
        }
        let one = T::one();
        let two = T::lit(2.0);
        let t = self.t_stat_unchecked(k, -rho1 / g, self.convention);
        let factor = (one - rho1).powi(2) * (one - two * rho1) / (rho1 * rho1);
        let value = g - factor * (t - g / (one - rho1));

        let p_hat = self.p_hat(k)?;
        // delta = gamma * beta1 = p * gamma1 * beta1 ~ -p rho1
        let variance = (value > T::zero())
            .then(|| asymptotics::sigma2_br(value, p_hat, -p_hat * rho1));
        Ok(self.finish(k, value, p_hat, variance, Some(p_hat), None))
    }

    pub fn estimate(&self, spec: &EstimatorSpec<T>, k: usize) -> Result<EstimateResult<T>, EstimatorError> {
        match *spec {
            EstimatorSpec::TStat { beta } => self.t_stat_estimate(k, beta),
            EstimatorSpec::GammaBeta { beta } => self.gamma_beta(k, beta),
            EstimatorSpec::GammaW => self.gamma_w(k),
            EstimatorSpec::GammaWLeftLimit => self.gamma_w_left_limit(k),
            EstimatorSpec::Hill => self.gamma_hill(k),
            EstimatorSpec::BiasReduced { rho1 } => self.gamma_br(k, rho1),
        }
    }

    /// Evaluates `spec` at `k_min, k_min + k_step, ..., <= k_max`. Failures
    /// at individual `k` are recorded in the returned points.
    pub fn sweep(
        &self,
        spec: &EstimatorSpec<T>,
        k_min: usize,
        k_max: usize,
        k_step: usize,
    ) -> Result<Vec<SweepPoint<T>>, EstimatorError> {
        if k_step == 0 || k_min > k_max || k_min < 2 || k_max + 1 > self.n() {
            return Err(EstimatorError::EmptyRange {
                k_min,
                k_max,
                k_step,
            });
        }
        Ok((k_min..=k_max)
            .step_by(k_step)
            .map(|k| SweepPoint {
                k,
                outcome: self.estimate(spec, k),
            })
            .collect())
    }
}

pub fn t_stat<T: Scalar>(sample: &CensoredSample<T>, k: usize, beta: T) -> Result<T, EstimatorError> {
    EstimationContext::new(sample).t_stat(k, beta)
}

pub fn gamma_beta<T: Scalar>(
    sample: &CensoredSample<T>,
    k: usize,
    beta: T,
) -> Result<EstimateResult<T>, EstimatorError> {
    EstimationContext::new(sample).gamma_beta(k, beta)
}

pub fn gamma_w<T: Scalar>(sample: &CensoredSample<T>, k: usize) -> Result<EstimateResult<T>, EstimatorError> {
    EstimationContext::new(sample).gamma_w(k)
}

pub fn p_hat<T: Scalar>(sample: &CensoredSample<T>, k: usize) -> Result<T, EstimatorError> {
    EstimationContext::new(sample).p_hat(k)
}

pub fn gamma_hill<T: Scalar>(
    sample: &CensoredSample<T>,
    k: usize,
) -> Result<EstimateResult<T>, EstimatorError> {
    EstimationContext::new(sample).gamma_hill(k)
}

pub fn gamma_br<T: Scalar>(
    sample: &CensoredSample<T>,
    k: usize,
    rho1: T,
) -> Result<EstimateResult<T>, EstimatorError> {
    EstimationContext::new(sample).gamma_br(k, rho1)
}

pub fn sweep<T: Scalar>(
    sample: &CensoredSample<T>,
    spec: &EstimatorSpec<T>,
    k_min: usize,
    k_max: usize,
    k_step: usize,
) -> Result<Vec<SweepPoint<T>>, EstimatorError> {
    EstimationContext::new(sample).sweep(spec, k_min, k_max, k_step)
}
