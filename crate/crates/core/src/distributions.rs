//! Parametric heavy-tailed laws used as target and censoring distributions.
//!
//! Every variant has a closed-form survival function, quantile and density,
//! and a known second-order ("Hall-type") expansion
//! `1 - F(x) = C x^{-1/gamma} (1 + D x^{-rate} (1 + o(1)))`.

use std::fmt;
use std::str::FromStr;

use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistributionError {
    #[error("parameter `{name}` must be finite and strictly positive, got {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("probability {0} is outside the open interval (0, 1)")]
    ProbabilityOutOfRange(f64),
    #[error("cannot parse distribution `{0}`: expected burr:θ,β,λ | frechet:γ | pareto:γ,scale")]
    Parse(String),
}

/// Heavy-tailed law with positive extreme value index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HeavyTailDist<T> {
    /// `F(x) = 1 - (theta / (theta + x^beta))^lambda`, index `1 / (lambda beta)`.
    Burr { theta: T, beta: T, lambda: T },
    /// `F(x) = exp(-x^{-1/gamma})`.
    Frechet { gamma: T },
    /// `F(x) = 1 - (x / scale)^{-1/gamma}` for `x >= scale`.
    Pareto { gamma: T, scale: T },
}

/// First and second order tail constants.
///
/// `rate == None` marks an exact power law: there is no second-order term
/// and `d` is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HallParams<T> {
    pub gamma: T,
    pub c: T,
    pub d: T,
    pub rate: Option<T>,
}

impl<T: Scalar> HallParams<T> {
    pub fn is_exact_power_law(&self) -> bool {
        self.rate.is_none()
    }
}

fn check_positive<T: Scalar>(name: &'static str, value: T) -> Result<T, DistributionError> {
    if value.is_finite() && value > T::zero() {
        Ok(value)
    } else {
        Err(DistributionError::InvalidParameter {
            name,
            value: value.as_f64(),
        })
    }
}

impl<T: Scalar> HeavyTailDist<T> {
    pub fn burr(theta: T, beta: T, lambda: T) -> Result<Self, DistributionError> {
        Ok(Self::Burr {
            theta: check_positive("theta", theta)?,
            beta: check_positive("beta", beta)?,
            lambda: check_positive("lambda", lambda)?,
        })
    }

    pub fn frechet(gamma: T) -> Result<Self, DistributionError> {
        Ok(Self::Frechet {
            gamma: check_positive("gamma", gamma)?,
        })
    }

    pub fn pareto(gamma: T, scale: T) -> Result<Self, DistributionError> {
        Ok(Self::Pareto {
            gamma: check_positive("gamma", gamma)?,
            scale: check_positive("scale", scale)?,
        })
    }

    /// Extreme value index of the law.
    pub fn gamma(&self) -> T {
        match *self {
            Self::Burr { beta, lambda, .. } => (lambda * beta).recip(),
            Self::Frechet { gamma } | Self::Pareto { gamma, .. } => gamma,
        }
    }

    /// `1 - F(x)`; equals one at and below the left end of the support.
    pub fn survival(&self, x: T) -> T {
        if x <= T::zero() {
            return T::one();
        }
        match *self {
            Self::Burr {
                theta,
                beta,
                lambda,
            } => {
                // (theta / (theta + x^beta))^lambda = exp(-lambda * ln(1 + x^beta / theta))
                let r = x.powf(beta) / theta;
                (-lambda * r.ln_1p()).exp()
            }
            Self::Frechet { gamma } => -(-x.powf(-gamma.recip())).exp_m1(),
            Self::Pareto { gamma, scale } => {
                if x <= scale {
                    T::one()
                } else {
                    (x / scale).powf(-gamma.recip())
                }
            }
        }
    }

    pub fn cdf(&self, x: T) -> T {
        if x <= T::zero() {
            return T::zero();
        }
        match *self {
            Self::Frechet { gamma } => (-x.powf(-gamma.recip())).exp(),
            Self::Burr {
                theta,
                beta,
                lambda,
            } => {
                let r = x.powf(beta) / theta;
                -(-lambda * r.ln_1p()).exp_m1()
            }
            Self::Pareto { .. } => T::one() - self.survival(x),
        }
    }

    /// Inverse of the survival function, `x` such that `1 - F(x) = s`.
    pub fn inverse_survival(&self, s: T) -> Result<T, DistributionError> {
        if !(s > T::zero() && s < T::one()) {
            return Err(DistributionError::ProbabilityOutOfRange(
                (T::one() - s).as_f64(),
            ));
        }
        Ok(self.inverse_survival_unchecked(s))
    }

    fn inverse_survival_unchecked(&self, s: T) -> T {
        match *self {
            Self::Burr {
                theta,
                beta,
                lambda,
            } => {
                // theta + x^beta = theta s^{-1/lambda}
                let excess = (-s.ln() / lambda).exp_m1();
                (theta * excess).powf(beta.recip())
            }
            Self::Frechet { gamma } => {
                // exp(-x^{-1/gamma}) = 1 - s
                (-(-s).ln_1p()).powf(-gamma)
            }
            Self::Pareto { gamma, scale } => scale * s.powf(-gamma),
        }
    }

    /// Quantile function `F^{-1}(u)` for `0 < u < 1`.
    pub fn quantile(&self, u: T) -> Result<T, DistributionError> {
        if !(u > T::zero() && u < T::one()) {
            return Err(DistributionError::ProbabilityOutOfRange(u.as_f64()));
        }
        match *self {
            // Avoid forming 1 - u for the Fréchet branch.
            Self::Frechet { gamma } => Ok((-u.ln()).powf(-gamma)),
            _ => Ok(self.inverse_survival_unchecked(T::one() - u)),
        }
    }

    /// Density `F'(x)`, zero outside the support.
    pub fn density(&self, x: T) -> T {
        if x <= T::zero() {
            return T::zero();
        }
        match *self {
            Self::Burr {
                theta,
                beta,
                lambda,
            } => {
                // lambda beta x^{beta-1} / theta * (1 + x^beta/theta)^{-lambda-1}
                let r = x.powf(beta) / theta;
                let tail = (-(lambda + T::one()) * r.ln_1p()).exp();
                lambda * beta * x.powf(beta - T::one()) / theta * tail
            }
            Self::Frechet { gamma } => {
                let a = gamma.recip();
                let y = x.powf(-a);
                a * y / x * (-y).exp()
            }
            Self::Pareto { gamma, scale } => {
                if x < scale {
                    T::zero()
                } else {
                    let a = gamma.recip();
                    a / scale * (x / scale).powf(-a - T::one())
                }
            }
        }
    }

    /// Draws `n` independent variates by inverting the survival function at
    /// open-interval uniforms taken from `rng`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<T> {
        (0..n)
            .map(|_| {
                let u: f64 = rng.sample(Open01);
                self.inverse_survival_unchecked(T::lit(u))
            })
            .collect()
    }

    /// Second-order tail expansion constants.
    pub fn hall_params(&self) -> HallParams<T> {
        match *self {
            // theta^lambda x^{-lambda beta} (1 + theta x^{-beta})^{-lambda}
            Self::Burr {
                theta,
                beta,
                lambda,
            } => HallParams {
                gamma: self.gamma(),
                c: theta.powf(lambda),
                d: -lambda * theta,
                rate: Some(beta),
            },
            // 1 - exp(-y) = y (1 - y/2 + ...), y = x^{-1/gamma}
            Self::Frechet { gamma } => HallParams {
                gamma,
                c: T::one(),
                d: T::lit(-0.5),
                rate: Some(gamma.recip()),
            },
            Self::Pareto { gamma, scale } => HallParams {
                gamma,
                c: scale.powf(gamma.recip()),
                d: T::zero(),
                rate: None,
            },
        }
    }

    fn params_f64(&self) -> Vec<f64> {
        match *self {
            Self::Burr {
                theta,
                beta,
                lambda,
            } => vec![theta.as_f64(), beta.as_f64(), lambda.as_f64()],
            Self::Frechet { gamma } => vec![gamma.as_f64()],
            Self::Pareto { gamma, scale } => vec![gamma.as_f64(), scale.as_f64()],
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Self::Burr { .. } => "burr",
            Self::Frechet { .. } => "frechet",
            Self::Pareto { .. } => "pareto",
        }
    }

    fn from_family(family: &str, params: &[f64]) -> Result<Self, DistributionError> {
        let lit = |i: usize| T::lit(params[i]);
        match (family, params.len()) {
            ("burr", 3) => Self::burr(lit(0), lit(1), lit(2)),
            ("frechet", 1) => Self::frechet(lit(0)),
            ("pareto", 2) => Self::pareto(lit(0), lit(1)),
            ("pareto", 1) => Self::pareto(lit(0), T::one()),
            _ => Err(DistributionError::Parse(format!(
                "{family}:{}",
                params
                    .iter()
                    .map(f64::to_string)
                    .collect::<Vec<_>>()
                    .join(",")
            ))),
        }
    }
}

impl<T: Scalar> fmt::Display for HeavyTailDist<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params = self
            .params_f64()
            .iter()
            .map(f64::to_string)
            .collect::<Vec<_>>()
            .join(",");
        write!(f, "{}:{}", self.family(), params)
    }
}

/// Parses the `family:p1,p2,...` form, e.g. `burr:10,2,5` or `frechet:0.25`.
impl<T: Scalar> FromStr for HeavyTailDist<T> {
    type Err = DistributionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || DistributionError::Parse(s.to_string());
        let (family, rest) = s.trim().split_once(':').ok_or_else(bad)?;
        let params = rest
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_family(&family.trim().to_ascii_lowercase(), &params).map_err(|e| match e {
            DistributionError::Parse(_) => bad(),
            other => other,
        })
    }
}

// JSON form: {"burr":[10,2,5]}, {"frechet":[0.25]}, {"pareto":[0.5,1.0]}
#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
enum DistRepr {
    Burr([f64; 3]),
    Frechet([f64; 1]),
    Pareto([f64; 2]),
}

impl<T: Scalar> Serialize for HeavyTailDist<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let p = self.params_f64();
        let repr = match self {
            Self::Burr { .. } => DistRepr::Burr([p[0], p[1], p[2]]),
            Self::Frechet { .. } => DistRepr::Frechet([p[0]]),
            Self::Pareto { .. } => DistRepr::Pareto([p[0], p[1]]),
        };
        repr.serialize(serializer)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for HeavyTailDist<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let built = match DistRepr::deserialize(deserializer)? {
            DistRepr::Burr(p) => Self::from_family("burr", &p),
            DistRepr::Frechet(p) => Self::from_family("frechet", &p),
            DistRepr::Pareto(p) => Self::from_family("pareto", &p),
        };
        built.map_err(serde::de::Error::custom)
    }
}
