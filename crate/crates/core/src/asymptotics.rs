//! Closed-form asymptotic variances and biases of the estimators, plug-in
//! confidence intervals, and the deterministic weighted-sum bounds used as
//! test oracles.
//!
//! Every variance is given at the `sqrt(k)` scale, i.e. the standard error
//! of an estimate at `k` is `sqrt(variance / k)`. All formulas assume the
//! normal limit regime `p_beta = p + gamma * beta > 1/2`; outside of it the
//! limit law is unknown and the functions return
//! [`AsymptoticError::OutsideTheorem`].

use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::censoring::{self, CensorModel};
use crate::distributions::HallParams;
use crate::estimators::EstimateResult;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AsymptoticError {
    #[error("p_beta = {p_beta} <= 1/2: no normal limit is available")]
    OutsideTheorem { p_beta: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("estimate carries no standard error")]
    NoStandardError,
}

fn require_normal_regime<T: Scalar>(p_beta: T) -> Result<(), AsymptoticError> {
    if p_beta > T::lit(0.5) {
        Ok(())
    } else {
        Err(AsymptoticError::OutsideTheorem {
            p_beta: p_beta.as_f64(),
        })
    }
}

/// Limit variance of `sqrt(k) (T_k(beta) - gamma1 / (1 + gamma1 beta))`,
/// `gamma^2 / p_beta^2 * p / (2 p_beta - 1)`.
pub fn sigma2_t<T: Scalar>(gamma: T, p: T, beta: T) -> Result<T, AsymptoticError> {
    let pb = censoring::p_beta(p, gamma, beta);
    require_normal_regime(pb)?;
    let two = T::lit(2.0);
    Ok(gamma * gamma / (pb * pb) * p / (two * pb - T::one()))
}

/// Limit variance of `sqrt(k) (gamma1_hat(beta) - gamma1)`, by the delta
/// method `sigma2_t * (1 + beta gamma1)^4`.
pub fn sigma2_gamma<T: Scalar>(gamma1: T, p: T, beta: T) -> Result<T, AsymptoticError> {
    let scale = T::one() + beta * gamma1;
    Ok(sigma2_t(p * gamma1, p, beta)? * scale.powi(4))
}

/// The same variance written as `gamma1^2 p/(2p-1) (1+beta gamma1)^2 (2p-1)/(2 p_beta - 1)`.
/// Undefined at `p = 1/2`.
pub fn sigma2_gamma_alt<T: Scalar>(gamma1: T, p: T, beta: T) -> Result<T, AsymptoticError> {
    let one = T::one();
    let two = T::lit(2.0);
    let pb = p * (one + gamma1 * beta);
    require_normal_regime(pb)?;
    let w = two * p - one;
    if w == T::zero() {
        return Err(AsymptoticError::Domain("p = 1/2".into()));
    }
    Ok(gamma1 * gamma1 * p / w * (one + beta * gamma1).powi(2) * w / (two * pb - one))
}

/// Limit variance of the bias-reduced estimator, `delta = gamma beta1`.
pub fn sigma2_br<T: Scalar>(gamma1: T, p: T, delta: T) -> Result<T, AsymptoticError> {
    if !(p > T::lit(0.5)) {
        return Err(AsymptoticError::OutsideTheorem { p_beta: p.as_f64() });
    }
    if !(delta > T::zero()) {
        return Err(AsymptoticError::Domain(format!(
            "delta must be positive, got {delta}"
        )));
    }
    let one = T::one();
    let two = T::lit(2.0);
    let q = p + delta;
    let w = two * p - one;
    let numerator = q * q * (q * q + (one - p).powi(2) + delta + delta * delta);
    let denominator = delta * delta * (w + delta) * (w + two * delta);
    Ok(gamma1 * gamma1 * p / w * numerator / denominator)
}

/// Limit variance of the pseudo-ML Hill estimator, `gamma1^2 / p`.
pub fn sigma2_hill<T: Scalar>(gamma1: T, p: T) -> T {
    gamma1 * gamma1 / p
}

/// `sqrt(k) (k/n)^{gamma beta_*}`, the finite-sample proxy of the bias
/// scale `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaBias<T> {
    pub value: T,
    /// Set when `gamma beta_* = 0`, i.e. no second-order term: the caller
    /// should use `lambda = 0` instead of `value`.
    pub exact_power_law: bool,
}

pub fn lambda_bias<T: Scalar>(k: usize, n: usize, gamma_beta_star: T) -> LambdaBias<T> {
    let kf = T::from_count(k);
    let ratio = kf / T::from_count(n);
    LambdaBias {
        value: kf.sqrt() * ratio.powf(gamma_beta_star),
        exact_power_law: gamma_beta_star == T::zero(),
    }
}

/// Model constants entering the normal limit of the estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticParams<T> {
    pub gamma1: T,
    pub gamma2: T,
    pub gamma: T,
    pub p: T,
    pub beta: T,
    pub hall_f: HallParams<T>,
    pub hall_g: HallParams<T>,
    pub hall_z: HallParams<T>,
    pub lambda: T,
}

impl<T: Scalar> AsymptoticParams<T> {
    pub fn from_model(model: &CensorModel<T>, beta: T, lambda: T) -> Self {
        let hall_f = model.target.hall_params();
        let hall_g = model.censor.hall_params();
        let hall_z = censoring::combined_hall(&hall_f, &hall_g);
        Self {
            gamma1: hall_f.gamma,
            gamma2: hall_g.gamma,
            gamma: hall_z.gamma,
            p: model.theoretical_p(),
            beta,
            hall_f,
            hall_g,
            hall_z,
            lambda,
        }
    }

    /// Like [`from_model`](Self::from_model) with `lambda` evaluated at
    /// `(k, n)`; zero for exact power laws.
    pub fn at_sample_size(model: &CensorModel<T>, beta: T, k: usize, n: usize) -> Self {
        let mut params = Self::from_model(model, beta, T::zero());
        params.lambda = params.lambda_at(k, n);
        params
    }

    pub fn lambda_at(&self, k: usize, n: usize) -> T {
        match self.hall_z.rate {
            None => T::zero(),
            Some(rate) => lambda_bias(k, n, self.gamma * rate).value,
        }
    }

    pub fn p_beta(&self) -> T {
        censoring::p_beta(self.p, self.gamma, self.beta)
    }

    pub fn sigma2_t(&self) -> Result<T, AsymptoticError> {
        sigma2_t(self.gamma, self.p, self.beta)
    }

    pub fn sigma2_gamma(&self) -> Result<T, AsymptoticError> {
        sigma2_gamma(self.gamma1, self.p, self.beta)
    }

    pub fn sigma2_hill(&self) -> T {
        sigma2_hill(self.gamma1, self.p)
    }

    /// Bias-reduced variance with `delta = gamma beta1`; `None` when the
    /// target law has no second-order term.
    pub fn sigma2_br(&self) -> Option<Result<T, AsymptoticError>> {
        self.hall_f
            .rate
            .map(|beta1| sigma2_br(self.gamma1, self.p, self.gamma * beta1))
    }

    /// Mean `m_beta` of the normal limit of `T_k(beta)` per unit `lambda`.
    pub fn m_t(&self) -> Result<T, AsymptoticError> {
        let pb = self.p_beta();
        require_normal_regime(pb)?;
        let beta1 = match self.hall_f.rate {
            None => return Ok(T::zero()),
            Some(r) => r,
        };
        if let Some(beta2) = self.hall_g.rate {
            if beta1 > beta2 {
                return Ok(T::zero());
            }
        }
        let g = self.gamma;
        let d1 = self.hall_f.d;
        let c = self.hall_z.c;
        Ok(-g * g * beta1 * d1 * c.powf(-g * beta1) / (pb * (pb + g * beta1)))
    }

    /// Mean of the normal limit of `gamma1_hat(beta)`, `m_beta (1 + beta gamma1)^2`.
    pub fn m_gamma(&self) -> Result<T, AsymptoticError> {
        Ok(self.m_t()? * (T::one() + self.beta * self.gamma1).powi(2))
    }
}

/// Standard normal quantile `z` with `P(|N| <= z) = level`.
pub fn normal_half_width(level: f64) -> Result<f64, AsymptoticError> {
    if !(0.0..1.0).contains(&level) {
        return Err(AsymptoticError::Domain(format!(
            "confidence level must lie in [0, 1), got {level}"
        )));
    }
    if level == 0.0 {
        return Ok(0.0);
    }
    Ok(Normal::standard().inverse_cdf(0.5 * (1.0 + level)))
}

/// `value +/- z * stderr` from the plug-in normal limit. The asymptotic bias
/// is not subtracted. First-order only: with no second-order bias the limit
/// also needs `n = O(k^B)` for some unspecified `B`, which is not checked.
pub fn confidence_interval<T: Scalar>(
    estimate: &EstimateResult<T>,
    level: f64,
) -> Result<(T, T), AsymptoticError> {
    if let Some(pb) = estimate.p_beta_hat {
        require_normal_regime(pb)?;
    }
    let se = estimate.stderr.ok_or(AsymptoticError::NoStandardError)?;
    let half = T::lit(normal_half_width(level)?) * se;
    Ok((estimate.value - half, estimate.value + half))
}

/// Deterministic quantities bounded in the analysis of the weighted sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma1Terms {
    /// `1 + i log((i-1)/i)`, in `[-1/i, 0]`.
    pub c_i: f64,
    /// `sum_{j=i}^k 1/j - log((k+1)/i)`, in `[0, 1/i]`.
    pub harmonic_gap: f64,
    /// `(1/i) sum_{j=2}^i u_j^{-a} - u_i^{-a}/(1-a)` with `u_j = j/(k+1)`.
    pub d_ik: f64,
}

fn check_lemma1_args(i: usize, k: usize, a: f64) -> Result<(), AsymptoticError> {
    if i < 2 || i > k {
        return Err(AsymptoticError::Domain(format!(
            "need 2 <= i <= k, got i = {i}, k = {k}"
        )));
    }
    if a == 1.0 || !a.is_finite() {
        return Err(AsymptoticError::Domain(format!("a must be finite and != 1, got {a}")));
    }
    Ok(())
}

pub fn lemma1_bounds(i: usize, k: usize, a: f64) -> Result<Lemma1Terms, AsymptoticError> {
    check_lemma1_args(i, k, a)?;
    let k1 = (k + 1) as f64;
    let fi = i as f64;
    let c_i = 1.0 + fi * (-1.0 / fi).ln_1p();
    let harmonic: f64 = (i..=k).map(|j| 1.0 / j as f64).sum();
    let harmonic_gap = harmonic - (k1 / fi).ln();
    let partial: f64 = (2..=i).map(|j| (j as f64 / k1).powf(-a)).sum();
    let d_ik = partial / fi - (fi / k1).powf(-a) / (1.0 - a);
    Ok(Lemma1Terms {
        c_i,
        harmonic_gap,
        d_ik,
    })
}

/// [`lemma1_bounds`] for every `i` in `2..=k` at once, in `O(k)`.
pub fn lemma1_column(k: usize, a: f64) -> Result<Vec<Lemma1Terms>, AsymptoticError> {
    check_lemma1_args(2, k, a)?;
    let k1 = (k + 1) as f64;
    let mut tail_harmonic = vec![0.0; k + 2];
    for j in (2..=k).rev() {
        tail_harmonic[j] = tail_harmonic[j + 1] + 1.0 / j as f64;
    }
    let mut partial = 0.0;
    Ok((2..=k)
        .map(|i| {
            let fi = i as f64;
            let ui_pow = (fi / k1).powf(-a);
            partial += ui_pow;
            Lemma1Terms {
                c_i: 1.0 + fi * (-1.0 / fi).ln_1p(),
                harmonic_gap: tail_harmonic[i] - (k1 / fi).ln(),
                d_ik: partial / fi - ui_pow / (1.0 - a),
            }
        })
        .collect())
}
