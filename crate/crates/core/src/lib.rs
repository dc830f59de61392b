//! Extreme value index estimation for heavy-tailed data under random
//! right-censoring.
//!
//! The library observes pairs `(Z, delta)` with `Z = min(X, C)` and
//! `delta = [X <= C]`, and estimates the extreme value index `gamma1` of `X`
//! through Kaplan-Meier weighted Box-Cox excess statistics. It also carries
//! the pseudo-maximum-likelihood Hill competitor, a bias-reduced variant,
//! closed-form asymptotic variances and biases, and a seeded Monte Carlo
//! engine for finite-sample bias/MSE studies.
//!
//! All numerical code is generic over the floating point type through
//! [`Scalar`]; the `*F64` aliases below are what most callers want.

// `!(x > 0)` style checks reject NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod censoring;
pub mod distributions;
pub mod estimators;
pub mod kaplan_meier;
pub mod ks;
pub mod montecarlo;
mod scalar;

pub use asymptotics::{AsymptoticError, AsymptoticParams, Lemma1Terms};
pub use censoring::{CensorModel, CensoredSample, CensoringError};
pub use distributions::{DistributionError, HallParams, HeavyTailDist};
pub use estimators::{
    EstimateFlags, EstimateResult, EstimationContext, EstimatorError, EstimatorSpec, SweepPoint,
    WeightConvention,
};
pub use kaplan_meier::KmCurve;
pub use montecarlo::{CltCheck, EstimatorSummary, McConfig, McError, McSummary};
pub use scalar::Scalar;

pub type HeavyTailDistF64 = HeavyTailDist<f64>;
pub type HeavyTailDistF32 = HeavyTailDist<f32>;
pub type HallParamsF64 = HallParams<f64>;
pub type CensoredSampleF64 = CensoredSample<f64>;
pub type CensoredSampleF32 = CensoredSample<f32>;
pub type CensorModelF64 = CensorModel<f64>;
pub type KmCurveF64 = KmCurve<f64>;
pub type EstimatorSpecF64 = EstimatorSpec<f64>;
pub type EstimateResultF64 = EstimateResult<f64>;
pub type EstimationContextF64<'a> = EstimationContext<'a, f64>;
pub type AsymptoticParamsF64 = AsymptoticParams<f64>;
