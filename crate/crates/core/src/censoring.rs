//! Random right-censoring: the observed sample `(Z, delta)` and the
//! theoretical quantities of the censoring model.

use std::cmp::Ordering;
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::{HallParams, HeavyTailDist};
use crate::Scalar;

#[derive(Debug, Error)]
pub enum CensoringError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("a censored sample needs at least 3 observations, got {0}")]
    TooFewObservations(usize),
    #[error("observation {index} is not a finite positive number ({value})")]
    NonPositive { index: usize, value: f64 },
    #[error("tail indices must be positive, got gamma1={gamma1}, gamma2={gamma2}")]
    NonPositiveIndex { gamma1: f64, gamma2: f64 },
    #[error("P(delta = 1 | Z = {0}) is undefined: both hazard contributions vanish")]
    UndefinedConditional(f64),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Ascending order statistics `Z_{1,n} <= ... <= Z_{n,n}` with their
/// non-censoring indicators carried along.
///
/// At tied `Z` values the uncensored observations come first.
#[derive(Debug, Clone, PartialEq)]
pub struct CensoredSample<T> {
    z: Vec<T>,
    delta: Vec<bool>,
}

impl<T: Scalar> CensoredSample<T> {
    /// Sorts the pairs and validates them.
    pub fn new(z: Vec<T>, delta: Vec<bool>) -> Result<Self, CensoringError> {
        if z.len() != delta.len() {
            return Err(CensoringError::LengthMismatch {
                left: z.len(),
                right: delta.len(),
            });
        }
        if z.len() < 3 {
            return Err(CensoringError::TooFewObservations(z.len()));
        }
        if let Some((index, value)) = z
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > T::zero()))
        {
            return Err(CensoringError::NonPositive {
                index,
                value: value.as_f64(),
            });
        }
        let mut pairs: Vec<(T, bool)> = z.into_iter().zip(delta).collect();
        pairs.sort_by(|a, b| match a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal) {
            Ordering::Equal => b.1.cmp(&a.1),
            o => o,
        });
        let (z, delta) = pairs.into_iter().unzip();
        Ok(Self { z, delta })
    }

    /// Builds `Z_i = min(x_i, c_i)`, `delta_i = [x_i <= c_i]`.
    pub fn censor_pairs(x: &[T], c: &[T]) -> Result<Self, CensoringError> {
        if x.len() != c.len() {
            return Err(CensoringError::LengthMismatch {
                left: x.len(),
                right: c.len(),
            });
        }
        let (z, delta) = x
            .iter()
            .zip(c)
            .map(|(&xi, &ci)| if xi <= ci { (xi, true) } else { (ci, false) })
            .unzip();
        Self::new(z, delta)
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn z(&self) -> &[T] {
        &self.z
    }

    pub fn delta(&self) -> &[bool] {
        &self.delta
    }

    /// Returns a copy with every observation multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Result<Self, CensoringError> {
        Self::new(
            self.z.iter().map(|&v| v * factor).collect(),
            self.delta.clone(),
        )
    }

    /// Reads the `z,delta` CSV format. Rows may come in any order.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, CensoringError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut records = rdr.records();
        let parse_err = |line: u64, message: String| CensoringError::Parse { line, message };

        match records.next() {
            None => return Err(parse_err(1, "empty input, expected header `z,delta`".into())),
            Some(Err(e)) => return Err(parse_err(1, e.to_string())),
            Some(Ok(header)) => {
                if header.len() != 2 || &header[0] != "z" || &header[1] != "delta" {
                    return Err(parse_err(1, "expected header `z,delta`".into()));
                }
            }
        }

        let mut z = Vec::new();
        let mut delta = Vec::new();
        for record in records {
            let record = record.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                parse_err(line, e.to_string())
            })?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() != 2 {
                return Err(parse_err(line, format!("expected 2 fields, found {}", record.len())));
            }
            let value: f64 = record[0]
                .parse()
                .map_err(|_| parse_err(line, format!("invalid z value `{}`", &record[0])))?;
            if !(value.is_finite() && value > 0.0) {
                return Err(parse_err(line, format!("z must be positive, got `{}`", &record[0])));
            }
            let d = match &record[1] {
                "0" => false,
                "1" => true,
                other => return Err(parse_err(line, format!("delta must be 0 or 1, got `{other}`"))),
            };
            z.push(T::lit(value));
            delta.push(d);
        }
        Self::new(z, delta)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CensoringError> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    /// Writes the `z,delta` CSV format using shortest round-trip formatting.
    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<(), CensoringError> {
        writeln!(writer, "z,delta")?;
        for (z, d) in self.z.iter().zip(&self.delta) {
            writeln!(writer, "{},{}", z, u8::from(*d))?;
        }
        Ok(())
    }
}

/// Independent target `X ~ F` and censoring variable `C ~ G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CensorModel<T> {
    pub target: HeavyTailDist<T>,
    pub censor: HeavyTailDist<T>,
}

impl<T: Scalar> CensorModel<T> {
    pub fn new(target: HeavyTailDist<T>, censor: HeavyTailDist<T>) -> Self {
        Self { target, censor }
    }

    /// Draws `n` target values, then `n` censoring values, and censors them.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        n: usize,
    ) -> Result<CensoredSample<T>, CensoringError> {
        let x = self.target.sample(rng, n);
        let c = self.censor.sample(rng, n);
        CensoredSample::censor_pairs(&x, &c)
    }

    pub fn gamma1(&self) -> T {
        self.target.gamma()
    }

    pub fn gamma2(&self) -> T {
        self.censor.gamma()
    }

    /// Extreme value index of `Z`.
    pub fn gamma(&self) -> T {
        self.hall_z().gamma
    }

    pub fn theoretical_p(&self) -> T {
        theoretical_p(self.gamma1(), self.gamma2()).expect("distribution indices are positive")
    }

    pub fn hall_z(&self) -> HallParams<T> {
        combined_hall(&self.target.hall_params(), &self.censor.hall_params())
    }

    /// `P(delta = 1 | Z = z)`.
    pub fn p_of_z(&self, z: T) -> Result<T, CensoringError> {
        let event = self.target.density(z) * self.censor.survival(z);
        let censored = self.censor.density(z) * self.target.survival(z);
        let total = event + censored;
        if !(total > T::zero()) {
            return Err(CensoringError::UndefinedConditional(z.as_f64()));
        }
        Ok(event / total)
    }
}

/// Tail proportion of uncensored observations, `gamma2 / (gamma1 + gamma2)`.
pub fn theoretical_p<T: Scalar>(gamma1: T, gamma2: T) -> Result<T, CensoringError> {
    if !(gamma1 > T::zero() && gamma2 > T::zero()) {
        return Err(CensoringError::NonPositiveIndex {
            gamma1: gamma1.as_f64(),
            gamma2: gamma2.as_f64(),
        });
    }
    Ok(gamma2 / (gamma1 + gamma2))
}

/// `p + gamma beta`, equivalently `p (1 + gamma1 beta)`.
pub fn p_beta<T: Scalar>(p: T, gamma: T, beta: T) -> T {
    p + gamma * beta
}

/// Hall constants of `Z = min(X, C)` from those of `X` and `C`.
///
/// An exact power law contributes no second-order term; equal rates add
/// their `D` constants (possibly cancelling to zero while keeping the rate).
pub fn combined_hall<T: Scalar>(f: &HallParams<T>, g: &HallParams<T>) -> HallParams<T> {
    let gamma = (f.gamma.recip() + g.gamma.recip()).recip();
    let c = f.c * g.c;
    let (d, rate) = match (f.rate, g.rate) {
        (None, None) => (T::zero(), None),
        (Some(r), None) => (f.d, Some(r)),
        (None, Some(r)) => (g.d, Some(r)),
        (Some(r1), Some(r2)) => {
            if r1 < r2 {
                (f.d, Some(r1))
            } else if r2 < r1 {
                (g.d, Some(r2))
            } else {
                (f.d + g.d, Some(r1))
            }
        }
    };
    HallParams { gamma, c, d, rate }
}
