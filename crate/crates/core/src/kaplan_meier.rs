//! Kaplan-Meier product-limit estimate of the target survival function,
//! evaluated at the order statistics of a censored sample.

use crate::censoring::CensoredSample;
use crate::Scalar;

/// Above this size the product is accumulated as a sum of logarithms.
const LOG_SPACE_THRESHOLD: usize = 10_000;

/// `values[i]` is the post-jump estimate at `Z_{i+1,n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct KmCurve<T> {
    values: Vec<T>,
}

impl<T: Scalar> KmCurve<T> {
    pub fn new(sample: &CensoredSample<T>) -> Self {
        let n = sample.len();
        let mut values = Vec::with_capacity(n);
        if n > LOG_SPACE_THRESHOLD {
            let mut log_s = T::zero();
            for (i, &event) in sample.delta().iter().enumerate() {
                // 1-based rank r = i + 1; factor (n - r) / (n - r + 1)
                if event {
                    let at_risk = n - i;
                    log_s = log_s + (-T::from_count(at_risk).recip()).ln_1p();
                }
                values.push(log_s.exp());
            }
        } else {
            let mut s = T::one();
            for (i, &event) in sample.delta().iter().enumerate() {
                if event {
                    let at_risk = n - i;
                    s = s * T::from_count(at_risk - 1) / T::from_count(at_risk);
                }
                values.push(s);
            }
        }
        Self { values }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Estimate at the `rank`-th order statistic `Z_{rank,n}` (1-based).
    pub fn at_rank(&self, rank: usize) -> T {
        self.values[rank - 1]
    }

    /// Weight `F_KM(Z_{n-j+1,n}) / F_KM(Z_{n-k,n})`.
    ///
    /// Requires `2 <= j <= k <= n - 1`; returns `None` otherwise.
    pub fn ratio(&self, j: usize, k: usize) -> Option<T> {
        let n = self.len();
        if j < 2 || j > k || k + 1 > n {
            return None;
        }
        Some(self.at_rank(n - j + 1) / self.at_rank(n - k))
    }

    /// Left-limit weight `F_KM(Z_{n-j,n}) / F_KM(Z_{n-k,n})`, i.e. the
    /// estimate just before `Z_{n-j+1,n}`. Valid for `1 <= j <= k <= n - 1`.
    pub fn left_limit_ratio(&self, j: usize, k: usize) -> Option<T> {
        let n = self.len();
        if j < 1 || j > k || k + 1 > n {
            return None;
        }
        Some(self.at_rank(n - j) / self.at_rank(n - k))
    }
}
