//! One-sample Kolmogorov-Smirnov statistic.

/// `sup_x |F_n(x) - F(x)|` for the empirical distribution of `data`.
///
/// Non-finite observations are not expected; they sort to the ends.
pub fn ks_statistic<F: Fn(f64) -> f64>(data: &[f64], cdf: F) -> f64 {
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let above = (i + 1) as f64 / n - f;
            let below = f - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value `1.63 / sqrt(n)`.
pub fn critical_value_1pct(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}
