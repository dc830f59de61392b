use std::time::Instant;

use approx::assert_relative_eq;
use cevi::estimators::{self, box_cox, gamma_from_t, EstimationContext};
use cevi::{CensorModel, CensoredSample, EstimatorError, EstimatorSpec, HeavyTailDist};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pareto(gamma: f64) -> HeavyTailDist<f64> {
    HeavyTailDist::pareto(gamma, 1.0).unwrap()
}

fn pareto_pair() -> CensorModel<f64> {
    CensorModel::new(pareto(0.5), pareto(1.5))
}

fn burr_pair() -> CensorModel<f64> {
    CensorModel::new(
        HeavyTailDist::burr(10.0, 2.0, 5.0).unwrap(),
        HeavyTailDist::burr(10.0, 4.0, 1.0).unwrap(),
    )
}

fn uncensored(seed: u64, n: usize) -> CensoredSample<f64> {
    let x = pareto(0.5).sample(&mut ChaCha8Rng::seed_from_u64(seed), n);
    CensoredSample::new(x, vec![true; n]).unwrap()
}

fn with_delta(z: &[f64], d: &[u8]) -> CensoredSample<f64> {
    CensoredSample::new(z.to_vec(), d.iter().map(|&v| v == 1).collect()).unwrap()
}

/// Direct evaluation of the weighted statistic from its definition, with the
/// uncensored Kaplan-Meier values `(n - i)/n` written out by hand.
fn direct_t_uncensored(z: &[f64], k: usize, beta: f64) -> f64 {
    let n = z.len();
    let zs = |m: usize| z[m - 1];
    let kb = |u: f64| if beta == 0.0 { u.ln() } else { (1.0 - u.powf(-beta)) / beta };
    (2..=k)
        .map(|j| {
            let w = (j - 1) as f64 / k as f64;
            w * (kb(zs(n - j + 1) / zs(n - k)) - kb(zs(n - j) / zs(n - k)))
        })
        .sum()
}

fn classical_hill(z: &[f64], k: usize) -> f64 {
    let n = z.len();
    (1..=k).map(|i| (z[n - i] / z[n - k - 1]).ln()).sum::<f64>() / k as f64
}

#[test]
fn box_cox_examples() {
    assert_relative_eq!(box_cox(std::f64::consts::E, 0.0).unwrap(), 1.0, max_relative = 1e-15);
    assert_relative_eq!(box_cox(2.0, 1.0).unwrap(), 0.5, max_relative = 1e-15);
    assert_relative_eq!(box_cox(3.0, -1.0).unwrap(), 2.0, max_relative = 1e-15);
    assert_eq!(box_cox(1.0, 0.7).unwrap(), 0.0);
    assert!(matches!(box_cox(0.9, 0.5), Err(EstimatorError::BoxCoxDomain(_))));
    // log branch with its first-order correction
    let u = 5.0f64;
    let l = u.ln();
    assert_relative_eq!(box_cox(u, 1e-9).unwrap(), l - 1e-9 * l * l / 2.0, max_relative = 1e-15);
}

#[test]
fn uncensored_t_stat_matches_direct_summation_and_telescoping() {
    for seed in 0..50 {
        let s = uncensored(seed, 300);
        let z = s.z();
        let n = z.len();
        for k in [2, 3, 10, 150, 299] {
            let t = estimators::t_stat(&s, k, 0.0).unwrap();
            let hill = classical_hill(z, k);
            let telescoped = hill - (z[n - 1] / z[n - k - 1]).ln() / k as f64;
            assert_relative_eq!(t, telescoped, max_relative = 1e-12);
            assert_relative_eq!(t, direct_t_uncensored(z, k, 0.0), max_relative = 1e-12);
            for beta in [-1.0, 0.5, 1.5] {
                let t = estimators::t_stat(&s, k, beta).unwrap();
                assert_relative_eq!(t, direct_t_uncensored(z, k, beta), max_relative = 1e-12);
            }
        }
    }
}

#[test]
fn all_censored_t_stat_telescopes() {
    let m = CensorModel::new(pareto(0.5), pareto(0.5));
    let x = m.target.sample(&mut ChaCha8Rng::seed_from_u64(3), 200);
    let s = CensoredSample::new(x, vec![false; 200]).unwrap();
    let z = s.z();
    for k in [2, 7, 100, 199] {
        for beta in [-1.0, 0.0, 0.5, 1.5] {
            let t = estimators::t_stat(&s, k, beta).unwrap();
            let expected = box_cox(z[198] / z[200 - k - 1], beta).unwrap();
            assert_relative_eq!(t, expected, max_relative = 1e-12);
        }
    }
    assert!(matches!(
        estimators::gamma_hill(&s, 10),
        Err(EstimatorError::AllCensored { k: 10 })
    ));
}

#[test]
fn k_range_is_enforced() {
    let s = uncensored(1, 20);
    assert!(matches!(
        estimators::t_stat(&s, 1, 0.0),
        Err(EstimatorError::KOutOfRange { k: 1, .. })
    ));
    assert!(estimators::t_stat(&s, 19, 0.0).is_ok());
    assert!(estimators::t_stat(&s, 20, 0.0).is_err());
    assert!(estimators::gamma_hill(&s, 1).is_ok());
    assert!(estimators::p_hat(&s, 20).is_ok());
    assert!(estimators::p_hat(&s, 0).is_err());
}

#[test]
fn gamma_beta_arithmetic() {
    assert_relative_eq!(gamma_from_t(0.2, 1.0).unwrap(), 0.25, max_relative = 1e-15);
    assert!(matches!(gamma_from_t(0.5, 2.0), Err(EstimatorError::Singular { .. })));

    // all censored, n = 4, k = 2: T(1) = 1 - Z_{2,4}/Z_{3,4} = 0.2
    let s = with_delta(&[0.5, 1.0, 1.25, 3.0], &[0, 0, 0, 0]);
    assert_relative_eq!(estimators::t_stat(&s, 2, 1.0).unwrap(), 0.2, max_relative = 1e-14);
    assert_relative_eq!(estimators::gamma_beta(&s, 2, 1.0).unwrap().value, 0.25, max_relative = 1e-14);

    // T(2) = (1 - 1e-10)/2 leaves 1 - 2T = 1e-10
    let s = with_delta(&[1.0, 1e5, 2e5], &[0, 0, 0]);
    assert!(matches!(
        estimators::gamma_beta(&s, 2, 2.0),
        Err(EstimatorError::Singular { .. })
    ));
}

#[test]
fn gamma_w_is_the_beta_zero_case() {
    let m = burr_pair();
    for seed in 0..20 {
        let s = m.sample(&mut ChaCha8Rng::seed_from_u64(seed), 400).unwrap();
        let ctx = EstimationContext::new(&s);
        for k in [2, 20, 200, 399] {
            let w = ctx.gamma_w(k).unwrap().value;
            assert_eq!(w, ctx.t_stat(k, 0.0).unwrap());
            assert_eq!(w, ctx.gamma_beta(k, 0.0).unwrap().value);
        }
    }
}

#[test]
fn gamma_w_matches_weighted_log_spacings() {
    // z = (1,2,3,4), delta = (1,0,1,1): KM = (0.75, 0.75, 0.375, 0).
    // k = 3: Z_{1,4} = 1 is the threshold; j = 2 uses KM(Z_3)/KM(Z_1) = 0.5,
    // j = 3 uses KM(Z_2)/KM(Z_1) = 1.
    let s = with_delta(&[1.0, 2.0, 3.0, 4.0], &[1, 0, 1, 1]);
    let expected = 0.5 * (3.0f64 / 2.0).ln() + (2.0f64).ln();
    assert_relative_eq!(estimators::gamma_w(&s, 3).unwrap().value, expected, max_relative = 1e-15);
}

#[test]
fn p_hat_examples() {
    let s = with_delta(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0, 1, 0, 1, 1]);
    assert_eq!(estimators::p_hat(&s, 4).unwrap(), 0.75);
    assert_eq!(estimators::p_hat(&uncensored(2, 50), 30).unwrap(), 1.0);
}

#[test]
fn p_hat_in_the_burr_tail() {
    // The top 1000 of 10^5 sit near the 1% level of Z, where the uncensored
    // fraction is 0.5739 by quadrature (the limit 5/7 is reached much deeper).
    let s = burr_pair().sample(&mut ChaCha8Rng::seed_from_u64(11), 100_000).unwrap();
    let p = estimators::p_hat(&s, 1000).unwrap();
    let target = 0.573_903;
    assert!((p - target).abs() < 3.0 * (target * (1.0 - target) / 1000.0).sqrt(), "{p}");
}

#[test]
fn hill_reductions() {
    let s = uncensored(4, 500);
    for k in [1, 10, 250, 499] {
        let h = estimators::gamma_hill(&s, k).unwrap();
        assert_relative_eq!(h.value, classical_hill(s.z(), k), max_relative = 1e-12);
        assert_eq!(h.p_hat, 1.0);
    }
}

#[test]
fn large_sample_pareto_estimates_are_centred() {
    let s = pareto_pair().sample(&mut ChaCha8Rng::seed_from_u64(21), 100_000).unwrap();
    let ctx = EstimationContext::new(&s);
    let k = 2000;
    let t = ctx.t_stat_estimate(k, 0.0).unwrap();
    assert!((t.value - 0.5).abs() < 3.0 * t.stderr.unwrap(), "{t:?}");
    let h = ctx.gamma_hill(k).unwrap();
    // stderr^2 = gamma1^2 / (p k) with the true p = 3/4
    let se = (0.25 / (0.75 * k as f64)).sqrt();
    assert!((h.value - 0.5).abs() < 3.0 * se, "{h:?}");

    let s = uncensored(22, 100_000);
    let br = estimators::gamma_br(&s, k, -2.0).unwrap();
    // p = 1, delta = 2: sigma2_br = 0.25 * 9 * 15 / (4 * 3 * 5)
    let se = (0.5625 / k as f64).sqrt();
    assert_relative_eq!(br.stderr.unwrap(), (0.5625f64 / k as f64).sqrt(), max_relative = 0.1);
    assert!((br.value - 0.5).abs() < 3.0 * se, "{br:?}");
}

#[test]
fn bias_reduction_examples() {
    let s = uncensored(5, 300);
    let ctx = EstimationContext::new(&s);
    for rho1 in [-0.5, -1.0, -1.5, -2.0] {
        for k in [10, 100, 250] {
            let g = ctx.gamma_w(k).unwrap().value;
            let t = ctx.t_stat(k, -rho1 / g).unwrap();
            let factor: f64 = (1.0 - rho1) * (1.0 - rho1) * (1.0 - 2.0 * rho1) / (rho1 * rho1);
            let expected = g - factor * (t - g / (1.0 - rho1));
            assert_relative_eq!(ctx.gamma_br(k, rho1).unwrap().value, expected, max_relative = 1e-12);
        }
    }
    assert!(matches!(ctx.gamma_br(10, 0.0), Err(EstimatorError::InvalidSpec(_))));
    assert!(EstimatorSpec::bias_reduced(1.0).is_err());

    // all censored, k = 2: g = log(Z_{3,4}/Z_{2,4}) * 1 > 0 but with a tie it is 0
    let s = with_delta(&[1.0, 2.0, 2.0, 5.0], &[0, 0, 0, 0]);
    assert!(matches!(
        estimators::gamma_br(&s, 2, -1.0),
        Err(EstimatorError::NonPositiveGammaW { k: 2, .. })
    ));
}

#[test]
fn left_limit_variant_sums_from_one() {
    let s = uncensored(6, 200);
    let ctx = EstimationContext::new(&s);
    let z = s.z();
    for k in [2, 50, 199] {
        // uncensored left-limit weights are j/k, giving the classical Hill
        let wl = ctx.gamma_w_left_limit(k).unwrap().value;
        assert_relative_eq!(wl, classical_hill(z, k), max_relative = 1e-12);
    }
    let spec: EstimatorSpec<f64> = "WL".parse().unwrap();
    assert_eq!(ctx.estimate(&spec, 50).unwrap().value, ctx.gamma_w_left_limit(50).unwrap().value);
}

#[test]
fn spec_grammar() {
    let cases = ["W", "WL", "H", "T:beta=0.5", "G:beta=-1", "BR:rho1=-1.5"];
    for c in cases {
        let spec: EstimatorSpec<f64> = c.parse().unwrap();
        assert_eq!(spec.to_string(), c);
    }
    assert_eq!("G:beta=1.5".parse::<EstimatorSpec<f64>>().unwrap(), EstimatorSpec::GammaBeta { beta: 1.5 });
    for bad in ["", "X", "G:beta", "G:rho1=1", "BR:rho1=0.5", "T:beta=nan", "G:beta=abc"] {
        assert!(bad.parse::<EstimatorSpec<f64>>().is_err(), "{bad}");
    }
}

#[test]
fn estimate_flags_and_intervals() {
    let s = pareto_pair().sample(&mut ChaCha8Rng::seed_from_u64(8), 2000).unwrap();
    let ctx = EstimationContext::new(&s);
    let r = ctx.gamma_w(200).unwrap().with_ci(0.95);
    let (lo, hi) = r.ci.unwrap();
    assert!(lo <= r.value && r.value <= hi);
    assert_relative_eq!(hi - r.value, 1.959_963_984_540_054 * r.stderr.unwrap(), max_relative = 1e-9);
    let r0 = ctx.gamma_w(200).unwrap().with_ci(0.0);
    assert_eq!(r0.ci, Some((r0.value, r0.value)));

    // a strongly negative beta pushes the plug-in p_beta below 1/2
    let g = ctx.gamma_beta(200, -5.0).unwrap();
    assert!(g.flags.outside_theorem);
    assert!(g.p_beta_hat.unwrap() <= 0.5);
    assert!(g.stderr.is_none());
    assert!(g.with_ci(0.95).ci.is_none());
}

#[test]
fn sweep_matches_pointwise_calls() {
    let s = burr_pair().sample(&mut ChaCha8Rng::seed_from_u64(9), 500).unwrap();
    let ctx = EstimationContext::new(&s);
    let specs: Vec<EstimatorSpec<f64>> = ["W", "H", "G:beta=-1", "G:beta=1.5", "T:beta=0.5", "BR:rho1=-2"]
        .iter()
        .map(|c| c.parse().unwrap())
        .collect();
    for spec in &specs {
        let pts = ctx.sweep(spec, 2, 499, 1).unwrap();
        assert_eq!(pts.len(), 498);
        for p in &pts {
            assert_eq!(p.outcome, ctx.estimate(spec, p.k));
        }
        let single = ctx.sweep(spec, 40, 40, 3).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].outcome, ctx.estimate(spec, 40));
    }
    assert!(matches!(ctx.sweep(&specs[0], 10, 5, 1), Err(EstimatorError::EmptyRange { .. })));
    assert!(ctx.sweep(&specs[0], 10, 20, 0).is_err());
    assert!(ctx.sweep(&specs[0], 1, 20, 1).is_err());
    assert!(ctx.sweep(&specs[0], 2, 500, 1).is_err());
}

#[test]
fn full_sweep_is_fast() {
    let s = burr_pair().sample(&mut ChaCha8Rng::seed_from_u64(10), 500).unwrap();
    let start = Instant::now();
    for spec in ["W", "H", "G:beta=-1", "G:beta=0.5", "G:beta=1.5", "BR:rho1=-1.5", "BR:rho1=-2"] {
        let spec: EstimatorSpec<f64> = spec.parse().unwrap();
        estimators::sweep(&s, &spec, 2, 499, 1).unwrap();
    }
    assert!(start.elapsed().as_secs_f64() < 1.0, "{:?}", start.elapsed());
}

#[test]
fn t_stat_is_continuous_at_beta_zero() {
    let m = burr_pair();
    for seed in 0..50 {
        let s = m.sample(&mut ChaCha8Rng::seed_from_u64(seed), 300).unwrap();
        let ctx = EstimationContext::new(&s);
        for k in [5, 50, 299] {
            let a = ctx.t_stat(k, 1e-9).unwrap();
            let b = ctx.t_stat(k, 0.0).unwrap();
            assert!((a - b).abs() < 1e-7);
            let c = ctx.t_stat(k, 1e-7).unwrap();
            assert!((c - b).abs() < 1e-5);
        }
    }
}

#[test]
fn w_sweep_on_pareto_stays_in_band() {
    let n = 100_000;
    let (mut inside, mut total) = (0usize, 0usize);
    for seed in 0..50 {
        let s = pareto_pair().sample(&mut ChaCha8Rng::seed_from_u64(1000 + seed), n).unwrap();
        let ctx = EstimationContext::new(&s);
        for p in ctx.sweep(&EstimatorSpec::GammaW, 50, n / 5, 25).unwrap() {
            let r = p.outcome.unwrap();
            total += 1;
            if (r.value - 0.5).abs() <= 3.0 * r.stderr.unwrap() {
                inside += 1;
            }
        }
    }
    let frac = inside as f64 / total as f64;
    assert!(frac >= 0.9, "{frac}");
}

#[test]
fn f32_estimates_track_f64() {
    let s = burr_pair().sample(&mut ChaCha8Rng::seed_from_u64(12), 500).unwrap();
    let s32 = CensoredSample::new(
        s.z().iter().map(|&v| v as f32).collect(),
        s.delta().to_vec(),
    )
    .unwrap();
    let a = estimators::gamma_w(&s, 100).unwrap().value;
    let b = estimators::gamma_w(&s32, 100).unwrap().value;
    assert!((a - b as f64).abs() < 1e-4 * a.abs().max(1.0));
}

fn scale_invariance_holds(s: &CensoredSample<f64>, c: f64, k: usize) -> Result<(), TestCaseError> {
    let scaled = s.scaled(c).unwrap();
    let a = EstimationContext::new(s);
    let b = EstimationContext::new(&scaled);
    let specs: [EstimatorSpec<f64>; 6] = [
        EstimatorSpec::TStat { beta: 0.5 },
        EstimatorSpec::GammaBeta { beta: -1.0 },
        EstimatorSpec::GammaBeta { beta: 1.5 },
        EstimatorSpec::GammaW,
        EstimatorSpec::Hill,
        EstimatorSpec::BiasReduced { rho1: -1.5 },
    ];
    for spec in &specs {
        match (a.estimate(spec, k), b.estimate(spec, k)) {
            (Ok(x), Ok(y)) => {
                let tol = 1e-10 * x.value.abs().max(1.0);
                prop_assert!((x.value - y.value).abs() <= tol, "{spec} k={k}: {} vs {}", x.value, y.value);
            }
            (Err(_), Err(_)) => {}
            (x, y) => prop_assert!(false, "{spec}: {x:?} vs {y:?}"),
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn estimators_are_scale_invariant(seed in any::<u64>(), n in 10usize..400, c in prop::sample::select(vec![1e-3, 1.0, 1e3])) {
        let s = burr_pair().sample(&mut ChaCha8Rng::seed_from_u64(seed), n).unwrap();
        let k = ChaCha8Rng::seed_from_u64(seed ^ 1).random_range(2..n);
        scale_invariance_holds(&s, c, k)?;
    }

    #[test]
    fn gamma_beta_inverts_the_limit_map(seed in any::<u64>(), beta in -1.5f64..3.0) {
        let s = pareto_pair().sample(&mut ChaCha8Rng::seed_from_u64(seed), 300).unwrap();
        let ctx = EstimationContext::new(&s);
        for k in [10, 100, 299] {
            let t = ctx.t_stat(k, beta).unwrap();
            if let Ok(g) = ctx.gamma_beta(k, beta) {
                if 1.0 + beta * g.value > 0.0 {
                    prop_assert!((g.value / (1.0 + beta * g.value) - t).abs() <= 1e-12 * t.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn stderr_positive_and_ci_brackets_value(seed in any::<u64>(), k in 5usize..295) {
        let s = pareto_pair().sample(&mut ChaCha8Rng::seed_from_u64(seed), 300).unwrap();
        let ctx = EstimationContext::new(&s);
        for spec in [EstimatorSpec::GammaW, EstimatorSpec::Hill, EstimatorSpec::GammaBeta { beta: 0.5 }] {
            if let Ok(r) = ctx.estimate(&spec, k) {
                let r = r.with_ci(0.9);
                if let (Some(se), Some((lo, hi))) = (r.stderr, r.ci) {
                    prop_assert!(se > 0.0);
                    prop_assert!(lo <= r.value && r.value <= hi);
                }
            }
        }
    }
}
