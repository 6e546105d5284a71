//! The bit-level simulator against the exact unitation chain.

use dss_core::analysis::runtime_exact;
use dss_core::chain::transition_pmf;
use dss_core::fitness::{build_dss, build_onemax};
use dss_core::montecarlo::{estimate_runtime, sample_offspring_levels, DEFAULT_CAP};
use dss_core::Rate;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Pearson statistic with bins of expected count below 5 pooled together.
fn chi_square(observed: &[u64], probs: &[f64], samples: u64) -> (f64, usize) {
    let mut stat = 0.0;
    let mut bins = 0;
    let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        let e = p * samples as f64;
        if e < 5.0 {
            pooled_obs += o as f64;
            pooled_exp += e;
        } else {
            stat += (o as f64 - e).powi(2) / e;
            bins += 1;
        }
    }
    if pooled_exp > 0.0 {
        stat += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        bins += 1;
    }
    (stat, bins)
}

#[test]
fn one_step_distribution_matches_kernel() {
    let samples = 100_000;
    let mut seed = 1;
    for n in [1usize, 3, 6, 10] {
        for level in [0, n / 2, n] {
            for q in [0.1, 0.3, 0.5] {
                let observed = sample_offspring_levels(n, level, q, samples, seed).unwrap();
                seed += 1;
                let probs = transition_pmf(n, level, &q).unwrap();
                let (stat, bins) = chi_square(&observed, &probs, samples);
                if bins < 2 {
                    continue;
                }
                let critical = ChiSquared::new((bins - 1) as f64).unwrap().inverse_cdf(1.0 - 1e-3);
                assert!(stat < critical, "n={n} level={level} q={q}: {stat} >= {critical}");
            }
        }
    }
}

#[test]
fn onemax_mean_within_four_standard_errors() {
    let f = build_onemax(8).unwrap();
    let exact = runtime_exact(&f, &Rate::ratio(1, 8).unwrap()).unwrap();
    let exact = num_traits::ToPrimitive::to_f64(&exact).unwrap();
    let stats = estimate_runtime(&f, 0.125, 10_000, DEFAULT_CAP, 7).unwrap();
    let (mean, se) = (stats.mean_steps.unwrap(), stats.standard_error.unwrap());
    assert_eq!(stats.censored, 0);
    assert!((mean - exact).abs() <= 4.0 * se, "{mean} vs {exact} (se {se})");
}

#[test]
fn dss_half_mean_matches_uniform_sampling() {
    let (f, _) = build_dss(0.5, 10).unwrap();
    let exact = 1023.0; // (1 - 2^-10) 2^10
    let stats = estimate_runtime(&f, 0.5, 10_000, DEFAULT_CAP, 11).unwrap();
    let (mean, se) = (stats.mean_steps.unwrap(), stats.standard_error.unwrap());
    assert!((mean - exact).abs() <= 4.0 * se, "{mean} vs {exact} (se {se})");
}

#[test]
fn statistics_independent_of_thread_count() {
    let (f, _) = build_dss(0.3, 8).unwrap();
    let parallel = estimate_runtime(&f, 0.3, 500, DEFAULT_CAP, 99).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let serial = pool.install(|| estimate_runtime(&f, 0.3, 500, DEFAULT_CAP, 99).unwrap());
    assert_eq!(parallel, serial);
}
