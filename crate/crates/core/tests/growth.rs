//! Normalized-growth checks of the runtime bounds on the stepping stones
//! function at desk-scale n.

use dss_core::analysis::{convergence_study, runtime_float, time_to_any_stone, SearchParams};
use dss_core::fitness::{alpha, build_dss};

fn runtime(p: f64, n: usize, q: f64) -> f64 {
    runtime_float(&build_dss(p, n).unwrap().0, q).unwrap()
}

#[test]
fn runtime_at_p_is_alpha_n_log_n() {
    for p in [0.2, 0.3, 0.7, 0.8] {
        let a = alpha(p).unwrap();
        let normalized = |n: usize| runtime(p, n, p) / (a.powi(n as i32) * (1.0 + (n as f64).ln()));
        let fitted = (10..=40).step_by(5).map(normalized).fold(f64::MIN, f64::max);
        for n in [50, 60] {
            assert!(normalized(n) <= fitted, "p={p} n={n}: {} > {fitted}", normalized(n));
        }
    }
}

#[test]
fn mismatched_rates_fall_behind_exponentially() {
    let ns = [10usize, 20, 30, 40];
    for p in [0.3, 0.7] {
        for q in [0.1f64, 0.2, 0.4, 0.5, 0.6, 0.8, 0.9] {
            if (q - p).abs() < 0.1 - 1e-12 {
                continue;
            }
            let ratios: Vec<f64> = ns.iter().map(|&n| runtime(p, n, q) / runtime(p, n, p)).collect();
            assert!(
                ratios.windows(2).all(|w| w[1] > w[0]),
                "p={p} q={q}: {ratios:?}"
            );
        }
    }
}

#[test]
fn optimal_rate_gap_does_not_grow() {
    let params = SearchParams { coarse_points: 128, ..SearchParams::default() };
    for p in [0.2, 0.3, 0.7, 0.8] {
        let report = convergence_study(p, &[10, 20, 30, 40], &params).unwrap();
        let first = (report.rows[0].q_star.unwrap() - p).abs();
        let last = (report.rows[3].q_star.unwrap() - p).abs();
        assert!(last <= first, "p={p}: {first} -> {last}");
        assert!(report.rows.iter().all(|r| r.boundary_flag == Some(false)));
    }
}

#[test]
fn reaching_a_stone_takes_order_alpha_n() {
    for p in [0.3, 0.7] {
        let a = alpha(p).unwrap();
        let scaled: Vec<f64> = [10usize, 20, 30, 40, 50]
            .iter()
            .map(|&n| {
                let (f, prof) = build_dss(p, n).unwrap();
                time_to_any_stone(&f, &prof, p).unwrap() / a.powi(n as i32)
            })
            .collect();
        assert!(scaled.iter().all(|&s| s > 0.0 && s < 1.0), "p={p}: {scaled:?}");
    }
}
