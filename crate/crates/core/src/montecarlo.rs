//! Bit-level simulation of the (1+1) EA.
//!
//! Run `r` of a batch draws from a ChaCha8 stream keyed by `(seed, r)`, so a
//! batch gives the same statistics however its runs are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_open_unit, LabError, Result};
use crate::fitness::UnitationFitness;

pub const DEFAULT_CAP: u64 = 1_000_000;

fn stream(seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng
}

/// Flips each bit with probability `q`; returns the offspring's number of ones.
fn mutate_into(parent: &[bool], child: &mut [bool], q: f64, rng: &mut ChaCha8Rng) -> usize {
    let mut ones = 0;
    for (c, &p) in child.iter_mut().zip(parent) {
        *c = p ^ rng.gen_bool(q);
        ones += *c as usize;
    }
    ones
}

fn simulate(fitness: &UnitationFitness, q: f64, cap: u64, rng: &mut ChaCha8Rng) -> Option<u64> {
    let n = fitness.n;
    let mut parent: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
    let mut child = vec![false; n];
    let mut ones = parent.iter().filter(|&&b| b).count();
    if ones == fitness.optimum_level {
        return Some(0);
    }
    for step in 1..=cap {
        let child_ones = mutate_into(&parent, &mut child, q, rng);
        if fitness.accepts(ones, child_ones) {
            std::mem::swap(&mut parent, &mut child);
            ones = child_ones;
            if ones == fitness.optimum_level {
                return Some(step);
            }
        }
    }
    None
}

fn validate(q: f64, cap: u64) -> Result<()> {
    check_open_unit("q", q)?;
    if cap < 1 {
        return Err(LabError::param("cap", "need cap >= 1"));
    }
    Ok(())
}

/// Steps from a uniformly random string until the optimum level is the
/// current individual, or `None` if `cap` steps pass first. Uses stream 0 of
/// `seed`, which is also run 0 of [`estimate_runtime`].
pub fn run_trajectory(fitness: &UnitationFitness, q: f64, seed: u64, cap: u64) -> Result<Option<u64>> {
    validate(q, cap)?;
    Ok(simulate(fitness, q, cap, &mut stream(seed, 0)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStats {
    pub fitness: String,
    pub q: f64,
    pub runs: u64,
    pub hits: u64,
    pub censored: u64,
    /// Mean over runs that hit the optimum.
    pub mean_steps: Option<f64>,
    /// `None` when fewer than two runs hit.
    pub standard_error: Option<f64>,
    pub cap: u64,
    pub seed: u64,
}

pub fn estimate_runtime(
    fitness: &UnitationFitness,
    q: f64,
    runs: u64,
    cap: u64,
    seed: u64,
) -> Result<TrajectoryStats> {
    validate(q, cap)?;
    if runs < 1 {
        return Err(LabError::param("runs", "need runs >= 1"));
    }
    let outcomes: Vec<Option<u64>> = (0..runs)
        .into_par_iter()
        .map(|r| simulate(fitness, q, cap, &mut stream(seed, r)))
        .collect();
    let hit_steps: Vec<f64> = outcomes.iter().flatten().map(|&s| s as f64).collect();
    let hits = hit_steps.len() as u64;
    if hits == 0 {
        return Err(LabError::EstimateUnavailable { runs, cap });
    }
    let mean = hit_steps.iter().sum::<f64>() / hits as f64;
    let standard_error = (hits >= 2).then(|| {
        let var = hit_steps.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (hits - 1) as f64;
        (var / hits as f64).sqrt()
    });
    Ok(TrajectoryStats {
        fitness: fitness.describe(),
        q,
        runs,
        hits,
        censored: runs - hits,
        mean_steps: Some(mean),
        standard_error,
        cap,
        seed,
    })
}

/// Histogram of offspring levels after one mutation of a fixed parent with
/// `level` ones (the first `level` bits set).
pub fn sample_offspring_levels(n: usize, level: usize, q: f64, samples: u64, seed: u64) -> Result<Vec<u64>> {
    check_open_unit("q", q)?;
    if level > n {
        return Err(LabError::param("level", format!("{level} outside 0..={n}")));
    }
    let parent: Vec<bool> = (0..n).map(|b| b < level).collect();
    let mut child = vec![false; n];
    let mut rng = stream(seed, 0);
    let mut counts = vec![0u64; n + 1];
    for _ in 0..samples {
        counts[mutate_into(&parent, &mut child, q, &mut rng)] += 1;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitness::{build_needle, build_onemax};

    #[test]
    fn rejects_boundary_rates() {
        let f = build_onemax(1).unwrap();
        assert!(run_trajectory(&f, 1.0, 1, 10).is_err());
        assert!(run_trajectory(&f, 0.0, 1, 10).is_err());
        assert!(run_trajectory(&f, 0.5, 1, 0).is_err());
        assert!(estimate_runtime(&f, 0.5, 0, 10, 1).is_err());
    }

    #[test]
    fn single_bit_needle_starts_optimal_half_the_time() {
        let f = build_needle(1).unwrap();
        let stats: Vec<_> = (0..2000).map(|s| run_trajectory(&f, 0.5, s, 1000).unwrap().unwrap()).collect();
        let zeros = stats.iter().filter(|&&s| s == 0).count() as f64 / 2000.0;
        assert!((zeros - 0.5).abs() < 0.05, "{zeros}");
    }

    #[test]
    fn deterministic_given_seed() {
        let f = build_onemax(12).unwrap();
        let a = estimate_runtime(&f, 0.1, 200, DEFAULT_CAP, 42).unwrap();
        let b = estimate_runtime(&f, 0.1, 200, DEFAULT_CAP, 42).unwrap();
        assert_eq!(a, b);
        let c = estimate_runtime(&f, 0.1, 200, DEFAULT_CAP, 43).unwrap();
        assert_ne!(a.mean_steps, c.mean_steps);
    }

    #[test]
    fn run_zero_matches_single_trajectory() {
        let f = build_onemax(8).unwrap();
        let single = run_trajectory(&f, 0.125, 9, DEFAULT_CAP).unwrap().unwrap();
        let batch = estimate_runtime(&f, 0.125, 1, DEFAULT_CAP, 9).unwrap();
        assert_eq!(batch.mean_steps, Some(single as f64));
        assert_eq!(batch.standard_error, None);
    }

    #[test]
    fn censoring_is_reported() {
        let f = build_needle(4).unwrap();
        let stats = estimate_runtime(&f, 0.5, 50, 3, 5).unwrap();
        assert_eq!(stats.hits + stats.censored, 50);
        assert!(stats.censored > 0);
        let err = estimate_runtime(&build_needle(40).unwrap(), 0.5, 5, 3, 5).unwrap_err();
        assert_eq!(err, LabError::EstimateUnavailable { runs: 5, cap: 3 });
    }

    #[test]
    fn offspring_histogram_totals() {
        let counts = sample_offspring_levels(6, 2, 0.3, 1000, 1).unwrap();
        assert_eq!(counts.iter().sum::<u64>(), 1000);
        assert!(sample_offspring_levels(6, 7, 0.3, 10, 1).is_err());
    }
}
