//! Functions of unitation: fitness tables indexed by the number of ones.
//!
//! Besides the textbook benchmarks (OneMax, Needle, Jump) this module builds
//! the distant stepping stones function. Its plateaus sit at the levels
//! `floor(n * s_k)` where `s_k` is the k-th iterate of
//! `f_p(x) = p(1 - x) + (1 - p)x` started at `s_0 = 1`, and consecutive
//! plateaus are separated by fitness-zero valleys.

use serde::{Deserialize, Serialize};

use crate::error::{check_open_unit, LabError, Result};

/// Slack used when flooring `n * s` so that values such as `20 * 0.7` land on
/// the intended integer despite binary rounding.
const FLOOR_SLACK: f64 = 1e-9;

/// `floor(x)` tolerant to binary rounding just below an integer.
pub fn robust_floor(x: f64) -> i64 {
    (x + FLOOR_SLACK).floor() as i64
}

/// `ceil(x)` tolerant to binary rounding just above an integer.
pub fn robust_ceil(x: f64) -> i64 {
    (x - FLOOR_SLACK).ceil() as i64
}

/// Which family a fitness table was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitnessKind {
    Dss { p: f64 },
    OneMax,
    Needle,
    Jump { m: usize },
    Custom,
}

impl FitnessKind {
    pub fn describe(&self, n: usize) -> String {
        match self {
            FitnessKind::Dss { p } => format!("dss(p={p},n={n})"),
            FitnessKind::OneMax => format!("onemax(n={n})"),
            FitnessKind::Needle => format!("needle(n={n})"),
            FitnessKind::Jump { m } => format!("jump(n={n},m={m})"),
            FitnessKind::Custom => format!("custom(n={n})"),
        }
    }
}

/// A fitness function that depends only on the number of ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitationFitness {
    #[serde(flatten)]
    pub kind: FitnessKind,
    pub n: usize,
    /// `values[i]` is the fitness of every string with `i` ones.
    pub values: Vec<f64>,
    pub optimum_level: usize,
}

impl UnitationFitness {
    /// Wraps a table of `n + 1` values. The table must have a strict unique
    /// maximum, which becomes the optimum level.
    pub fn new(kind: FitnessKind, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(LabError::param("values", "need at least two levels (n >= 1)"));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(LabError::param("values", format!("non-finite fitness value {bad}")));
        }
        let n = values.len() - 1;
        let (optimum_level, best) = values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        if values.iter().filter(|&&v| v == best).count() != 1 {
            return Err(LabError::param("values", "maximum is not unique"));
        }
        Ok(UnitationFitness { kind, n, values, optimum_level })
    }

    pub fn describe(&self) -> String {
        self.kind.describe(self.n)
    }

    /// Applies a map to every value. A strictly increasing map preserves the
    /// fitness order, so the resulting EA chain is unchanged.
    pub fn rescaled(&self, map: impl Fn(f64) -> f64) -> Result<Self> {
        let values = self.values.iter().map(|&v| map(v)).collect();
        UnitationFitness::new(FitnessKind::Custom, values)
    }

    /// True when an offspring at level `to` replaces a parent at level `from`
    /// under `>=` acceptance.
    #[inline]
    pub fn accepts(&self, from: usize, to: usize) -> bool {
        self.values[to] >= self.values[from]
    }
}

/// The distant stepping stones construction record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteppingStoneProfile {
    pub p: f64,
    pub n: usize,
    /// `levels[k]` is the number of ones on stone `k`; `levels[0] = n` is the
    /// optimum and the last entry is `n / 2` (rounded down).
    pub levels: Vec<usize>,
    /// Index of the last stone.
    #[serde(rename = "N")]
    pub last_stone: usize,
}

impl SteppingStoneProfile {
    /// Fitness of stone `k` is `N + 1 - k`.
    pub fn stone_fitness(&self, k: usize) -> f64 {
        (self.last_stone + 1 - k) as f64
    }
}

/// `s_k = (1 - 2p)^k / 2 + 1/2`, the k-th iterate of `f_p` applied to 1.
pub fn closed_form_s(p: f64, k: u32) -> Result<f64> {
    check_open_unit("p", p)?;
    Ok(0.5 * (1.0 - 2.0 * p).powi(k as i32) + 0.5)
}

/// `1 / (p^p (1-p)^(1-p))`, the base of the optimal exponential runtime.
pub fn alpha(p: f64) -> Result<f64> {
    check_open_unit("p", p)?;
    Ok((-(p * p.ln() + (1.0 - p) * (1.0 - p).ln())).exp())
}

fn iteration_cap(n: usize) -> usize {
    let log2_ceil = (usize::BITS - (n - 1).leading_zeros()) as usize;
    64 * (1 + log2_ceil)
}

/// Builds the distant stepping stones fitness for rate `p` on `n` bits.
///
/// Repeated levels keep their first occurrence and any level equal to `n`
/// after the optimum is dropped; the surviving stones are re-indexed densely.
pub fn build_dss(p: f64, n: usize) -> Result<(UnitationFitness, SteppingStoneProfile)> {
    check_open_unit("p", p)?;
    if n < 2 {
        return Err(LabError::param("n", format!("need n >= 2, got {n}")));
    }
    let target = n / 2;
    let cap = iteration_cap(n);
    let mut levels = vec![n];
    let mut reached = false;
    for k in 1..=cap {
        let s = closed_form_s(p, k as u32)?;
        let level = robust_floor(n as f64 * s).clamp(0, n as i64) as usize;
        if level == target {
            levels.push(level);
            reached = true;
            break;
        }
        if level != n && !levels.contains(&level) {
            levels.push(level);
        }
    }
    if !reached {
        return Err(LabError::Construction { p, target, iterations: cap });
    }

    let last_stone = levels.len() - 1;
    let mut values = vec![0.0; n + 1];
    for (k, &level) in levels.iter().enumerate() {
        values[level] = (last_stone + 1 - k) as f64;
    }
    let fitness = UnitationFitness::new(FitnessKind::Dss { p }, values)?;
    Ok((fitness, SteppingStoneProfile { p, n, levels, last_stone }))
}

pub fn build_onemax(n: usize) -> Result<UnitationFitness> {
    if n < 1 {
        return Err(LabError::param("n", "need n >= 1"));
    }
    UnitationFitness::new(FitnessKind::OneMax, (0..=n).map(|i| i as f64).collect())
}

/// Plateau of fitness 1 with the all-ones string at fitness 2.
pub fn build_needle(n: usize) -> Result<UnitationFitness> {
    if n < 1 {
        return Err(LabError::param("n", "need n >= 1"));
    }
    let mut values = vec![1.0; n + 1];
    values[n] = 2.0;
    UnitationFitness::new(FitnessKind::Needle, values)
}

/// `Jump_m(i) = m + i` if `i <= n - m` or `i = n`, otherwise `n - i`.
pub fn build_jump(n: usize, m: usize) -> Result<UnitationFitness> {
    if n < 1 {
        return Err(LabError::param("n", "need n >= 1"));
    }
    if m < 1 || m >= n {
        return Err(LabError::param("m", format!("need 1 <= m < n, got m = {m}, n = {n}")));
    }
    let values = (0..=n)
        .map(|i| if i <= n - m || i == n { (m + i) as f64 } else { (n - i) as f64 })
        .collect();
    UnitationFitness::new(FitnessKind::Jump { m }, values)
}
