//! Runtime curves, optimal-rate search, convergence studies and numeric
//! checks of the analytic inequalities behind the runtime bounds.

use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{AcceptanceMode, EaChain, StartDistribution};
use crate::error::{check_open_unit, LabError, Result};
use crate::fitness::{alpha, build_dss, robust_ceil, robust_floor, SteppingStoneProfile, UnitationFitness};
use crate::report::ExtReal;
use crate::scalar::{Backend, Rate, Scalar};

/// Lower clamp of the rate search domain; the upper clamp is `1 - Q_CLAMP`.
pub const Q_CLAMP: f64 = 1e-3;

/// One expected runtime, with the exact value when computed on rationals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeValue {
    pub value: ExtReal,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exact: Option<String>,
}

impl RuntimeValue {
    pub fn as_f64(&self) -> f64 {
        self.value.0
    }
}

fn solve<S: Scalar>(fitness: &UnitationFitness, q: S) -> Result<S> {
    EaChain::new(fitness, q, AcceptanceMode::ElitistGe)?
        .expected_hitting_time(&StartDistribution::uniform(fitness.n))
}

/// Exact rational `E[T(q)]` from a uniformly random start.
pub fn runtime_exact(fitness: &UnitationFitness, q: &Rate) -> Result<BigRational> {
    solve(fitness, q.to_rational())
}

/// `E[T(q)]` in double precision; `+inf` when out of range.
pub fn runtime_float(fitness: &UnitationFitness, q: f64) -> Result<f64> {
    check_open_unit("q", q)?;
    let t = solve(fitness, q)?;
    Ok(if t.is_nan() { f64::INFINITY } else { t })
}

pub fn runtime_at(fitness: &UnitationFitness, q: &Rate, backend: Backend) -> Result<RuntimeValue> {
    match backend {
        Backend::Rational => {
            let t = runtime_exact(fitness, q)?;
            Ok(RuntimeValue { value: ExtReal(Scalar::to_f64(&t)), exact: Some(t.to_string()) })
        }
        Backend::Float => {
            Ok(RuntimeValue { value: ExtReal(runtime_float(fitness, q.value())?), exact: None })
        }
    }
}

/// `E[T(q)]` sampled over a grid of rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeCurve {
    pub fitness: String,
    pub backend: Backend,
    pub q_grid: Vec<f64>,
    pub values: Vec<RuntimeValue>,
}

impl RuntimeCurve {
    /// Index of the smallest value; ties go to the smaller rate.
    pub fn argmin(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, v) in self.values.iter().enumerate() {
            let x = v.as_f64();
            if !x.is_finite() {
                continue;
            }
            if best.is_none_or(|b| x < self.values[b].as_f64()) {
                best = Some(i);
            }
        }
        best
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(LabError::param("q_grid", "empty grid"));
    }
    for &q in grid {
        check_open_unit("q_grid", q)?;
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LabError::param("q_grid", "grid is not strictly increasing"));
    }
    Ok(())
}

/// Evaluates each grid point independently; output order follows the grid.
pub fn runtime_curve(fitness: &UnitationFitness, grid: &[Rate], backend: Backend) -> Result<RuntimeCurve> {
    let q_grid: Vec<f64> = grid.iter().map(Rate::value).collect();
    check_grid(&q_grid)?;
    let values = grid
        .par_iter()
        .map(|q| runtime_at(fitness, q, backend))
        .collect::<Result<Vec<_>>>()?;
    Ok(RuntimeCurve { fitness: fitness.describe(), backend, q_grid, values })
}

/// `count` equally spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    pub q_min: f64,
    pub q_max: f64,
    pub coarse_points: usize,
    pub tol: f64,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams { q_min: Q_CLAMP, q_max: 1.0 - Q_CLAMP, coarse_points: 256, tol: 1e-6 }
    }
}

impl SearchParams {
    fn validated(&self) -> Result<SearchParams> {
        if !(self.q_min > 0.0 && self.q_min < self.q_max && self.q_max < 1.0) {
            return Err(LabError::param(
                "q_range",
                format!("need 0 < q_min < q_max < 1, got [{}, {}]", self.q_min, self.q_max),
            ));
        }
        if self.coarse_points < 16 {
            return Err(LabError::param("coarse_points", "need at least 16 coarse points"));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(LabError::param("tol", "tolerance must be positive"));
        }
        let q_min = self.q_min.max(Q_CLAMP);
        let q_max = self.q_max.min(1.0 - Q_CLAMP);
        if q_min >= q_max {
            return Err(LabError::param("q_range", "range is empty after clamping"));
        }
        Ok(SearchParams { q_min, q_max, ..*self })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptRateResult {
    pub fitness: String,
    pub q_star: f64,
    pub t_star: ExtReal,
    pub bracket: (f64, f64),
    pub refinement_iterations: usize,
    pub boundary_flag: bool,
    /// The coarse scan, kept so a second basin would be visible.
    pub curve: RuntimeCurve,
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Coarse scan followed by golden-section refinement around the best point.
/// Runs on the float backend.
pub fn optimal_rate(fitness: &UnitationFitness, params: &SearchParams) -> Result<OptRateResult> {
    let params = params.validated()?;
    let grid = linspace(params.q_min, params.q_max, params.coarse_points);
    let rates = grid.iter().map(|&q| Rate::from_f64(q)).collect::<Result<Vec<_>>>()?;
    let curve = runtime_curve(fitness, &rates, Backend::Float)?;
    let best = curve.argmin().ok_or(LabError::NoMinimum)?;
    let last = grid.len() - 1;
    let boundary_flag = best == 0 || best == last;
    let bracket = (grid[best.saturating_sub(1)], grid[(best + 1).min(last)]);

    let eval = |q: f64| runtime_float(fitness, q).map(|t| if t.is_nan() { f64::INFINITY } else { t });
    let mut q_star = grid[best];
    let mut t_star = curve.values[best].as_f64();
    let mut consider = |q: f64, t: f64| {
        if t < t_star || (t == t_star && q < q_star) {
            q_star = q;
            t_star = t;
        }
    };

    let (mut a, mut b) = bracket;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    consider(c, fc);
    consider(d, fd);
    let mut iterations = 0;
    while b - a > params.tol && iterations < 200 {
        iterations += 1;
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c)?;
            consider(c, fc);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d)?;
            consider(d, fd);
        }
    }

    Ok(OptRateResult {
        fitness: fitness.describe(),
        q_star,
        t_star: ExtReal(t_star),
        bracket,
        refinement_iterations: iterations,
        boundary_flag,
        curve,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub q_star: Option<f64>,
    pub t_star: Option<ExtReal>,
    /// `t_star / alpha(p)^n`.
    pub normalized: Option<ExtReal>,
    pub boundary_flag: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub p: f64,
    pub alpha: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Full search results per row, in row order; `None` for failed rows.
    pub searches: Vec<Option<OptRateResult>>,
}

/// Optimal rate of the stepping stones function for each `n`.
/// Rows run in parallel; a failing row is recorded and the study continues.
pub fn convergence_study(p: f64, n_list: &[usize], params: &SearchParams) -> Result<ConvergenceReport> {
    let a = alpha(p)?;
    if n_list.is_empty() {
        return Err(LabError::param("n_list", "empty list"));
    }
    if n_list.iter().any(|&n| n < 4) {
        return Err(LabError::param("n_list", "every n must be at least 4"));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LabError::param("n_list", "not strictly increasing"));
    }
    params.validated()?;
    let outcomes: Vec<(usize, Result<OptRateResult>)> = n_list
        .par_iter()
        .map(|&n| (n, build_dss(p, n).and_then(|(f, _)| optimal_rate(&f, params))))
        .collect();
    let mut rows = Vec::with_capacity(outcomes.len());
    let mut searches = Vec::with_capacity(outcomes.len());
    for (n, outcome) in outcomes {
        match outcome {
            Ok(res) => {
                let t = res.t_star.0;
                rows.push(ConvergenceRow {
                    n,
                    q_star: Some(res.q_star),
                    t_star: Some(res.t_star),
                    normalized: Some(ExtReal(t / a.powi(n as i32))),
                    boundary_flag: Some(res.boundary_flag),
                    error: None,
                });
                searches.push(Some(res));
            }
            Err(e) => {
                rows.push(ConvergenceRow {
                    n,
                    q_star: None,
                    t_star: None,
                    normalized: None,
                    boundary_flag: None,
                    error: Some(e.to_string()),
                });
                searches.push(None);
            }
        }
    }
    Ok(ConvergenceReport { p, alpha: a, rows, searches })
}

/// `sum_{j=1}^n C(n, j) / (1 - (1 - 2q)^j)`, the Needle runtime.
pub fn needle_closed_form<S: Scalar>(n: usize, q: &S) -> Result<S> {
    if n < 1 {
        return Err(LabError::param("n", "need n >= 1"));
    }
    if !(*q > S::zero() && *q < S::one()) {
        return Err(LabError::param("q", format!("{q:?} is not in the open interval (0, 1)")));
    }
    let ratio = S::one() - (q.clone() + q.clone());
    let mut power = S::one();
    let mut choose = S::one();
    let mut total = S::zero();
    for j in 1..=n {
        power = power * ratio.clone();
        choose = choose * S::from_ratio(&BigRational::new((n - j + 1).into(), j.into()));
        let term = choose.clone() / (S::one() - power.clone());
        total += &term;
    }
    Ok(total)
}

/// One-step probability of moving from stone `k` to stone `k - 1`.
pub fn stone_step_probability<S: Scalar>(profile: &SteppingStoneProfile, k: usize, q: &S) -> Result<S> {
    if k < 1 || k > profile.last_stone {
        return Err(LabError::param(
            "k",
            format!("stone index {k} outside 1..={}", profile.last_stone),
        ));
    }
    let row = crate::chain::transition_pmf(profile.n, profile.levels[k], q)?;
    Ok(row[profile.levels[k - 1]].clone())
}

/// Largest one-step probability of jumping from a stone to the optimum.
pub fn max_stone_escape_probability<S: Scalar>(profile: &SteppingStoneProfile, q: &S) -> S {
    let n = profile.n;
    let mut best = S::zero();
    for &level in &profile.levels[1..] {
        let v = S::rate_power(q, n - level, level);
        if v > best {
            best = v;
        }
    }
    best
}

/// Which analytic bound on the stone escape probability applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EscapeBoundKind {
    /// `q^ceil(pn) (1-q)^floor((1-p)n)`.
    NearestStone,
    /// `q^ceil((1-beta)n) (1-q)^floor(beta n)` with `beta = (1-p)^2 + p^2`.
    SecondStone,
    /// `gamma^n` with `gamma = sqrt(q(1-q))`, as `q^ceil(n/2) (1-q)^floor(n/2)`.
    MiddleStone,
}

/// The bound for a `(p, q, n)` combination, as exponents `(a, b)` of
/// `q^a (1-q)^b`.
pub fn escape_bound_exponents(p: f64, q: f64, n: usize) -> Result<(EscapeBoundKind, usize, usize)> {
    check_open_unit("p", p)?;
    check_open_unit("q", q)?;
    let nf = n as f64;
    let nearest = || {
        (
            EscapeBoundKind::NearestStone,
            robust_ceil(p * nf) as usize,
            robust_floor((1.0 - p) * nf) as usize,
        )
    };
    let middle = (EscapeBoundKind::MiddleStone, n - n / 2, n / 2);
    Ok(if p > 0.5 {
        if q >= 0.5 {
            nearest()
        } else {
            let beta = (1.0 - p).powi(2) + p * p;
            (
                EscapeBoundKind::SecondStone,
                robust_ceil((1.0 - beta) * nf) as usize,
                robust_floor(beta * nf) as usize,
            )
        }
    } else if p < 0.5 {
        if q <= 0.5 {
            nearest()
        } else {
            middle
        }
    } else {
        middle
    })
}

/// Outcome of one numeric inequality check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub lemma_id: String,
    pub pass: bool,
    pub worst_margin: f64,
    pub worst_point: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub violation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub grid_density: usize,
    pub checks: Vec<LemmaCheck>,
}

impl LemmaReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Points treated as equality points of an inequality.
const EQUALITY_RADIUS: f64 = 1e-12;
/// Allowed rounding deficit at an equality point.
const ROUNDING_SLACK: f64 = 1e-15;

struct MarginTracker {
    id: &'static str,
    worst: f64,
    worst_point: Vec<f64>,
    violation: Option<String>,
}

impl MarginTracker {
    fn new(id: &'static str) -> Self {
        MarginTracker { id, worst: f64::INFINITY, worst_point: vec![], violation: None }
    }

    /// Records `margin = rhs - lhs`; strict positivity is required unless the
    /// point is an equality point.
    fn record(&mut self, point: &[f64], margin: f64, equality_point: bool) {
        let ok = if equality_point { margin >= -ROUNDING_SLACK } else { margin > 0.0 };
        if !ok && self.violation.is_none() {
            self.violation = Some(format!("margin {margin:e} at {point:?}"));
        }
        if !equality_point && margin < self.worst {
            self.worst = margin;
            self.worst_point = point.to_vec();
        }
    }

    fn finish(self) -> LemmaCheck {
        LemmaCheck {
            lemma_id: self.id.to_string(),
            pass: self.violation.is_none(),
            worst_margin: self.worst,
            worst_point: self.worst_point,
            violation: self.violation,
        }
    }
}

/// `x^x (1-x)^(1-x)`.
fn entropy_base(x: f64) -> f64 {
    (x * x.ln() + (1.0 - x) * (1.0 - x).ln()).exp()
}

/// Checks the three inequalities on a uniform grid `i / grid_density`,
/// `i = 1..grid_density`:
///
/// * `sqrt(x(1-x)) <= x^x (1-x)^(1-x)`, equality only at 1/2;
/// * `(1-x)^(1-a) x^a` is maximised at `x = a` (and its mirror at `1 - a`);
/// * `q^(1-b) (1-q)^b < (1-p)^(1-p) p^p` with `b = (1-p)^2 + p^2`.
pub fn verify_analytic_lemmas(grid_density: usize) -> Result<LemmaReport> {
    if grid_density < 100 {
        return Err(LabError::param("grid_density", "need at least 100 grid points"));
    }
    let grid: Vec<f64> = (1..grid_density).map(|i| i as f64 / grid_density as f64).collect();
    let step = 1.0 / grid_density as f64;

    let mut sqrt_check = MarginTracker::new("sqrt_vs_entropy");
    for &x in &grid {
        let margin = entropy_base(x) - (x * (1.0 - x)).sqrt();
        sqrt_check.record(&[x], margin, (x - 0.5).abs() < EQUALITY_RADIUS);
    }

    let mut argmax_check = MarginTracker::new("argmax_g1_g2");
    for &a in &grid {
        let g1 = |x: f64| (1.0 - a) * (1.0 - x).ln() + a * x.ln();
        let g2 = |x: f64| (1.0 - a) * x.ln() + a * (1.0 - x).ln();
        for (g, target) in [(&g1 as &dyn Fn(f64) -> f64, a), (&g2, 1.0 - a)] {
            let arg = grid
                .iter()
                .copied()
                .fold((f64::NAN, f64::NEG_INFINITY), |acc, x| {
                    let v = g(x);
                    if v > acc.1 { (x, v) } else { acc }
                })
                .0;
            argmax_check.record(&[a, arg], step - (arg - target).abs(), false);
        }
    }

    let mut beta_check = MarginTracker::new("beta_vs_entropy");
    for &p in &grid {
        let beta = (1.0 - p).powi(2) + p * p;
        let rhs = entropy_base(p).ln();
        for &q in &grid {
            let lhs = (1.0 - beta) * q.ln() + beta * (1.0 - q).ln();
            let equality = (p - 0.5).abs() < EQUALITY_RADIUS && (q - 0.5).abs() < EQUALITY_RADIUS;
            beta_check.record(&[p, q], rhs - lhs, equality);
        }
    }

    Ok(LemmaReport {
        grid_density,
        checks: vec![sqrt_check.finish(), argmax_check.finish(), beta_check.finish()],
    })
}

/// Expected steps until any stone is hit when every offspring is accepted
/// and no state absorbs, starting uniformly at random.
pub fn time_to_any_stone<S: Scalar>(
    fitness: &UnitationFitness,
    profile: &SteppingStoneProfile,
    q: S,
) -> Result<S> {
    let chain = EaChain::with_absorption(fitness, q, AcceptanceMode::AlwaysAccept, false)?;
    chain.expected_time_to(&profile.levels[1..], &StartDistribution::uniform(fitness.n))
}
