//! The unitation chain of the (1+1) EA and exact expected hitting times.
//!
//! Mutation flips each bit independently, so the offspring's number of ones
//! depends on the parent only through its number of ones. The EA therefore
//! reduces to a Markov chain on levels `0..=n`.

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fitness::UnitationFitness;
use crate::scalar::{Backend, Rate, Scalar};

fn check_rate<S: Scalar>(q: &S) -> Result<()> {
    if *q > S::zero() && *q < S::one() {
        Ok(())
    } else {
        Err(LabError::param("q", format!("{q:?} is not in the open interval (0, 1)")))
    }
}

/// Offspring-unitation distribution for a parent with `i` ones.
pub fn transition_pmf<S: Scalar>(n: usize, i: usize, q: &S) -> Result<Vec<S>> {
    check_rate(q)?;
    if i > n {
        return Err(LabError::param("i", format!("level {i} outside 0..={n}")));
    }
    Ok(S::kernel_row(n, i, q))
}

/// `(n+1) x (n+1)` row-stochastic matrix of offspring levels.
#[derive(Debug, Clone)]
pub struct MutationKernel<S> {
    pub n: usize,
    pub q: S,
    pub rows: Vec<Vec<S>>,
}

impl<S: Scalar> MutationKernel<S> {
    pub fn new(n: usize, q: S) -> Result<Self> {
        check_rate(&q)?;
        if n < 1 {
            return Err(LabError::param("n", "need n >= 1"));
        }
        let rows = (0..=n).map(|i| S::kernel_row(n, i, &q)).collect();
        Ok(MutationKernel { n, q, rows })
    }

    pub fn backend(&self) -> Backend {
        S::BACKEND
    }

    /// Probability that one mutation of a level-`i` parent is all ones,
    /// `q^(n-i) (1-q)^i`.
    pub fn one_step_optimum_prob(&self, i: usize) -> Result<S> {
        if i > self.n {
            return Err(LabError::param("i", format!("level {i} outside 0..={}", self.n)));
        }
        Ok(S::rate_power(&self.q, self.n - i, i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AcceptanceMode {
    /// Keep the offspring iff its fitness is at least the parent's.
    ElitistGe,
    /// Every offspring replaces the parent.
    AlwaysAccept,
}

/// Distribution of the initial level.
#[derive(Debug, Clone, PartialEq)]
pub struct StartDistribution {
    weights: Vec<BigRational>,
}

impl StartDistribution {
    /// Uniform over bitstrings, i.e. binomial(n, 1/2) over levels.
    pub fn uniform(n: usize) -> Self {
        let total = BigRational::from_integer(num_bigint::BigInt::one() << n);
        let mut c = num_bigint::BigInt::one();
        let mut weights = Vec::with_capacity(n + 1);
        for k in 0..=n {
            weights.push(BigRational::from_integer(c.clone()) / &total);
            c = c * (n - k) / (k + 1);
        }
        StartDistribution { weights }
    }

    pub fn point(n: usize, level: usize) -> Result<Self> {
        if level > n {
            return Err(LabError::param("level", format!("{level} outside 0..={n}")));
        }
        let mut weights = vec![BigRational::zero(); n + 1];
        weights[level] = BigRational::one();
        Ok(StartDistribution { weights })
    }

    pub fn from_weights(weights: Vec<BigRational>) -> Result<Self> {
        if weights.iter().any(|w| *w < BigRational::zero()) {
            return Err(LabError::param("start", "negative weight"));
        }
        let total: BigRational = weights.iter().cloned().sum();
        if !total.is_one() {
            return Err(LabError::param("start", format!("weights sum to {total}, not 1")));
        }
        Ok(StartDistribution { weights })
    }

    pub fn weights(&self) -> &[BigRational] {
        &self.weights
    }
}

/// Acceptance-filtered (1+1) EA chain over unitation levels.
#[derive(Debug, Clone)]
pub struct EaChain<S> {
    pub kernel: MutationKernel<S>,
    pub mode: AcceptanceMode,
    pub optimum: usize,
    pub absorbing: bool,
    /// `accepted[i][j]` for `j != i` is the probability of moving from `i` to
    /// `j` in one step. Diagonal entries are zero; the self-loop is implied.
    accepted: Vec<Vec<S>>,
}

impl<S: Scalar> EaChain<S> {
    /// Chain with the optimum made absorbing.
    pub fn new(fitness: &UnitationFitness, q: S, mode: AcceptanceMode) -> Result<Self> {
        Self::with_absorption(fitness, q, mode, true)
    }

    /// `absorbing = false` keeps the optimum's kernel row, so in
    /// always-accept mode the chain is the plain mutation walk.
    pub fn with_absorption(
        fitness: &UnitationFitness,
        q: S,
        mode: AcceptanceMode,
        absorbing: bool,
    ) -> Result<Self> {
        let kernel = MutationKernel::new(fitness.n, q)?;
        let n = fitness.n;
        let optimum = fitness.optimum_level;
        let accepted = (0..=n)
            .map(|i| {
                (0..=n)
                    .map(|j| {
                        let keep = j != i
                            && !(absorbing && i == optimum)
                            && (mode == AcceptanceMode::AlwaysAccept || fitness.accepts(i, j));
                        if keep {
                            kernel.rows[i][j].clone()
                        } else {
                            S::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(EaChain { kernel, mode, optimum, absorbing, accepted })
    }

    pub fn n(&self) -> usize {
        self.kernel.n
    }

    /// Full transition matrix with rejected mass folded into the diagonal.
    pub fn transition_matrix(&self) -> Vec<Vec<S>> {
        self.accepted
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut out = row.clone();
                let mut moved = S::zero();
                for v in row {
                    moved += v;
                }
                out[i] = S::one() - moved;
                out
            })
            .collect()
    }

    pub fn one_step_optimum_prob(&self, i: usize) -> Result<S> {
        self.kernel.one_step_optimum_prob(i)
    }

    /// Expected steps to first reach any level in `targets`, for every start
    /// level. Target levels are treated as absorbing and get 0.
    ///
    /// Uses elimination on `(I - Q) t = 1` where each pivot is rebuilt as the
    /// sum of the remaining outflow, so no subtraction ever occurs. On the
    /// float backend a vanishing pivot yields `+inf`.
    pub fn hitting_times_to(&self, targets: &[usize]) -> Result<Vec<S>> {
        let n = self.n();
        let mut is_target = vec![false; n + 1];
        for &t in targets {
            if t > n {
                return Err(LabError::param("targets", format!("level {t} outside 0..={n}")));
            }
            is_target[t] = true;
        }
        let transient: Vec<usize> = (0..=n).filter(|&i| !is_target[i]).collect();
        let m = transient.len();

        let mut off: Vec<Vec<S>> = transient
            .iter()
            .map(|&i| transient.iter().map(|&j| self.accepted[i][j].clone()).collect())
            .collect();
        let mut exit: Vec<S> = transient
            .iter()
            .map(|&i| {
                let mut e = S::zero();
                for j in (0..=n).filter(|&j| is_target[j]) {
                    e += &self.accepted[i][j];
                }
                e
            })
            .collect();
        let mut rhs: Vec<S> = vec![S::one(); m];
        let mut pivots: Vec<S> = Vec::with_capacity(m);

        for k in 0..m {
            let mut d = exit[k].clone();
            for v in &off[k][k + 1..] {
                d += v;
            }
            if d.is_zero() {
                return match S::infinity() {
                    Some(inf) => {
                        let mut out = vec![S::zero(); n + 1];
                        for &i in &transient {
                            out[i] = inf.clone();
                        }
                        Ok(out)
                    }
                    None => Err(LabError::SingularSystem { level: transient[k] }),
                };
            }
            let (head, tail) = off.split_at_mut(k + 1);
            let pivot_row = &head[k];
            for (r, row) in tail.iter_mut().enumerate() {
                let i = k + 1 + r;
                if row[k].is_zero() {
                    continue;
                }
                let c = row[k].clone() / d.clone();
                for j in (k + 1)..m {
                    if j != i && !pivot_row[j].is_zero() {
                        let add = c.clone() * pivot_row[j].clone();
                        row[j] += &add;
                    }
                }
                row[k] = S::zero();
                let add = c.clone() * exit[k].clone();
                exit[i] += &add;
                let add = c * rhs[k].clone();
                rhs[i] += &add;
            }
            pivots.push(d);
        }

        let mut t = vec![S::zero(); m];
        for k in (0..m).rev() {
            let mut acc = rhs[k].clone();
            for j in (k + 1)..m {
                if !off[k][j].is_zero() {
                    let add = off[k][j].clone() * t[j].clone();
                    acc += &add;
                }
            }
            t[k] = acc / pivots[k].clone();
        }

        let mut out = vec![S::zero(); n + 1];
        for (idx, &i) in transient.iter().enumerate() {
            out[i] = t[idx].clone();
        }
        Ok(out)
    }

    /// Expected number of offspring generated until the optimum is first the
    /// current individual, averaged over `start`.
    pub fn expected_hitting_time(&self, start: &StartDistribution) -> Result<S> {
        self.expected_time_to(&[self.optimum], start)
    }

    pub fn expected_time_to(&self, targets: &[usize], start: &StartDistribution) -> Result<S> {
        if start.weights().len() != self.n() + 1 {
            return Err(LabError::param("start", "length does not match n + 1"));
        }
        let times = self.hitting_times_to(targets)?;
        let mut total = S::zero();
        for (w, t) in start.weights().iter().zip(times) {
            if w.is_zero() {
                continue;
            }
            if !t.is_finite() {
                // a positive start weight on a level that never escapes
                if let Some(inf) = S::infinity() {
                    return Ok(inf);
                }
            }
            let term = S::from_ratio(w) * t;
            total += &term;
        }
        Ok(total)
    }

    /// Row-major transition matrix as text, for debugging.
    pub fn dump_json(&self) -> serde_json::Value {
        let rows: Vec<Vec<String>> = self
            .transition_matrix()
            .iter()
            .map(|row| row.iter().map(Scalar::to_text).collect())
            .collect();
        serde_json::json!({
            "n": self.n(),
            "backend": S::BACKEND,
            "mode": self.mode,
            "optimum": self.optimum,
            "absorbing": self.absorbing,
            "rows": rows,
        })
    }
}

/// Builds the chain for a rate given on the command line or in tests.
pub fn build_ea_chain<S: Scalar>(
    fitness: &UnitationFitness,
    q: &Rate,
    mode: AcceptanceMode,
) -> Result<EaChain<S>> {
    EaChain::new(fitness, S::from_rate(q), mode)
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::fitness::{build_dss, build_needle, build_onemax};

    fn r(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn pmf_examples() {
        let row = transition_pmf(1, 0, &r(2, 5)).unwrap();
        assert_eq!(row, vec![r(3, 5), r(2, 5)]);
        assert_eq!(transition_pmf(2, 1, &r(1, 2)).unwrap(), vec![r(1, 4), r(1, 2), r(1, 4)]);
        assert_eq!(
            transition_pmf(2, 1, &r(3, 10)).unwrap(),
            vec![r(21, 100), r(58, 100), r(21, 100)]
        );
        let f = transition_pmf(2, 1, &0.3).unwrap();
        assert!((f[1] - 0.58).abs() < 1e-15);
        assert!(transition_pmf(2, 3, &r(1, 2)).is_err());
        assert!(transition_pmf(2, 1, &r(1, 1)).is_err());
        assert!(transition_pmf(2, 1, &0.0).is_err());
    }

    #[test]
    fn kernel_rows_stochastic_and_symmetric() {
        for n in 1..=14 {
            for num in 1..=9 {
                let k = MutationKernel::new(n, r(num, 10)).unwrap();
                for i in 0..=n {
                    let s: BigRational = k.rows[i].iter().cloned().sum();
                    assert!(s.is_one(), "n={n} q={num}/10 i={i}");
                    for j in 0..=n {
                        assert!(k.rows[i][j] > BigRational::zero());
                        assert_eq!(k.rows[i][j], k.rows[n - i][n - j]);
                    }
                }
            }
        }
    }

    #[test]
    fn float_kernel_rows_sum_to_one() {
        for n in [1, 10, 50, 200] {
            let k = MutationKernel::new(n, 0.37).unwrap();
            for row in &k.rows {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn half_rate_rows_are_binomial() {
        let n = 9;
        let k = MutationKernel::new(n, r(1, 2)).unwrap();
        let uniform = StartDistribution::uniform(n);
        for row in &k.rows {
            assert_eq!(row.as_slice(), uniform.weights());
        }
    }

    #[test]
    fn onemax_single_bit_chain() {
        let f = build_onemax(1).unwrap();
        let chain = EaChain::new(&f, r(2, 5), AcceptanceMode::ElitistGe).unwrap();
        let m = chain.transition_matrix();
        assert_eq!(m[0], vec![r(3, 5), r(2, 5)]);
        assert_eq!(m[1], vec![r(0, 1), r(1, 1)]);
    }

    #[test]
    fn needle_plateau_accepts_everything() {
        let f = build_needle(2).unwrap();
        let chain = EaChain::new(&f, r(1, 2), AcceptanceMode::ElitistGe).unwrap();
        let m = chain.transition_matrix();
        for i in 0..2 {
            assert_eq!(m[i], chain.kernel.rows[i]);
        }
        assert_eq!(m[2], vec![r(0, 1), r(0, 1), r(1, 1)]);
    }

    #[test]
    fn always_accept_half_rate_is_iid() {
        let (f, _) = build_dss(0.5, 4).unwrap();
        let chain = EaChain::new(&f, r(1, 2), AcceptanceMode::AlwaysAccept).unwrap();
        let m = chain.transition_matrix();
        let binom = StartDistribution::uniform(4);
        for row in &m[..4] {
            assert_eq!(row.as_slice(), binom.weights());
        }
        assert_eq!(m[4], vec![r(0, 1), r(0, 1), r(0, 1), r(0, 1), r(1, 1)]);

        let open = EaChain::with_absorption(&f, r(1, 2), AcceptanceMode::AlwaysAccept, false).unwrap();
        assert_eq!(open.transition_matrix()[4].as_slice(), binom.weights());
    }

    #[test]
    fn elitist_rows_fold_rejections_into_diagonal() {
        let (f, _) = build_dss(0.3, 12).unwrap();
        let chain = EaChain::new(&f, r(1, 3), AcceptanceMode::ElitistGe).unwrap();
        let m = chain.transition_matrix();
        for i in 0..=12 {
            let s: BigRational = m[i].iter().cloned().sum();
            assert!(s.is_one());
            if i == chain.optimum {
                continue;
            }
            let mut rejected = BigRational::zero();
            for j in 0..=12 {
                if j == i {
                    continue;
                }
                if f.values[j] >= f.values[i] {
                    assert_eq!(m[i][j], chain.kernel.rows[i][j]);
                } else {
                    assert!(m[i][j].is_zero());
                    rejected += &chain.kernel.rows[i][j];
                }
            }
            assert_eq!(m[i][i], chain.kernel.rows[i][i].clone() + rejected);
        }
    }

    #[test]
    fn hitting_time_examples() {
        let onemax = build_onemax(1).unwrap();
        let chain = EaChain::new(&onemax, r(1, 2), AcceptanceMode::ElitistGe).unwrap();
        assert_eq!(chain.expected_hitting_time(&StartDistribution::uniform(1)).unwrap(), r(1, 1));

        let needle = build_needle(3).unwrap();
        let chain = EaChain::new(&needle, r(1, 2), AcceptanceMode::ElitistGe).unwrap();
        assert_eq!(chain.expected_hitting_time(&StartDistribution::uniform(3)).unwrap(), r(7, 1));

        let (dss, _) = build_dss(0.5, 8).unwrap();
        let chain = EaChain::new(&dss, r(1, 2), AcceptanceMode::ElitistGe).unwrap();
        assert_eq!(chain.expected_hitting_time(&StartDistribution::uniform(8)).unwrap(), r(255, 1));
        let times = chain.hitting_times_to(&[8]).unwrap();
        assert!(times[8].is_zero());
        assert!(times[..8].iter().all(|t| *t == r(256, 1)));
    }

    #[test]
    fn float_and_rational_solves_agree() {
        let (dss, _) = build_dss(0.3, 14).unwrap();
        let start = StartDistribution::uniform(14);
        for (a, b) in [(1, 5), (3, 10), (1, 2), (4, 5)] {
            let exact = EaChain::new(&dss, r(a, b), AcceptanceMode::ElitistGe)
                .unwrap()
                .expected_hitting_time(&start)
                .unwrap();
            let float = EaChain::new(&dss, a as f64 / b as f64, AcceptanceMode::ElitistGe)
                .unwrap()
                .expected_hitting_time(&start)
                .unwrap();
            let e = Scalar::to_f64(&exact);
            assert!(((e - float) / e).abs() < 1e-11, "q={a}/{b}: {e} vs {float}");
        }
    }

    #[test]
    fn one_step_probabilities() {
        let k = MutationKernel::new(4, r(1, 2)).unwrap();
        assert_eq!(k.one_step_optimum_prob(2).unwrap(), r(1, 16));
        let k = MutationKernel::new(4, r(3, 10)).unwrap();
        assert_eq!(k.one_step_optimum_prob(0).unwrap(), r(81, 10000));
        assert_eq!(k.one_step_optimum_prob(0).unwrap(), k.rows[0][4]);
        let k = MutationKernel::new(20, r(3, 10)).unwrap();
        let expected = num_traits::pow(r(3, 10), 6) * num_traits::pow(r(7, 10), 14);
        assert_eq!(k.one_step_optimum_prob(14).unwrap(), expected);
        assert_eq!(k.rows[14][20], expected);
        assert!(k.one_step_optimum_prob(21).is_err());
    }

    #[test]
    fn start_distribution_validation() {
        assert!(StartDistribution::from_weights(vec![r(1, 2), r(1, 3)]).is_err());
        assert!(StartDistribution::from_weights(vec![r(3, 2), r(-1, 2)]).is_err());
        assert!(StartDistribution::from_weights(vec![r(1, 2), r(1, 2)]).is_ok());
        assert!(StartDistribution::point(3, 4).is_err());
        let u: BigRational = StartDistribution::uniform(10).weights().iter().cloned().sum();
        assert!(u.is_one());
    }

    #[test]
    fn hitting_time_zero_from_optimum_and_finite_elsewhere() {
        let (dss, _) = build_dss(0.7, 30).unwrap();
        let chain = EaChain::new(&dss, 0.7, AcceptanceMode::ElitistGe).unwrap();
        let t = chain.hitting_times_to(&[30]).unwrap();
        assert_eq!(t[30], 0.0);
        assert!(t[..30].iter().all(|v| v.is_finite() && *v >= 1.0));
    }

    #[test]
    fn underflowing_float_chain_reports_infinity() {
        let f = build_needle(1200).unwrap();
        let chain = EaChain::new(&f, 0.001, AcceptanceMode::ElitistGe).unwrap();
        let t = chain.expected_hitting_time(&StartDistribution::uniform(1200)).unwrap();
        assert!(t.is_infinite());
    }

    #[test]
    fn dump_uses_ratio_text_in_rational_mode() {
        let f = build_onemax(1).unwrap();
        let chain = EaChain::new(&f, r(2, 5), AcceptanceMode::ElitistGe).unwrap();
        let dump = chain.dump_json();
        assert_eq!(dump["rows"][0][1], "2/5");
        assert_eq!(dump["backend"], "rational");
    }
}
