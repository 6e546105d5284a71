//! Numeric backends for kernels and hitting-time solves.
//!
//! Two implementations of [`Scalar`] exist: exact arbitrary-precision
//! rationals and `f64` with binomial terms evaluated in the log domain.

use std::fmt::{self, Debug, Display};
use std::ops::{Add, AddAssign, Div, Mul, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Which numeric backend a computation ran on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Rational,
    Float,
}

impl FromStr for Backend {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rational" | "exact" => Ok(Backend::Rational),
            "float" | "f64" => Ok(Backend::Float),
            _ => Err(LabError::param("backend", format!("unknown backend `{s}`"))),
        }
    }
}

impl Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Rational => "rational",
            Backend::Float => "float",
        })
    }
}

/// A mutation rate, optionally carrying its exact rational value.
///
/// Rates parsed from fraction syntax (`"3/10"`) are exact. Rates from
/// decimals or `f64` are not, and the rational backend then analyses the
/// exact binary value of the float.
#[derive(Debug, Clone, PartialEq)]
pub struct Rate {
    value: f64,
    exact: Option<BigRational>,
}

impl Rate {
    pub fn ratio(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(LabError::param("q", "zero denominator"));
        }
        Rate::from_rational(BigRational::new(num.into(), den.into()))
    }

    pub fn from_rational(r: BigRational) -> Result<Self> {
        if !(r.is_positive() && r < BigRational::one()) {
            return Err(LabError::param("q", format!("{r} is not in the open interval (0, 1)")));
        }
        let value = ToPrimitive::to_f64(&r).unwrap_or(f64::NAN);
        Ok(Rate { value, exact: Some(r) })
    }

    pub fn from_f64(value: f64) -> Result<Self> {
        crate::error::check_open_unit("q", value)?;
        Ok(Rate { value, exact: None })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn to_rational(&self) -> BigRational {
        match &self.exact {
            Some(r) => r.clone(),
            None => BigRational::from_float(self.value).expect("finite rate"),
        }
    }
}

impl FromStr for Rate {
    type Err = LabError;

    /// Accepts `"a/b"` (exact) or a decimal literal (inexact).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let parse = |t: &str| {
                t.trim()
                    .parse::<BigInt>()
                    .map_err(|_| LabError::param("q", format!("cannot parse fraction `{s}`")))
            };
            let (num, den) = (parse(num)?, parse(den)?);
            if den.is_zero() {
                return Err(LabError::param("q", "zero denominator"));
            }
            Rate::from_rational(BigRational::new(num, den))
        } else {
            let v: f64 = s
                .parse()
                .map_err(|_| LabError::param("q", format!("cannot parse rate `{s}`")))?;
            Rate::from_f64(v)
        }
    }
}

impl Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.exact {
            Some(r) => write!(f, "{r}"),
            None => write!(f, "{}", self.value),
        }
    }
}

/// Arithmetic needed by the kernel builder and the hitting-time solver.
///
pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Send
    + Sync
    + Zero
    + One
    + for<'a> AddAssign<&'a Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    const BACKEND: Backend;

    fn from_rate(rate: &Rate) -> Self;
    fn from_ratio(r: &BigRational) -> Self;
    fn to_f64(&self) -> f64;

    /// Row `i` of the mutation kernel on `n` bits at rate `q`.
    fn kernel_row(n: usize, i: usize, q: &Self) -> Vec<Self>;

    /// `q^a (1 - q)^b`.
    fn rate_power(q: &Self, a: usize, b: usize) -> Self;

    /// Value used when a pivot vanishes: `+inf` where representable.
    fn infinity() -> Option<Self>;

    fn is_finite(&self) -> bool;

    fn to_text(&self) -> String;
}

impl Scalar for BigRational {
    const BACKEND: Backend = Backend::Rational;

    fn from_rate(rate: &Rate) -> Self {
        rate.to_rational()
    }

    fn from_ratio(r: &BigRational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn kernel_row(n: usize, i: usize, q: &Self) -> Vec<Self> {
        let keep = BigRational::one() - q;
        let q_pow = powers(q, n);
        let keep_pow = powers(&keep, n);
        let ones = binomial_row(i);
        let zeros = binomial_row(n - i);
        let mut row = vec![BigRational::zero(); n + 1];
        // a ones flipped to zero, b zeros flipped to one
        for (a, ca) in ones.iter().enumerate() {
            for (b, cb) in zeros.iter().enumerate() {
                let flips = a + b;
                let weight = BigRational::from_integer(ca * cb) * &q_pow[flips] * &keep_pow[n - flips];
                row[i - a + b] += &weight;
            }
        }
        row
    }

    fn rate_power(q: &Self, a: usize, b: usize) -> Self {
        let keep = BigRational::one() - q;
        num_traits::pow(q.clone(), a) * num_traits::pow(keep, b)
    }

    fn infinity() -> Option<Self> {
        None
    }

    fn is_finite(&self) -> bool {
        true
    }

    fn to_text(&self) -> String {
        self.to_string()
    }
}

fn powers(x: &BigRational, n: usize) -> Vec<BigRational> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(BigRational::one());
    for k in 1..=n {
        let next = &out[k - 1] * x;
        out.push(next);
    }
    out
}

/// `C(m, 0..=m)` as big integers.
fn binomial_row(m: usize) -> Vec<BigInt> {
    let mut row = vec![BigInt::one()];
    for k in 1..=m {
        let next = &row[k - 1] * BigInt::from(m - k + 1) / BigInt::from(k);
        row.push(next);
    }
    row
}

impl Scalar for f64 {
    const BACKEND: Backend = Backend::Float;

    fn from_rate(rate: &Rate) -> Self {
        rate.value()
    }

    fn from_ratio(r: &BigRational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn kernel_row(n: usize, i: usize, q: &Self) -> Vec<Self> {
        let ln_fact = ln_factorials(n);
        let ln_choose = |m: usize, k: usize| ln_fact[m] - ln_fact[k] - ln_fact[m - k];
        let ln_q = q.ln();
        let ln_keep = (-q).ln_1p();
        let mut row = vec![0.0; n + 1];
        for a in 0..=i {
            for b in 0..=(n - i) {
                let flips = (a + b) as f64;
                let ln_w = ln_choose(i, a)
                    + ln_choose(n - i, b)
                    + flips * ln_q
                    + (n as f64 - flips) * ln_keep;
                row[i - a + b] += ln_w.exp();
            }
        }
        row
    }

    fn rate_power(q: &Self, a: usize, b: usize) -> Self {
        (a as f64 * q.ln() + b as f64 * (-q).ln_1p()).exp()
    }

    fn infinity() -> Option<Self> {
        Some(f64::INFINITY)
    }

    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }

    fn to_text(&self) -> String {
        format!("{self:e}")
    }
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    for k in 1..=n {
        out.push(out[k - 1] + (k as f64).ln());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_rates() {
        let r: Rate = "3/10".parse().unwrap();
        assert!(r.is_exact());
        assert_eq!(r.to_rational(), BigRational::new(3.into(), 10.into()));
        let d: Rate = "0.25".parse().unwrap();
        assert!(!d.is_exact());
        assert_eq!(d.to_rational(), BigRational::new(1.into(), 4.into()));
        assert!("1".parse::<Rate>().is_err());
        assert!("0".parse::<Rate>().is_err());
        assert!("5/4".parse::<Rate>().is_err());
        assert!("1/0".parse::<Rate>().is_err());
        assert!("abc".parse::<Rate>().is_err());
        assert_eq!("6/20".parse::<Rate>().unwrap().to_string(), "3/10");
    }

    #[test]
    fn rational_and_float_rows_agree() {
        let q = Rate::ratio(3, 10).unwrap();
        for n in [1, 5, 12] {
            for i in 0..=n {
                let exact = BigRational::kernel_row(n, i, &BigRational::from_rate(&q));
                let float = f64::kernel_row(n, i, &f64::from_rate(&q));
                for (e, f) in exact.iter().zip(&float) {
                    let e = Scalar::to_f64(e);
                    assert!((e - f).abs() <= 1e-14 * e.max(1e-300) + 1e-300, "n={n} i={i}");
                }
            }
        }
    }

    #[test]
    fn rate_power_matches() {
        let q = BigRational::new(1.into(), 3.into());
        assert_eq!(
            BigRational::rate_power(&q, 2, 1),
            BigRational::new(2.into(), 27.into())
        );
        assert!((f64::rate_power(&(1.0 / 3.0), 2, 1) - 2.0 / 27.0).abs() < 1e-16);
    }
}
