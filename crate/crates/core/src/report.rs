//! JSON and CSV rendering of reports.

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::analysis::{ConvergenceReport, LemmaReport, OptRateResult, RuntimeCurve};
use crate::montecarlo::TrajectoryStats;

/// A real that may be `+inf`. Finite values serialize as JSON numbers and
/// infinity as the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ExtReal(pub f64);

impl ExtReal {
    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_finite() {
            write!(f, "{}", self.0)
        } else if self.0 > 0.0 {
            f.write_str("inf")
        } else {
            f.write_str("nan")
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str(&self.to_string())
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct ExtVisitor;
        impl Visitor<'_> for ExtVisitor {
            type Value = ExtReal;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<ExtReal, E> {
                Ok(ExtReal(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<ExtReal, E> {
                Ok(ExtReal(v as f64))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<ExtReal, E> {
                Ok(ExtReal(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<ExtReal, E> {
                match v {
                    "inf" => Ok(ExtReal(f64::INFINITY)),
                    "nan" => Ok(ExtReal(f64::NAN)),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }
        d.deserialize_any(ExtVisitor)
    }
}

/// Output format of the command-line reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Reports that have a flat tabular form.
pub trait Tabular {
    fn header(&self) -> Vec<&'static str>;
    fn records(&self) -> Vec<Vec<String>>;

    fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.header()).expect("in-memory write");
        for rec in self.records() {
            w.write_record(rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

impl Tabular for RuntimeCurve {
    fn header(&self) -> Vec<&'static str> {
        vec!["q", "E_T", "exact"]
    }

    fn records(&self) -> Vec<Vec<String>> {
        self.q_grid
            .iter()
            .zip(&self.values)
            .map(|(q, v)| vec![q.to_string(), v.value.to_string(), opt(&v.exact)])
            .collect()
    }
}

impl Tabular for OptRateResult {
    fn header(&self) -> Vec<&'static str> {
        vec!["q_star", "t_star", "bracket_lo", "bracket_hi", "refinement_iterations", "boundary_flag"]
    }

    fn records(&self) -> Vec<Vec<String>> {
        vec![vec![
            self.q_star.to_string(),
            self.t_star.to_string(),
            self.bracket.0.to_string(),
            self.bracket.1.to_string(),
            self.refinement_iterations.to_string(),
            self.boundary_flag.to_string(),
        ]]
    }
}

impl Tabular for ConvergenceReport {
    fn header(&self) -> Vec<&'static str> {
        vec!["n", "q_star", "t_star", "normalized", "boundary_flag", "error"]
    }

    fn records(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.n.to_string(),
                    opt(&r.q_star),
                    opt(&r.t_star),
                    opt(&r.normalized),
                    opt(&r.boundary_flag),
                    opt(&r.error),
                ]
            })
            .collect()
    }
}

impl Tabular for LemmaReport {
    fn header(&self) -> Vec<&'static str> {
        vec!["lemma_id", "pass", "worst_margin", "worst_point"]
    }

    fn records(&self) -> Vec<Vec<String>> {
        self.checks
            .iter()
            .map(|c| {
                let point: Vec<String> = c.worst_point.iter().map(f64::to_string).collect();
                vec![c.lemma_id.clone(), c.pass.to_string(), c.worst_margin.to_string(), point.join(";")]
            })
            .collect()
    }
}

impl Tabular for TrajectoryStats {
    fn header(&self) -> Vec<&'static str> {
        vec!["runs", "hits", "censored", "mean_steps", "standard_error", "cap", "seed"]
    }

    fn records(&self) -> Vec<Vec<String>> {
        vec![vec![
            self.runs.to_string(),
            self.hits.to_string(),
            self.censored.to_string(),
            opt(&self.mean_steps),
            opt(&self.standard_error),
            self.cap.to_string(),
            self.seed.to_string(),
        ]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ext_real_json() {
        assert_eq!(serde_json::to_string(&ExtReal(2.5)).unwrap(), "2.5");
        assert_eq!(serde_json::to_string(&ExtReal(f64::INFINITY)).unwrap(), "\"inf\"");
        let back: ExtReal = serde_json::from_str("\"inf\"").unwrap();
        assert!(back.0.is_infinite());
        let back: ExtReal = serde_json::from_str("7").unwrap();
        assert_eq!(back, ExtReal(7.0));
        assert!(serde_json::from_str::<ExtReal>("\"huge\"").is_err());
    }

    #[test]
    fn csv_has_header_and_dot_decimals() {
        let curve = RuntimeCurve {
            fitness: "x".into(),
            backend: crate::Backend::Float,
            q_grid: vec![0.25, 0.5],
            values: vec![
                crate::analysis::RuntimeValue { value: ExtReal(1.5), exact: None },
                crate::analysis::RuntimeValue { value: ExtReal(f64::INFINITY), exact: None },
            ],
        };
        assert_eq!(curve.to_csv(), "q,E_T,exact\n0.25,1.5,\n0.5,inf,\n");
    }
}
