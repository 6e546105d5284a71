//! Command-line front end.
//!
//! Every command validates its flags before computing anything and emits a
//! JSON or CSV report. Exit codes: 0 on success, 2 on invalid input, 3 when
//! `verify` finds a failing check, 1 for other computational failures.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analysis::{
    convergence_study, linspace, needle_closed_form, optimal_rate, runtime_at, runtime_curve,
    runtime_exact, verify_analytic_lemmas, LemmaReport, RuntimeValue, SearchParams, Q_CLAMP,
};
use crate::error::LabError;
use crate::fitness::{build_dss, build_jump, build_needle, build_onemax, SteppingStoneProfile, UnitationFitness};
use crate::montecarlo::{estimate_runtime, DEFAULT_CAP};
use crate::report::{Format, Tabular};
use crate::scalar::{Backend, Rate};

/// Largest `n` accepted by the rational backend on the command line.
pub const MAX_RATIONAL_N: usize = 14;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_VERIFY_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "dss-lab", version, about = "Exact runtime analysis of the (1+1) EA on functions of unitation")]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, env = "DSS_LAB_FORMAT", default_value = "json")]
    pub format: Format,

    /// Write the report here instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the stepping stones construction for (p, n).
    DssInfo {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        n: usize,
    },
    /// Exact expected runtime at one mutation rate.
    Runtime {
        #[command(flatten)]
        fitness: FitnessArgs,
        /// Rate as a decimal or fraction (`3/10`).
        #[arg(long)]
        q: String,
        #[arg(long, value_enum, default_value = "float")]
        backend: BackendArg,
    },
    /// Expected runtime over an evenly spaced grid of rates.
    Curve {
        #[command(flatten)]
        fitness: FitnessArgs,
        #[arg(long, default_value_t = 0.01)]
        q_min: f64,
        #[arg(long, default_value_t = 0.99)]
        q_max: f64,
        #[arg(long, default_value_t = 99)]
        points: usize,
    },
    /// Locate the runtime-minimising rate.
    OptRate {
        #[command(flatten)]
        fitness: FitnessArgs,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Optimal rate of the stepping stones function across several n.
    Sweep {
        #[arg(long)]
        p: f64,
        /// Comma-separated, strictly increasing.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        n: Vec<usize>,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Monte Carlo estimate of the runtime on actual bitstrings.
    Simulate {
        #[command(flatten)]
        fitness: FitnessArgs,
        #[arg(long)]
        q: String,
        #[arg(long, default_value_t = 10_000)]
        runs: u64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: u64,
    },
    /// Check the analytic inequalities and the Needle closed form.
    Verify {
        #[arg(long, default_value_t = 1000)]
        grid_density: usize,
        #[arg(long, default_value_t = 12)]
        needle_max_n: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitnessKindArg {
    Dss,
    Onemax,
    Needle,
    Jump,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Rational,
    Float,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Rational => Backend::Rational,
            BackendArg::Float => Backend::Float,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct FitnessArgs {
    #[arg(long, value_enum)]
    pub fitness: FitnessKindArg,
    #[arg(long)]
    pub n: usize,
    /// Target rate of the stepping stones construction.
    #[arg(long)]
    pub p: Option<f64>,
    /// Gap length for Jump.
    #[arg(long)]
    pub m: Option<usize>,
}

impl FitnessArgs {
    pub fn build(&self) -> Result<UnitationFitness, LabError> {
        match self.fitness {
            FitnessKindArg::Dss => {
                let p = self.p.ok_or_else(|| LabError::param("p", "--p is required for dss"))?;
                Ok(build_dss(p, self.n)?.0)
            }
            FitnessKindArg::Onemax => build_onemax(self.n),
            FitnessKindArg::Needle => build_needle(self.n),
            FitnessKindArg::Jump => {
                let m = self.m.ok_or_else(|| LabError::param("m", "--m is required for jump"))?;
                build_jump(self.n, m)
            }
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    #[arg(long, default_value_t = Q_CLAMP)]
    pub q_min: f64,
    #[arg(long, default_value_t = 1.0 - Q_CLAMP)]
    pub q_max: f64,
    #[arg(long, default_value_t = 256)]
    pub coarse_points: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

impl From<&SearchArgs> for SearchParams {
    fn from(a: &SearchArgs) -> Self {
        SearchParams { q_min: a.q_min, q_max: a.q_max, coarse_points: a.coarse_points, tol: a.tol }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DssInfo {
    pub profile: SteppingStoneProfile,
    pub fitness: UnitationFitness,
}

impl Tabular for DssInfo {
    fn header(&self) -> Vec<&'static str> {
        vec!["level", "fitness", "stone"]
    }

    fn records(&self) -> Vec<Vec<String>> {
        self.fitness
            .values
            .iter()
            .enumerate()
            .map(|(level, v)| {
                let stone = self.profile.levels.iter().position(|&l| l == level);
                vec![level.to_string(), v.to_string(), stone.map(|k| k.to_string()).unwrap_or_default()]
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeReport {
    pub fitness: String,
    pub q: String,
    pub backend: Backend,
    #[serde(flatten)]
    pub runtime: RuntimeValue,
}

impl Tabular for RuntimeReport {
    fn header(&self) -> Vec<&'static str> {
        vec!["q", "E_T", "exact"]
    }

    fn records(&self) -> Vec<Vec<String>> {
        vec![vec![
            self.q.clone(),
            self.runtime.value.to_string(),
            self.runtime.exact.clone().unwrap_or_default(),
        ]]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeedleMismatch {
    pub n: usize,
    pub q: String,
    pub closed_form: String,
    pub chain: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub lemmas: LemmaReport,
    pub needle_cases: usize,
    pub needle_mismatches: Vec<NeedleMismatch>,
}

impl Tabular for VerifyReport {
    fn header(&self) -> Vec<&'static str> {
        self.lemmas.header()
    }

    fn records(&self) -> Vec<Vec<String>> {
        let mut rows = self.lemmas.records();
        rows.push(vec![
            "needle_oracle".into(),
            self.needle_mismatches.is_empty().to_string(),
            self.needle_mismatches.len().to_string(),
            format!("cases={}", self.needle_cases),
        ]);
        rows
    }
}

/// Rates used by the Needle oracle-equality suite.
pub const NEEDLE_RATES: [(i64, i64); 5] = [(1, 5), (1, 3), (1, 2), (2, 3), (4, 5)];

/// Compares the Needle closed form with the exact chain solve for every
/// `n <= max_n` and every rate in [`NEEDLE_RATES`].
pub fn needle_oracle_suite(max_n: usize) -> Result<(usize, Vec<NeedleMismatch>), LabError> {
    let mut cases = 0;
    let mut mismatches = Vec::new();
    for n in 1..=max_n {
        let fitness = build_needle(n)?;
        for (a, b) in NEEDLE_RATES {
            let q = Rate::ratio(a, b)?;
            let closed = needle_closed_form(n, &q.to_rational())?;
            let chain = runtime_exact(&fitness, &q)?;
            cases += 1;
            if closed != chain {
                mismatches.push(NeedleMismatch {
                    n,
                    q: q.to_string(),
                    closed_form: closed.to_string(),
                    chain: chain.to_string(),
                });
            }
        }
    }
    Ok((cases, mismatches))
}

/// Result of a command: rendered report plus exit code.
#[derive(Debug)]
pub struct Outcome {
    pub body: String,
    pub code: i32,
}

fn render<T: Serialize + Tabular>(report: &T, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
            s.push('\n');
            s
        }
        Format::Csv => report.to_csv(),
    }
}

fn parse_rate(text: &str, backend: Backend) -> Result<Rate, LabError> {
    let rate: Rate = text.parse()?;
    if backend == Backend::Rational && !rate.is_exact() {
        return Err(LabError::param("q", format!("rational backend needs a fraction such as 3/10, got `{text}`")));
    }
    Ok(rate)
}

fn check_rational_size(backend: Backend, n: usize) -> Result<(), LabError> {
    if backend == Backend::Rational && n > MAX_RATIONAL_N {
        return Err(LabError::param(
            "backend",
            format!("rational backend is limited to n <= {MAX_RATIONAL_N}; use --backend float for n = {n}"),
        ));
    }
    Ok(())
}

/// Runs a parsed command.
pub fn execute(cli: &Cli) -> Result<Outcome, LabError> {
    let format = cli.format;
    let ok = |body| Outcome { body, code: EXIT_OK };
    match &cli.command {
        Command::DssInfo { p, n } => {
            let (fitness, profile) = build_dss(*p, *n)?;
            Ok(ok(render(&DssInfo { profile, fitness }, format)))
        }
        Command::Runtime { fitness, q, backend } => {
            let backend = Backend::from(*backend);
            check_rational_size(backend, fitness.n)?;
            let rate = parse_rate(q, backend)?;
            let f = fitness.build()?;
            let runtime = runtime_at(&f, &rate, backend)?;
            let report = RuntimeReport { fitness: f.describe(), q: rate.to_string(), backend, runtime };
            Ok(ok(render(&report, format)))
        }
        Command::Curve { fitness, q_min, q_max, points } => {
            if *points < 1 {
                return Err(LabError::param("points", "need at least one point"));
            }
            let f = fitness.build()?;
            let grid = linspace(*q_min, *q_max, *points)
                .into_iter()
                .map(Rate::from_f64)
                .collect::<Result<Vec<_>, _>>()?;
            let curve = runtime_curve(&f, &grid, Backend::Float)?;
            Ok(ok(render(&curve, format)))
        }
        Command::OptRate { fitness, search } => {
            let f = fitness.build()?;
            let res = optimal_rate(&f, &SearchParams::from(search))?;
            Ok(ok(render(&res, format)))
        }
        Command::Sweep { p, n, search } => {
            let report = convergence_study(*p, n, &SearchParams::from(search))?;
            Ok(ok(render(&report, format)))
        }
        Command::Simulate { fitness, q, runs, seed, cap } => {
            let seed = seed.ok_or_else(|| LabError::param("seed", "--seed is required for reproducible simulation"))?;
            let rate: Rate = q.parse()?;
            let f = fitness.build()?;
            let stats = estimate_runtime(&f, rate.value(), *runs, *cap, seed)?;
            Ok(ok(render(&stats, format)))
        }
        Command::Verify { grid_density, needle_max_n } => {
            if *needle_max_n > MAX_RATIONAL_N {
                return Err(LabError::param("needle_max_n", format!("limited to {MAX_RATIONAL_N}")));
            }
            let lemmas = verify_analytic_lemmas(*grid_density)?;
            let (needle_cases, needle_mismatches) = needle_oracle_suite(*needle_max_n)?;
            let pass = lemmas.all_passed() && needle_mismatches.is_empty();
            let report = VerifyReport { pass, lemmas, needle_cases, needle_mismatches };
            Ok(Outcome {
                body: render(&report, format),
                code: if pass { EXIT_OK } else { EXIT_VERIFY_FAILED },
            })
        }
    }
}

fn error_kind(err: &LabError) -> (&'static str, i32) {
    match err {
        LabError::InvalidParameter { .. } => ("invalid_parameter", EXIT_INVALID),
        LabError::Construction { .. } => ("construction", EXIT_INVALID),
        LabError::SingularSystem { .. } => ("singular_system", EXIT_FAILURE),
        LabError::NoMinimum => ("no_minimum", EXIT_FAILURE),
        LabError::EstimateUnavailable { .. } => ("estimate_unavailable", EXIT_FAILURE),
    }
}

/// Renders an error: a JSON object for standard output in JSON mode (empty
/// otherwise), the human-readable message, and the exit code.
pub fn render_error(err: &LabError, format: Format) -> (String, String, i32) {
    let (kind, code) = error_kind(err);
    let message = err.to_string();
    let machine = match format {
        Format::Json => {
            let v = serde_json::json!({ "error": { "kind": kind, "message": message, "exit_code": code } });
            format!("{}\n", serde_json::to_string_pretty(&v).expect("json"))
        }
        Format::Csv => String::new(),
    };
    (machine, format!("error: {message}"), code)
}
