//! `qsd` — minimum-error discrimination of pure qubit states.
//!
//! Subcommands: `solve`, `inverse`, `verify`, `classify`, `simulate`,
//! `oracle`. Instances and measurements are JSON files; see the crate README
//! for the schemas. Exit codes: 0 success, 1 invalid input, 2 solver
//! failure, 3 verification failed.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use qsd_core::oracle::OracleConfig;
use qsd_core::solver::Classification;
use qsd_core::{
    bloch_from_ket, certify, inverse, oracle_optimize, simulate, solve, BlochVector,
    Certificate, Error as CoreError, Povm, PovmElement, Problem, SimReport, Solution,
    DEFAULT_TOL,
};

// ---------------------------------------------------------------------------
// File formats.
// ---------------------------------------------------------------------------

/// A discrimination instance on disk: Bloch vectors or kets, plus priors.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    #[serde(default)]
    states: Option<Vec<[f64; 3]>>,
    /// Alternative input: complex amplitude pairs, each entry `[re, im]`.
    #[serde(default)]
    kets: Option<Vec<[[f64; 2]; 2]>>,
    priors: Vec<f64>,
    #[serde(default)]
    tolerance: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PovmElementFile {
    omega: f64,
    gamma: [f64; 3],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PovmFile {
    elements: Vec<PovmElementFile>,
}

// ---------------------------------------------------------------------------
// Errors and exit codes.
// ---------------------------------------------------------------------------

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let code = match e {
            CoreError::InvalidState(_)
            | CoreError::InvalidPriors(_)
            | CoreError::CompletenessViolation(_)
            | CoreError::NegativeFrequency { .. }
            | CoreError::NonProjectorElement { .. }
            | CoreError::ShapeError(_)
            | CoreError::ConfigMismatch(_)
            | CoreError::NonPositivePrior(_)
            | CoreError::DenominatorVanishes(_)
            | CoreError::DegenerateInput(_) => 1,
            CoreError::CertificateFailed => 3,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

// ---------------------------------------------------------------------------
// Command line.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Pretty,
}

#[derive(Debug, Parser)]
#[command(name = "qsd", version, about = "Minimum-error qubit state discrimination")]
struct Cli {
    /// Certificate/constraint tolerance override.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "pretty")]
    output: OutputFormat,
    /// Accept subnormalized priors (sum < 1) for subproblem workflows.
    #[arg(long, global = true)]
    subproblem: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute a certified optimal measurement for a problem file.
    Solve {
        problem: PathBuf,
        /// Also run the derivative-free oracle and report the comparison.
        #[arg(long)]
        oracle_check: bool,
    },
    /// Construct the instance for which a POVM is optimal.
    Inverse {
        povm: PathBuf,
        /// The free vector R, as `x,y,z`.
        #[arg(long, value_parser = parse_vec3)]
        r: Vector3<f64>,
    },
    /// Evaluate the optimality certificate of a POVM on a problem.
    Verify { problem: PathBuf, povm: PathBuf },
    /// Report only the classification of the optimum.
    Classify { problem: PathBuf },
    /// Monte-Carlo simulation of a measurement on a problem.
    Simulate {
        problem: PathBuf,
        povm: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Derivative-free search for the best measurement (lower-bound witness).
    Oracle {
        problem: PathBuf,
        #[arg(long, default_value_t = 16)]
        restarts: usize,
        #[arg(long, default_value_t = 2000)]
        iterations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_vec3(text: &str) -> Result<Vector3<f64>, String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected x,y,z, got {text:?}"));
    }
    let mut v = [0.0f64; 3];
    for (slot, part) in v.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|e| format!("bad component {part:?}: {e}"))?;
    }
    Ok(Vector3::new(v[0], v[1], v[2]))
}

// ---------------------------------------------------------------------------
// Loading.
// ---------------------------------------------------------------------------

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::input(format!("{}:{}: {e}", path.display(), e.line())))
}

fn load_problem(path: &Path, cli: &Cli) -> CliResult<Problem> {
    let file: ProblemFile = read_json(path)?;
    let states: Vec<BlochVector> = match (&file.states, &file.kets) {
        (Some(states), None) => states
            .iter()
            .map(|s| BlochVector::new(s[0], s[1], s[2]))
            .collect(),
        (None, Some(kets)) => {
            let mut out = Vec::with_capacity(kets.len());
            for k in kets {
                let a = num_complex(k[0]);
                let b = num_complex(k[1]);
                out.push(bloch_from_ket(a, b).map_err(CliError::from)?);
            }
            out
        }
        _ => {
            return Err(CliError::input(format!(
                "{}: exactly one of `states` and `kets` must be present",
                path.display()
            )))
        }
    };
    let tolerance = cli.tolerance.or(file.tolerance).unwrap_or(DEFAULT_TOL);
    let problem = Problem::with_tolerance(states, file.priors, tolerance)?;
    if !cli.subproblem && !problem.is_normalized() {
        return Err(CliError::input(format!(
            "priors sum to {}; pass --subproblem to allow sums below 1",
            problem.prior_sum()
        )));
    }
    Ok(problem)
}

fn num_complex(pair: [f64; 2]) -> num_complex::Complex64 {
    num_complex::Complex64::new(pair[0], pair[1])
}

fn load_povm(path: &Path, tolerance: f64) -> CliResult<Povm> {
    let file: PovmFile = read_json(path)?;
    let povm = Povm::new(
        file.elements
            .iter()
            .map(|e| {
                PovmElement::new(e.omega, BlochVector::new(e.gamma[0], e.gamma[1], e.gamma[2]))
            })
            .collect(),
    );
    povm.validate(tolerance)?;
    Ok(povm)
}

// ---------------------------------------------------------------------------
// Output.
// ---------------------------------------------------------------------------

fn classification_name(c: &Classification) -> &'static str {
    match c {
        Classification::Projective(..) => "projective",
        Classification::Generalized3(_) => "generalized3",
        Classification::Generalized4(_) => "generalized4",
        Classification::PovmOfStates => "povm_of_states",
    }
}

fn active_indices(c: &Classification) -> Vec<usize> {
    match *c {
        Classification::Projective(i, j) => vec![i, j],
        Classification::Generalized3(t) => t.to_vec(),
        Classification::Generalized4(q) => q.to_vec(),
        Classification::PovmOfStates => Vec::new(),
    }
}

#[derive(Serialize)]
struct SolutionOut<'a> {
    p_corr: f64,
    classification: &'a str,
    active: Vec<usize>,
    degenerate: bool,
    povm: PovmFile,
    certificate: &'a Certificate,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_p_corr: Option<f64>,
}

fn povm_file(povm: &Povm) -> PovmFile {
    PovmFile {
        elements: povm
            .elements
            .iter()
            .map(|e| PovmElementFile {
                omega: e.omega,
                gamma: [e.gamma.x, e.gamma.y, e.gamma.z],
            })
            .collect(),
    }
}

fn emit_json<T: Serialize>(value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::input(format!("serialization: {e}")))?;
    println!("{text}");
    Ok(())
}

fn pretty_solution(solution: &Solution, oracle_p: Option<f64>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "P_corr         = {:.17}", solution.p_corr);
    let _ = writeln!(
        out,
        "classification = {} {:?}",
        classification_name(&solution.classification),
        active_indices(&solution.classification)
    );
    if solution.degenerate {
        let _ = writeln!(out, "degenerate     = true (coincident input states)");
    }
    for (j, e) in solution.povm.elements.iter().enumerate() {
        let _ = writeln!(
            out,
            "element {j}: omega = {:.17}, gamma = ({:.17}, {:.17}, {:.17})",
            e.omega, e.gamma.x, e.gamma.y, e.gamma.z
        );
    }
    let _ = write!(out, "{}", pretty_certificate(&solution.certificate));
    if let Some(p) = oracle_p {
        let _ = writeln!(
            out,
            "oracle         = {:.12} (gap {:+.3e})",
            p,
            solution.p_corr - p
        );
    }
    out
}

fn pretty_certificate(cert: &Certificate) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "certificate    = {} (tolerance {:.3e})",
        if cert.passed { "PASS" } else { "FAIL" },
        cert.tolerance
    );
    let _ = writeln!(
        out,
        "  hermiticity residual = {:.3e}",
        cert.hermiticity_residual
    );
    for (j, (eig, comp)) in cert
        .min_eig_g
        .iter()
        .zip(&cert.complementarity)
        .enumerate()
    {
        let _ = writeln!(
            out,
            "  G_{j}: min eig = {eig:+.3e}, complementarity = {comp:.3e}"
        );
    }
    out
}

// ---------------------------------------------------------------------------
// Commands.
// ---------------------------------------------------------------------------

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Solve {
            problem,
            oracle_check,
        } => {
            let problem = load_problem(problem, cli)?;
            let solution = solve(&problem)?;
            let oracle_p = if *oracle_check {
                let (_, p) = oracle_optimize(&problem, &OracleConfig::default());
                Some(p)
            } else {
                None
            };
            match cli.output {
                OutputFormat::Json => emit_json(&SolutionOut {
                    p_corr: solution.p_corr,
                    classification: classification_name(&solution.classification),
                    active: active_indices(&solution.classification),
                    degenerate: solution.degenerate,
                    povm: povm_file(&solution.povm),
                    certificate: &solution.certificate,
                    oracle_p_corr: oracle_p,
                })?,
                OutputFormat::Pretty => print!("{}", pretty_solution(&solution, oracle_p)),
            }
            Ok(())
        }
        Command::Inverse { povm, r } => {
            let povm = load_povm(povm, cli.tolerance.unwrap_or(DEFAULT_TOL))?;
            let result = inverse(&povm, r)?;
            match cli.output {
                OutputFormat::Json => emit_json(&result)?,
                OutputFormat::Pretty => {
                    println!("A = {:.17}", result.a_value);
                    for (j, (beta, p)) in result
                        .problem
                        .states()
                        .iter()
                        .zip(result.problem.priors())
                        .enumerate()
                    {
                        println!(
                            "state {j}: p = {:.17}, beta = ({:.17}, {:.17}, {:.17})",
                            p, beta.x, beta.y, beta.z
                        );
                    }
                }
            }
            Ok(())
        }
        Command::Verify { problem, povm } => {
            let problem = load_problem(problem, cli)?;
            let povm = load_povm(povm, problem.tolerance())?;
            let certificate = certify(&problem, &povm)?;
            match cli.output {
                OutputFormat::Json => emit_json(&certificate)?,
                OutputFormat::Pretty => print!("{}", pretty_certificate(&certificate)),
            }
            if certificate.passed {
                Ok(())
            } else {
                Err(CliError {
                    code: 3,
                    message: "certificate failed".into(),
                })
            }
        }
        Command::Classify { problem } => {
            let problem = load_problem(problem, cli)?;
            let solution = solve(&problem)?;
            match cli.output {
                OutputFormat::Json => emit_json(&serde_json::json!({
                    "classification": classification_name(&solution.classification),
                    "active": active_indices(&solution.classification),
                }))?,
                OutputFormat::Pretty => println!(
                    "{} {:?}",
                    classification_name(&solution.classification),
                    active_indices(&solution.classification)
                ),
            }
            Ok(())
        }
        Command::Simulate {
            problem,
            povm,
            trials,
            seed,
        } => {
            let problem = load_problem(problem, cli)?;
            let povm = load_povm(povm, problem.tolerance())?;
            let report: SimReport = simulate(&problem, &povm, *trials, *seed)?;
            match cli.output {
                OutputFormat::Json => emit_json(&report)?,
                OutputFormat::Pretty => println!(
                    "trials = {}, successes = {}, rate = {:.8} +/- {:.8}",
                    report.trials, report.successes, report.empirical_rate, report.std_error
                ),
            }
            Ok(())
        }
        Command::Oracle {
            problem,
            restarts,
            iterations,
            seed,
        } => {
            let problem = load_problem(problem, cli)?;
            let config = OracleConfig {
                restarts: *restarts,
                iterations: *iterations,
                seed: *seed,
                ..OracleConfig::default()
            };
            let (povm, p) = oracle_optimize(&problem, &config);
            match cli.output {
                OutputFormat::Json => emit_json(&serde_json::json!({
                    "p_corr": p,
                    "povm": povm_file(&povm),
                }))?,
                OutputFormat::Pretty => {
                    println!("best found P_corr = {p:.12}");
                    for (j, e) in povm.elements.iter().enumerate() {
                        println!(
                            "element {j}: omega = {:.12}, gamma = ({:.12}, {:.12}, {:.12})",
                            e.omega, e.gamma.x, e.gamma.y, e.gamma.z
                        );
                    }
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("QD_LOG")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
