//! The `eso` command-line tool.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use eso_core::eso::{certificate, eso_specialized, eso_with_formula, EsoResult, FormulaId};
use eso_core::prob_matrix::{ProbMatrix, ProbMethod};
use eso_core::solver::{optimal_serial_sampling, tradeoff_report, SolveOptions, SolverTrace};
use eso_core::verifier::{canonical_points, run_identity_battery, CheckMode};
use eso_core::{DataMatrix, SamplingSpec, DENSE_CAP};
use serde::Serialize;
use serde_json::json;

use crate::error::CliError;
use crate::matrix_io::read_matrix;
use crate::problem::load_sidecar;
use crate::reports::{emit, envelope_json, junit, prob_matrix_csv, read_v, trace_csv};
use crate::runner::{check_eso_parallel, configure_threads, mean_gaps, multi_seed_solve};
use crate::spec_json::load_spec;

#[derive(Debug, Parser)]
#[command(name = "eso", version, about = "ESO stepsizes for randomized coordinate descent with arbitrary sampling")]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Certificate tolerance: margins at least -tolerance pass.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tolerance: f64,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute ESO parameters v.
    ComputeV(ComputeVArgs),
    /// Check a given v by certificate and by direct evaluation.
    Verify(VerifyArgs),
    /// Write the probability matrix as CSV.
    Probmatrix(ProbMatrixArgs),
    /// Run coordinate descent on a ridge-regularized quadratic.
    Solve(SolveArgs),
    /// Preprocessing versus iteration cost per formula.
    Tradeoff(TradeoffArgs),
    /// Optimal serial sampling for the accelerated bound.
    DesignSerial(DesignSerialArgs),
    /// Structural identity battery on random specs.
    Battery(BatteryArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormulaArg {
    Auto,
    Uncoupled,
    CoupledExact,
    CoupledFormula,
    CoupledBound,
    CoupledPower,
    Generic,
    Ctau,
    TauNice,
    DoublyUniform,
    Graph,
    Serial,
    Conservative,
}

impl FormulaArg {
    fn id(self) -> Option<FormulaId> {
        Some(match self {
            FormulaArg::Auto => return None,
            FormulaArg::Uncoupled => FormulaId::Uncoupled,
            FormulaArg::CoupledExact => FormulaId::CoupledExact,
            FormulaArg::CoupledFormula => FormulaId::CoupledFormula,
            FormulaArg::CoupledBound => FormulaId::CoupledBound,
            FormulaArg::CoupledPower => FormulaId::CoupledPower,
            FormulaArg::Generic => FormulaId::GenericTau,
            FormulaArg::Ctau => FormulaId::CtauDistributed,
            FormulaArg::TauNice => FormulaId::TauNice,
            FormulaArg::DoublyUniform => FormulaId::DoublyUniform,
            FormulaArg::Graph => FormulaId::Graph,
            FormulaArg::Serial => FormulaId::Serial,
            FormulaArg::Conservative => FormulaId::Conservative,
        })
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ComputeVArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    /// Spec file, or inline JSON starting with `{`.
    #[arg(long)]
    pub sampling: String,
    #[arg(long, value_enum, default_value_t = FormulaArg::Auto)]
    pub formula: FormulaArg,
    /// Ridge λ: append √λ·I rows to A before computing v.
    #[arg(long, default_value_t = 0.0)]
    pub ridge: f64,
    #[arg(long)]
    pub no_certify: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyMode {
    Exhaustive,
    MonteCarlo,
    /// Certificate only.
    Matrix,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub sampling: String,
    /// JSON array, or a compute-v report.
    #[arg(long)]
    pub v: PathBuf,
    #[arg(long, value_enum, default_value_t = VerifyMode::Exhaustive)]
    pub mode: VerifyMode,
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbMethodArg {
    Auto,
    ClosedForm,
    Enumerate,
    MonteCarlo,
}

#[derive(Debug, Args, Serialize)]
pub struct ProbMatrixArgs {
    #[arg(long)]
    pub sampling: String,
    #[arg(long, value_enum, default_value_t = ProbMethodArg::Auto)]
    pub method: ProbMethodArg,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct SolveArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    /// JSON sidecar `{lambda, b, x0}`.
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long)]
    pub sampling: String,
    #[arg(long, value_enum, default_value_t = FormulaArg::Auto)]
    pub formula: FormulaArg,
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iter: usize,
    /// Number of runs, with seeds seed, seed+1, ….
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    /// CSV file for the per-iteration gaps.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct TradeoffArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub sampling: String,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [FormulaArg::Conservative, FormulaArg::Generic, FormulaArg::CoupledPower])]
    pub formulas: Vec<FormulaArg>,
    #[arg(long, default_value_t = 10)]
    pub power_iterations: usize,
    /// Strong convexity constant.
    #[arg(long, default_value_t = 1e-3)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub epsilon: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct DesignSerialArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    /// JSON sidecar `{lambda, b, x0}`; x* is found by a direct solve.
    #[arg(long)]
    pub problem: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct BatteryArgs {
    /// Comma-separated seeds (defaults to --seed).
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_values_t = [3usize, 4, 5])]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub specs_per_size: usize,
    #[arg(long)]
    pub junit: Option<PathBuf>,
}

fn config_json<T: Serialize>(cli: &Cli, args: &T) -> serde_json::Value {
    json!({
        "seed": cli.seed,
        "tolerance": cli.tolerance,
        "out": cli.out.as_ref().map(|p| p.display().to_string()),
        "args": args,
    })
}

fn load_pair(matrix: &Path, sampling: &str) -> Result<(DataMatrix, SamplingSpec), CliError> {
    let data = read_matrix(matrix)?;
    let spec = load_spec(sampling)?;
    if spec.n != data.n() {
        return Err(CliError::Input(format!("sampling has n = {} but the matrix has {} columns", spec.n, data.n())));
    }
    Ok((data, spec))
}

fn compute(data: &DataMatrix, spec: &SamplingSpec, formula: FormulaArg) -> Result<EsoResult, CliError> {
    Ok(match formula.id() {
        None => eso_specialized(data, spec)?,
        Some(f) => eso_with_formula(data, spec, f)?,
    })
}

fn summary(v: &[f64]) -> (f64, f64, f64) {
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = v.iter().copied().fold(0.0, f64::max);
    (min, max, v.iter().sum::<f64>() / v.len().max(1) as f64)
}

/// Run a parsed command; returns the process exit code.
pub fn run(cli: &Cli) -> Result<i32, CliError> {
    configure_threads(cli.threads);
    if !(cli.tolerance.is_finite() && cli.tolerance > 0.0) {
        return Err(CliError::Input("--tolerance must be positive".into()));
    }
    let out = cli.out.as_deref();
    match &cli.command {
        Command::ComputeV(a) => {
            let (data, spec) = load_pair(&a.matrix, &a.sampling)?;
            let data = data.with_ridge(a.ridge)?;
            let mut res = compute(&data, &spec, a.formula)?;
            if !a.no_certify && data.n() <= DENSE_CAP {
                res = res.certified(&data, &spec)?;
            }
            let tau = spec.cardinality_cap();
            let ratio = tau.map(|t| res.max_ratio(t));
            let (min, max, mean) = summary(&res.v);
            eprintln!("formula {}: v min {min:.6e} max {max:.6e} mean {mean:.6e}", res.formula_id.as_str());
            if let Some(r) = ratio {
                eprintln!("max_i v_i tau / (p_i n) = {r:.6e}");
            }
            let body = json!({
                "v": res.v,
                "p": res.p,
                "formula_id": res.formula_id,
                "certificate_margin": res.certificate_margin,
                "cost_estimate": res.cost_estimate,
                "tau": tau,
                "max_ratio": ratio,
            });
            emit(out, &envelope_json("compute-v", &config_json(cli, a), body))?;
            Ok(0)
        }
        Command::Verify(a) => {
            let (data, spec) = load_pair(&a.matrix, &a.sampling)?;
            let v = read_v(&a.v)?;
            if v.len() != data.n() {
                return Err(CliError::Input(format!("v has length {}, expected {}", v.len(), data.n())));
            }
            let cert = if data.n() <= DENSE_CAP { Some(certificate(&data, &spec, &v)?) } else { None };
            let cert_pass = cert.as_ref().is_none_or(|c| c.margin >= -cli.tolerance);
            let check = match a.mode {
                VerifyMode::Matrix => None,
                VerifyMode::Exhaustive => {
                    let pts = canonical_points(&data, &spec, &v, cli.seed);
                    Some(check_eso_parallel(&data, &spec, &v, &pts, CheckMode::Exhaustive)?)
                }
                VerifyMode::MonteCarlo => {
                    let pts = canonical_points(&data, &spec, &v, cli.seed);
                    let mode = CheckMode::MonteCarlo { trials: a.trials, seed: cli.seed };
                    Some(check_eso_parallel(&data, &spec, &v, &pts, mode)?)
                }
            };
            let pass = cert_pass && check.as_ref().is_none_or(|c| c.pass);
            if let Some(c) = &cert {
                eprintln!("certificate margin {:.6e}: {}", c.margin, if cert_pass { "pass" } else { "FAIL" });
                if !cert_pass {
                    eprintln!("witness: {:?}", c.bottom_vector);
                }
            }
            if let Some(c) = &check {
                eprintln!("{}", eso_core::verifier::describe(c));
            }
            let body = json!({ "pass": pass, "certificate": cert, "check": check });
            emit(out, &envelope_json("verify", &config_json(cli, a), body))?;
            Ok(if pass { 0 } else { 1 })
        }
        Command::Probmatrix(a) => {
            let spec = load_spec(&a.sampling)?;
            let method = match a.method {
                ProbMethodArg::Auto => ProbMethod::Auto,
                ProbMethodArg::ClosedForm => ProbMethod::ClosedForm,
                ProbMethodArg::Enumerate => ProbMethod::Enumerate,
                ProbMethodArg::MonteCarlo => ProbMethod::MonteCarlo { samples: a.samples, seed: cli.seed },
            };
            let p = ProbMatrix::compute(&spec, method)?;
            emit(out, &prob_matrix_csv(&p))?;
            Ok(0)
        }
        Command::Solve(a) => {
            let data = read_matrix(&a.matrix)?;
            let sidecar = load_sidecar(&a.problem)?;
            let spec = load_spec(&a.sampling)?;
            if spec.n != data.n() {
                return Err(CliError::Input(format!("sampling has n = {} but the matrix has {} columns", spec.n, data.n())));
            }
            let (problem, x0) = sidecar.build(data)?;
            let res = compute(&problem.eso_data()?, &spec, a.formula)?;
            let opts = SolveOptions { epsilon: a.epsilon, max_iter: a.max_iter, seed: cli.seed };
            let seeds: Vec<u64> = (0..a.runs.max(1) as u64).map(|k| cli.seed.wrapping_add(k)).collect();
            let traces = multi_seed_solve(&problem, &spec, &res.v, &x0, opts, &seeds)
                .into_iter()
                .collect::<Result<Vec<SolverTrace>, _>>()?;
            if let Some(path) = &a.trace {
                emit(Some(path), &trace_csv(&traces))?;
            }
            let runs: Vec<_> = traces
                .iter()
                .map(|t| json!({"seed": t.seed, "iterations": t.iterations, "final_gap": t.gaps.last()}))
                .collect();
            let mean = mean_gaps(&traces);
            let body = json!({
                "v": res.v,
                "p": res.p,
                "formula_id": res.formula_id,
                "theoretical_iteration_bound": traces[0].theoretical_iteration_bound,
                "fstar": problem.fstar,
                "runs": runs,
                "mean_final_gap": mean.last(),
            });
            eprintln!("{} run(s); mean final gap {:.3e}", traces.len(), mean.last().copied().unwrap_or(0.0));
            emit(out, &envelope_json("solve", &config_json(cli, a), body))?;
            Ok(0)
        }
        Command::Tradeoff(a) => {
            let (data, spec) = load_pair(&a.matrix, &a.sampling)?;
            let mut formulas = Vec::new();
            for f in &a.formulas {
                formulas.push(f.id().ok_or_else(|| CliError::Input("`auto` is not a formula for tradeoff".into()))?);
            }
            let rep = tradeoff_report(&data, &spec, &formulas, a.power_iterations, a.lambda, a.epsilon)?;
            for r in &rep.rows {
                eprintln!(
                    "{:<16} max ratio {:.4e}  preprocessing {:.3}  iterations {:.4e}",
                    r.formula_id.as_str(),
                    r.max_ratio,
                    r.preprocessing_passes,
                    r.iteration_passes
                );
            }
            emit(out, &envelope_json("tradeoff", &config_json(cli, a), &rep))?;
            Ok(0)
        }
        Command::DesignSerial(a) => {
            let data = read_matrix(&a.matrix)?;
            let sidecar = load_sidecar(&a.problem)?;
            let (problem, x0) = sidecar.build(data)?;
            let d = optimal_serial_sampling(&problem.data, &x0, &problem.xstar)?;
            eprintln!("C_opt {:.6e}  C_unif {:.6e}  ratio {:.6}", d.c_opt, d.c_unif, d.ratio);
            emit(out, &envelope_json("design-serial", &config_json(cli, a), &d))?;
            Ok(0)
        }
        Command::Battery(a) => {
            let seeds = if a.seeds.is_empty() { vec![cli.seed] } else { a.seeds.clone() };
            let rep = run_identity_battery(&seeds, &a.sizes, a.specs_per_size)?;
            for c in &rep.checks {
                eprintln!("{:<30} {:>6} cases  max {:.3e}  {}", c.name, c.cases, c.max_discrepancy, if c.pass { "pass" } else { "FAIL" });
            }
            if let Some(path) = &a.junit {
                emit(Some(path), &junit(&rep, "identity_battery"))?;
            }
            emit(out, &envelope_json("battery", &config_json(cli, a), &rep))?;
            Ok(if rep.pass() { 0 } else { 1 })
        }
    }
}
