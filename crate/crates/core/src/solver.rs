//! Randomized coordinate descent with arbitrary sampling on a ridge-regularized
//! quadratic, plus iteration-complexity estimates and sampling design.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::DataMatrix;
use crate::eigen::SymmetricEigen;
use crate::error::{EsoError, Result};
use crate::eso::{eso_conservative, eso_coupled, eso_generic_tau, eso_with_formula, FormulaId};
use crate::matrix::{dot, Matrix};
use crate::rng::stream_rng;
use crate::sampling::SamplingSpec;
use crate::spectral::RestrictedMethod;

/// `f(x) = ½‖Ax‖² + (λ/2)‖x‖² − bᵀx`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticProblem {
    pub data: DataMatrix,
    pub ridge: f64,
    pub b: Vec<f64>,
    pub xstar: Vec<f64>,
    pub fstar: f64,
}

impl QuadraticProblem {
    pub fn new(data: DataMatrix, ridge: f64, b: Vec<f64>) -> Result<Self> {
        let n = data.n();
        if b.len() != n {
            return Err(EsoError::DimensionMismatch { expected: n, got: b.len() });
        }
        if !(ridge.is_finite() && ridge >= 0.0) {
            return Err(EsoError::InvalidArgument(format!("ridge parameter {ridge} must be nonnegative")));
        }
        let mut h = data.gram();
        h.add_scaled(&Matrix::identity(n), ridge)?;
        let xstar = h.solve_spd(&b).map_err(|_| {
            EsoError::InvalidData("objective is not strongly convex: AᵀA + λI is singular".into())
        })?;
        let mut p = Self { data, ridge, b, xstar, fstar: 0.0 };
        p.fstar = p.objective(&p.xstar);
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.data.n()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let r = self.data.mul_vec(x);
        self.objective_from_residual(x, &r)
    }

    fn objective_from_residual(&self, x: &[f64], r: &[f64]) -> f64 {
        0.5 * dot(r, r) + 0.5 * self.ridge * dot(x, x) - dot(&self.b, x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let r = self.data.mul_vec(x);
        let mut g = self.data.tmul_vec(&r);
        for i in 0..g.len() {
            g[i] += self.ridge * x[i] - self.b[i];
        }
        g
    }

    /// `[A; √λ I]`, the matrix from which ESO parameters for `f` are computed.
    pub fn eso_data(&self) -> Result<DataMatrix> {
        self.data.with_ridge(self.ridge)
    }

    /// Euclidean strong convexity constant `λ_min(AᵀA + λI)`.
    pub fn strong_convexity(&self) -> Result<f64> {
        let mut h = self.data.gram();
        h.add_scaled(&Matrix::identity(self.n()), self.ridge)?;
        Ok(SymmetricEigen::new(&h)?.min())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SolverTrace {
    pub iterations: usize,
    /// `f(x_k) − f(x*)` for `k = 0..=iterations`.
    pub gaps: Vec<f64>,
    pub seed: u64,
    #[cfg_attr(feature = "serde", serde(skip))]
    pub spec: SamplingSpec,
    pub v: Vec<f64>,
    pub p: Vec<f64>,
    /// NSync iteration count for reaching `epsilon` from the initial gap.
    pub theoretical_iteration_bound: f64,
    pub x_final: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Stop once the gap is at most `epsilon`; `0` runs all iterations.
    pub epsilon: f64,
    pub max_iter: usize,
    pub seed: u64,
}

/// Divergence guard: the gap may not grow tenfold over ten iterations.
const GUARD_WINDOW: usize = 10;
const GUARD_FACTOR: f64 = 10.0;

/// Run `x_i ← x_i − ∇_i f(x)/v_i` for `i ∈ Ŝ_k`, with the residual `Ax`
/// maintained incrementally.
pub fn solve(problem: &QuadraticProblem, spec: &SamplingSpec, v: &[f64], x0: &[f64], opts: SolveOptions) -> Result<SolverTrace> {
    let n = problem.n();
    spec.validate()?;
    if spec.n != n {
        return Err(EsoError::DimensionMismatch { expected: n, got: spec.n });
    }
    for len in [v.len(), x0.len()] {
        if len != n {
            return Err(EsoError::DimensionMismatch { expected: n, got: len });
        }
    }
    if v.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
        return Err(EsoError::InvalidArgument("stepsize parameters v must be positive".into()));
    }
    let p = spec.marginals();
    if let Some(i) = p.iter().position(|&x| x <= 0.0) {
        return Err(EsoError::Improper(i));
    }

    let mut x = x0.to_vec();
    let mut r = problem.data.mul_vec(&x);
    let gap0 = problem.objective_from_residual(&x, &r) - problem.fstar;
    let bound = match problem.strong_convexity() {
        Ok(sc) if sc > 0.0 && opts.epsilon > 0.0 => nsync_iterations(v, &p, sc, gap0.max(0.0), opts.epsilon),
        _ => f64::NAN,
    };
    let mut gaps = vec![gap0];
    let floor = 1e-10 * gap0.abs().max(1.0);
    let mut rng = stream_rng(opts.seed, 0);
    let mut step = Vec::new();
    let mut k = 0;
    while k < opts.max_iter && !(opts.epsilon > 0.0 && gaps[k] <= opts.epsilon) {
        let s = spec.draw(&mut rng);
        step.clear();
        for &i in &s {
            let g = problem.data.col_dot(i, &r) + problem.ridge * x[i] - problem.b[i];
            step.push((i, -g / v[i]));
        }
        for &(i, d) in &step {
            x[i] += d;
            for &(j, a) in problem.data.col(i) {
                r[j] += a * d;
            }
        }
        k += 1;
        let gap = problem.objective_from_residual(&x, &r) - problem.fstar;
        if !gap.is_finite() {
            return Err(EsoError::Diverged { iteration: k, reason: "objective is not finite".into() });
        }
        if k >= GUARD_WINDOW && gap > floor && gap > GUARD_FACTOR * gaps[k - GUARD_WINDOW] {
            return Err(EsoError::Diverged {
                iteration: k,
                reason: format!("gap grew from {:.3e} to {gap:.3e} within {GUARD_WINDOW} iterations; v is likely not a valid ESO", gaps[k - GUARD_WINDOW]),
            });
        }
        gaps.push(gap);
    }
    Ok(SolverTrace {
        iterations: k,
        gaps,
        seed: opts.seed,
        spec: spec.clone(),
        v: v.to_vec(),
        p,
        theoretical_iteration_bound: bound,
        x_final: x,
    })
}

/// `max_i v_i/(p_i λ) · ln(gap₀/ε)`, at least zero.
pub fn nsync_iterations(v: &[f64], p: &[f64], lambda: f64, gap0: f64, epsilon: f64) -> f64 {
    let rate = v.iter().zip(p).map(|(v, p)| v / (p * lambda)).fold(0.0, f64::max);
    if gap0 <= epsilon {
        return 0.0;
    }
    rate * libm::log(gap0 / epsilon)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum ComplexityKind {
    Nsync,
    Quartz,
    Alpha,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComplexityParams {
    /// Strong convexity constant (NSync, Quartz).
    pub lambda: Option<f64>,
    pub epsilon: f64,
    /// NSync only: replaces `ln(1/ε)` by `ln(gap₀/ε)`.
    pub initial_gap: Option<f64>,
    /// ALPHA only.
    pub x0: Option<Vec<f64>>,
    pub xstar: Option<Vec<f64>>,
}

/// Iteration-complexity estimate for the chosen method.
pub fn complexity_estimate(kind: ComplexityKind, v: &[f64], p: &[f64], params: &ComplexityParams) -> Result<f64> {
    let n = v.len();
    if p.len() != n {
        return Err(EsoError::DimensionMismatch { expected: n, got: p.len() });
    }
    if params.epsilon.is_nan() || params.epsilon <= 0.0 {
        return Err(EsoError::InvalidArgument("epsilon must be positive".into()));
    }
    let need_positive_p = || match p.iter().position(|&x| x <= 0.0) {
        Some(i) => Err(EsoError::Improper(i)),
        None => Ok(()),
    };
    let lambda = || match params.lambda {
        Some(l) if l > 0.0 => Ok(l),
        _ => Err(EsoError::InvalidArgument("a positive strong convexity constant is required".into())),
    };
    let log_term = libm::log(1.0 / params.epsilon);
    match kind {
        ComplexityKind::Nsync => {
            need_positive_p()?;
            let l = lambda()?;
            let log = params.initial_gap.map_or(log_term, |g| libm::log(g / params.epsilon));
            Ok(v.iter().zip(p).map(|(v, p)| v / (p * l)).fold(0.0, f64::max) * log)
        }
        ComplexityKind::Quartz => {
            need_positive_p()?;
            let l = lambda()?;
            let nf = n as f64;
            Ok(v.iter().zip(p).map(|(v, p)| 1.0 / p + v / (p * l * nf)).fold(0.0, f64::max) * log_term)
        }
        ComplexityKind::Alpha => {
            let (x0, xs) = match (&params.x0, &params.xstar) {
                (Some(a), Some(b)) if a.len() == n && b.len() == n => (a, b),
                _ => return Err(EsoError::InvalidArgument("ALPHA needs x0 and x* of length n".into())),
            };
            let mut s = 0.0;
            for i in 0..n {
                let d = x0[i] - xs[i];
                let term = v[i] * d * d;
                if term == 0.0 {
                    continue;
                }
                if p[i] <= 0.0 {
                    return Err(EsoError::Improper(i));
                }
                s += term / (p[i] * p[i]);
            }
            Ok(libm::sqrt(2.0 * s) / libm::sqrt(params.epsilon))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SerialDesign {
    pub p: Vec<f64>,
    /// `‖d‖₂³`.
    pub c_opt: f64,
    /// `n‖d‖₆³`.
    pub c_unif: f64,
    pub ratio: f64,
}

/// Serial probabilities `p_i ∝ (w_i (x⁰_i − x*_i)²)^{1/3}` minimizing the
/// ALPHA bound, with the bounds for this and for uniform sampling (common
/// factor `√2/√ε` omitted).
pub fn optimal_serial_sampling(data: &DataMatrix, x0: &[f64], xstar: &[f64]) -> Result<SerialDesign> {
    let n = data.n();
    for len in [x0.len(), xstar.len()] {
        if len != n {
            return Err(EsoError::DimensionMismatch { expected: n, got: len });
        }
    }
    let w = data.col_sq_norms();
    let d: Vec<f64> = (0..n)
        .map(|i| libm::pow(w[i], 1.0 / 6.0) * libm::cbrt(libm::fabs(x0[i] - xstar[i])))
        .collect();
    let d2: f64 = d.iter().map(|x| x * x).sum();
    if d2 == 0.0 {
        return Err(EsoError::InvalidArgument("every w_i (x0_i - x*_i)^2 is zero".into()));
    }
    let d6: f64 = d.iter().map(|x| libm::pow(*x, 6.0)).sum();
    let p: Vec<f64> = d.iter().map(|x| x * x / d2).collect();
    let c_opt = libm::pow(d2, 1.5);
    let c_unif = n as f64 * libm::sqrt(d6);
    Ok(SerialDesign { p, c_opt, c_unif, ratio: c_unif / c_opt })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TradeoffRow {
    pub formula_id: FormulaId,
    /// `max_i v_i τ / (p_i n)`.
    pub max_ratio: f64,
    pub preprocessing_passes: f64,
    pub iteration_passes: f64,
    pub total_passes: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TradeoffReport {
    pub tau: usize,
    pub nnz: usize,
    pub support_sq_sum: usize,
    pub rows: Vec<TradeoffRow>,
}

impl TradeoffReport {
    pub fn row(&self, f: FormulaId) -> Option<&TradeoffRow> {
        self.rows.iter().find(|r| r.formula_id == f)
    }
}

/// Passes over the data spent computing `v` and running to accuracy
/// `epsilon`, per formula. Coupled formulas use `power_iterations` steps of
/// the power method per row.
pub fn tradeoff_report(
    data: &DataMatrix,
    spec: &SamplingSpec,
    formulas: &[FormulaId],
    power_iterations: usize,
    lambda: f64,
    epsilon: f64,
) -> Result<TradeoffReport> {
    let tau = spec.cardinality_cap().ok_or_else(|| EsoError::Unsupported {
        formula: "tradeoff",
        reason: format!("`{}` sampling has no certified cardinality cap", spec.kind_name()),
    })?;
    if !(lambda > 0.0 && epsilon > 0.0 && epsilon < 1.0) {
        return Err(EsoError::InvalidArgument("need lambda > 0 and 0 < epsilon < 1".into()));
    }
    let nnz = data.nnz().max(1) as f64;
    let sq = data.support_sq_sum();
    let coupled_passes = power_iterations as f64 * sq as f64 / nnz;
    let mut rows = Vec::new();
    for &f in formulas {
        let (res, pre) = match f {
            FormulaId::Conservative => (eso_conservative(data, spec)?, 1.0),
            FormulaId::GenericTau => (eso_generic_tau(data, spec)?, 2.0),
            FormulaId::CoupledExact | FormulaId::CoupledPower => {
                (eso_coupled(data, spec, RestrictedMethod::Power { iterations: power_iterations })?, coupled_passes)
            }
            FormulaId::Uncoupled => (eso_with_formula(data, spec, f)?, coupled_passes),
            other => (eso_with_formula(data, spec, other)?, 2.0),
        };
        let max_ratio = res.max_ratio(tau);
        let iteration_passes = max_ratio / lambda * libm::log(1.0 / epsilon);
        rows.push(TradeoffRow {
            formula_id: f,
            max_ratio,
            preprocessing_passes: pre,
            iteration_passes,
            total_passes: pre + iteration_passes,
        });
    }
    Ok(TradeoffReport { tau, nnz: data.nnz(), support_sq_sum: sq, rows })
}
