//! ESO parameters `v` for a data matrix and a sampling, and the certificate
//! `P(Ŝ) ∘ AᵀA ⪯ Diag(p ∘ v)`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::DataMatrix;
use crate::eigen::SymmetricEigen;
use crate::error::{EsoError, Result};
use crate::matrix::Matrix;
use crate::prob_matrix::{ProbMatrix, ProbMethod};
use crate::sampling::{SamplingKind, SamplingSpec};
use crate::spectral::{
    lambda_prime, lambda_prime_restricted, restricted_formula, BoundSource, EigenMethod,
    RestrictedMethod,
};
use crate::DENSE_CAP;

/// Value given to `v_i` when column `i` of `A` is zero.
pub const V_FLOOR: f64 = 1e-12;

/// Certificates with margin at least `-CERTIFICATE_TOLERANCE` pass.
pub const CERTIFICATE_TOLERANCE: f64 = 1e-8;

/// Row supports larger than this use the bound instead of a dense solve when
/// a product sampling falls back to the coupled formula.
const PRODUCT_EXACT_LIMIT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "SCREAMING_SNAKE_CASE"))]
pub enum FormulaId {
    Uncoupled,
    CoupledExact,
    CoupledFormula,
    CoupledBound,
    CoupledPower,
    GenericTau,
    CtauDistributed,
    TauNice,
    DoublyUniform,
    Graph,
    Serial,
    Conservative,
}

impl FormulaId {
    pub const ALL: [FormulaId; 12] = [
        FormulaId::Uncoupled,
        FormulaId::CoupledExact,
        FormulaId::CoupledFormula,
        FormulaId::CoupledBound,
        FormulaId::CoupledPower,
        FormulaId::GenericTau,
        FormulaId::CtauDistributed,
        FormulaId::TauNice,
        FormulaId::DoublyUniform,
        FormulaId::Graph,
        FormulaId::Serial,
        FormulaId::Conservative,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FormulaId::Uncoupled => "UNCOUPLED",
            FormulaId::CoupledExact => "COUPLED_EXACT",
            FormulaId::CoupledFormula => "COUPLED_FORMULA",
            FormulaId::CoupledBound => "COUPLED_BOUND",
            FormulaId::CoupledPower => "COUPLED_POWER",
            FormulaId::GenericTau => "GENERIC_TAU",
            FormulaId::CtauDistributed => "CTAU_DISTRIBUTED",
            FormulaId::TauNice => "TAU_NICE",
            FormulaId::DoublyUniform => "DOUBLY_UNIFORM",
            FormulaId::Graph => "GRAPH",
            FormulaId::Serial => "SERIAL",
            FormulaId::Conservative => "CONSERVATIVE",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EsoResult {
    pub v: Vec<f64>,
    pub p: Vec<f64>,
    pub formula_id: FormulaId,
    pub certificate_margin: Option<f64>,
    /// Rough count of arithmetic operations spent computing `v`.
    pub cost_estimate: u64,
    /// Per-row multiplier `λ′(J_j ∩ Ŝ)` and where it came from (coupled only).
    pub row_multipliers: Vec<f64>,
    pub row_sources: Vec<BoundSource>,
}

impl EsoResult {
    fn new(v: Vec<f64>, p: Vec<f64>, formula_id: FormulaId, cost_estimate: u64) -> Self {
        Self { v, p, formula_id, certificate_margin: None, cost_estimate, row_multipliers: Vec::new(), row_sources: Vec::new() }
    }

    /// `max_i v_i τ / (p_i n)`.
    pub fn max_ratio(&self, tau: usize) -> f64 {
        let n = self.v.len() as f64;
        self.v.iter().zip(&self.p).map(|(v, p)| v * tau as f64 / (p * n)).fold(0.0, f64::max)
    }

    /// Attach the certificate margin.
    pub fn certified(mut self, data: &DataMatrix, spec: &SamplingSpec) -> Result<Self> {
        self.certificate_margin = Some(certify(data, spec, &self.v)?);
        Ok(self)
    }
}

fn proper_marginals(data: &DataMatrix, spec: &SamplingSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    if spec.n != data.n() {
        return Err(EsoError::DimensionMismatch { expected: data.n(), got: spec.n });
    }
    let p = spec.marginals();
    if let Some(i) = p.iter().position(|&x| x <= 0.0) {
        return Err(EsoError::Improper(i));
    }
    Ok(p)
}

fn floor_zero_columns(v: &mut [f64], w: &[f64]) {
    for (vi, wi) in v.iter_mut().zip(w) {
        if *wi == 0.0 {
            *vi = V_FLOOR;
        }
    }
}

/// `v_i = c · w_i`.
fn scaled_norms(data: &DataMatrix, c: f64) -> Vec<f64> {
    let w = data.col_sq_norms();
    let mut v: Vec<f64> = w.iter().map(|wi| c * wi).collect();
    floor_zero_columns(&mut v, &w);
    v
}

/// `v_i = Σ_j mult(j) A_ji²`.
fn row_weighted(data: &DataMatrix, mult: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0; data.n()];
    for (j, &c) in mult.iter().enumerate() {
        for &(i, a) in data.row(j) {
            v[i] += c * a * a;
        }
    }
    floor_zero_columns(&mut v, &data.col_sq_norms());
    v
}

/// `v_i = min(λ′(P), λ′(AᵀA)) · w_i`. `lambda_prime_gram` replaces the
/// dense computation of `λ′(AᵀA)` when supplied.
pub fn eso_uncoupled(data: &DataMatrix, spec: &SamplingSpec, lambda_prime_gram: Option<f64>) -> Result<EsoResult> {
    let p = proper_marginals(data, spec)?;
    let n = data.n() as u64;
    let mut cost = data.nnz() as u64;
    let lp = if data.n() <= DENSE_CAP {
        cost += n * n * n;
        let pm = ProbMatrix::compute(spec, ProbMethod::Auto)?.matrix;
        lambda_prime(&pm, EigenMethod::DenseExact)?.value
    } else {
        spec.cardinality_cap().map(|t| t as f64).ok_or_else(|| EsoError::Unsupported {
            formula: "UNCOUPLED",
            reason: format!("n = {n} exceeds the dense cap and the sampling has no cardinality cap"),
        })?
    };
    let lg = match lambda_prime_gram {
        Some(x) => x,
        None => {
            if data.n() > DENSE_CAP {
                return Err(EsoError::Unsupported {
                    formula: "UNCOUPLED",
                    reason: format!("n = {n} exceeds the dense cap; supply λ′(AᵀA) externally"),
                });
            }
            cost += data.support_sq_sum() as u64 + n * n * n;
            lambda_prime(&data.gram(), EigenMethod::DenseExact)?.value
        }
    };
    Ok(EsoResult::new(scaled_norms(data, lp.min(lg)), p, FormulaId::Uncoupled, cost))
}

/// `v_i = Σ_j λ′(J_j ∩ Ŝ) A_ji²`.
pub fn eso_coupled(data: &DataMatrix, spec: &SamplingSpec, method: RestrictedMethod) -> Result<EsoResult> {
    let p = proper_marginals(data, spec)?;
    let formula_id = match method {
        RestrictedMethod::Exact => FormulaId::CoupledExact,
        RestrictedMethod::Formula => FormulaId::CoupledFormula,
        RestrictedMethod::Bound => FormulaId::CoupledBound,
        RestrictedMethod::Power { .. } => FormulaId::CoupledPower,
    };
    let mut cache: BTreeMap<Vec<usize>, (f64, BoundSource)> = BTreeMap::new();
    let mut mult = Vec::with_capacity(data.m());
    let mut sources = Vec::with_capacity(data.m());
    let mut cost = 2 * data.nnz() as u64;
    for j in 0..data.m() {
        let support = data.row_support(j);
        let k = support.len() as u64;
        let (value, source) = match cache.get(&support) {
            Some(&hit) => hit,
            None => {
                cost += match method {
                    RestrictedMethod::Exact => k * k + k * k * k,
                    RestrictedMethod::Power { iterations } => k * k * (iterations as u64 + 1),
                    _ => 1,
                };
                let r = lambda_prime_restricted(spec, &support, method)?;
                cache.insert(support, (r.value, r.source));
                (r.value, r.source)
            }
        };
        mult.push(value);
        sources.push(source);
    }
    let mut res = EsoResult::new(row_weighted(data, &mult), p, formula_id, cost);
    res.row_multipliers = mult;
    res.row_sources = sources;
    Ok(res)
}

/// Case (i): `v_i = Σ_j min(|J_j|, τ) A_ji²` for `|Ŝ| ≤ τ`.
pub fn eso_generic_tau(data: &DataMatrix, spec: &SamplingSpec) -> Result<EsoResult> {
    let p = proper_marginals(data, spec)?;
    let tau = spec.cardinality_cap().ok_or_else(|| unsupported(FormulaId::GenericTau, spec))?;
    let mult: Vec<f64> = (0..data.m()).map(|j| data.row(j).len().min(tau) as f64).collect();
    Ok(EsoResult::new(row_weighted(data, &mult), p, FormulaId::GenericTau, 2 * data.nnz() as u64))
}

/// `v_i = min(τ, ω) w_i`.
pub fn eso_conservative(data: &DataMatrix, spec: &SamplingSpec) -> Result<EsoResult> {
    let p = proper_marginals(data, spec)?;
    let tau = spec.cardinality_cap().ok_or_else(|| unsupported(FormulaId::Conservative, spec))?;
    let c = tau.min(data.omega()) as f64;
    Ok(EsoResult::new(scaled_norms(data, c), p, FormulaId::Conservative, data.nnz() as u64))
}

fn unsupported(formula: FormulaId, spec: &SamplingSpec) -> EsoError {
    EsoError::Unsupported {
        formula: formula.as_str(),
        reason: format!("not applicable to `{}` samplings", spec.kind_name()),
    }
}

/// Every draw meets every row support in at most one coordinate, so each
/// `P(J_j ∩ Ŝ)` is diagonal.
pub fn rows_hit_at_most_once(data: &DataMatrix, spec: &SamplingSpec) -> bool {
    let supports: Vec<Vec<usize>> = (0..data.m()).map(|j| data.row_support(j)).collect();
    let at_most_once = |set: &[usize]| {
        supports.iter().all(|s| crate::sampling::intersect_sorted(s, set).len() <= 1)
    };
    match &spec.kind {
        SamplingKind::Serial { .. } => true,
        SamplingKind::Graph { members, .. } | SamplingKind::Explicit { members } => {
            members.iter().filter(|m| m.prob > 0.0).all(|m| at_most_once(&m.set))
        }
        SamplingKind::Product { blocks } => {
            let mut block = vec![0usize; spec.n];
            for (b, blk) in blocks.iter().enumerate() {
                for &i in blk {
                    block[i] = b;
                }
            }
            supports.iter().all(|s| s.windows(2).all(|w| block[w[0]] == block[w[1]]))
        }
        _ => spec.cardinality_cap() == Some(1),
    }
}

/// Closed-form `v` per row multiplier `c_j` from the restricted formula of
/// the spec's own kind.
fn kind_formula(data: &DataMatrix, spec: &SamplingSpec, formula_id: FormulaId) -> Result<EsoResult> {
    let p = proper_marginals(data, spec)?;
    let blocks = match &spec.kind {
        SamplingKind::CTauDistributed { partition, .. } => {
            let mut block = vec![0usize; spec.n];
            for (b, blk) in partition.iter().enumerate() {
                for &i in blk {
                    block[i] = b;
                }
            }
            Some(block)
        }
        _ => None,
    };
    let mut mult = Vec::with_capacity(data.m());
    for j in 0..data.m() {
        let row = data.row(j);
        let met = blocks.as_ref().map_or(0, |b| {
            let mut seen: Vec<usize> = row.iter().map(|&(i, _)| b[i]).collect();
            seen.sort_unstable();
            seen.dedup();
            seen.len()
        });
        let (_, c) = restricted_formula(spec, row.len(), met).ok_or_else(|| unsupported(formula_id, spec))?;
        mult.push(c);
    }
    let mut res = EsoResult::new(row_weighted(data, &mult), p, formula_id, 2 * data.nnz() as u64);
    res.row_multipliers = mult;
    Ok(res)
}

/// Compute `v` with a specific formula; `Unsupported` when the formula does
/// not apply to the spec.
pub fn eso_with_formula(data: &DataMatrix, spec: &SamplingSpec, formula: FormulaId) -> Result<EsoResult> {
    match formula {
        FormulaId::Uncoupled => eso_uncoupled(data, spec, None),
        FormulaId::CoupledExact => eso_coupled(data, spec, RestrictedMethod::Exact),
        FormulaId::CoupledFormula => eso_coupled(data, spec, RestrictedMethod::Formula),
        FormulaId::CoupledBound => eso_coupled(data, spec, RestrictedMethod::Bound),
        FormulaId::CoupledPower => {
            eso_coupled(data, spec, RestrictedMethod::Power { iterations: crate::spectral::DEFAULT_POWER_ITERATIONS })
        }
        FormulaId::GenericTau => eso_generic_tau(data, spec),
        FormulaId::Conservative => eso_conservative(data, spec),
        FormulaId::TauNice => match spec.kind {
            SamplingKind::TauNice { .. } => kind_formula(data, spec, formula),
            _ => Err(unsupported(formula, spec)),
        },
        FormulaId::CtauDistributed => match spec.kind {
            SamplingKind::CTauDistributed { .. } => kind_formula(data, spec, formula),
            _ => Err(unsupported(formula, spec)),
        },
        FormulaId::DoublyUniform => match spec.kind {
            SamplingKind::DoublyUniform { .. } => kind_formula(data, spec, formula),
            _ => Err(unsupported(formula, spec)),
        },
        FormulaId::Graph => {
            let is_graph_like = matches!(
                spec.kind,
                SamplingKind::Graph { .. } | SamplingKind::Product { .. } | SamplingKind::Explicit { .. }
            );
            if is_graph_like && rows_hit_at_most_once(data, spec) {
                let p = proper_marginals(data, spec)?;
                Ok(EsoResult::new(scaled_norms(data, 1.0), p, formula, data.nnz() as u64))
            } else {
                Err(EsoError::Unsupported {
                    formula: formula.as_str(),
                    reason: "some draw meets a row support in more than one coordinate".into(),
                })
            }
        }
        FormulaId::Serial => match spec.kind {
            SamplingKind::Serial { .. } => {
                let p = proper_marginals(data, spec)?;
                Ok(EsoResult::new(scaled_norms(data, 1.0), p, formula, data.nnz() as u64))
            }
            _ => Err(unsupported(formula, spec)),
        },
    }
}

/// Closed-form `v` chosen from the sampling kind, without eigen-solves
/// except for product samplings whose blocks split some row.
pub fn eso_specialized(data: &DataMatrix, spec: &SamplingSpec) -> Result<EsoResult> {
    proper_marginals(data, spec)?;
    match &spec.kind {
        SamplingKind::Serial { .. } => eso_with_formula(data, spec, FormulaId::Serial),
        SamplingKind::TauNice { .. } => eso_with_formula(data, spec, FormulaId::TauNice),
        SamplingKind::CTauDistributed { .. } => eso_with_formula(data, spec, FormulaId::CtauDistributed),
        SamplingKind::DoublyUniform { .. } => eso_with_formula(data, spec, FormulaId::DoublyUniform),
        SamplingKind::Graph { .. } | SamplingKind::Explicit { .. } if rows_hit_at_most_once(data, spec) => {
            eso_with_formula(data, spec, FormulaId::Graph)
        }
        SamplingKind::Product { .. } => {
            if rows_hit_at_most_once(data, spec) {
                eso_with_formula(data, spec, FormulaId::Graph)
            } else if data.omega() <= PRODUCT_EXACT_LIMIT {
                eso_coupled(data, spec, RestrictedMethod::Exact)
            } else {
                eso_coupled(data, spec, RestrictedMethod::Bound)
            }
        }
        _ if spec.cardinality_cap().is_some() => eso_generic_tau(data, spec),
        _ => Err(unsupported(FormulaId::GenericTau, spec)),
    }
}

/// `λ_min(Diag(v ∘ p) − P ∘ AᵀA)` with its bottom eigenvector.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Certificate {
    pub margin: f64,
    pub pass: bool,
    /// Bottom eigenvector when the certificate fails.
    pub witness: Option<Vec<f64>>,
    /// `h*ᵀ(Diag(v∘p) − P∘AᵀA)h*` for the bottom eigenvector.
    pub gap: f64,
    pub bottom_vector: Vec<f64>,
}

pub fn certificate_matrix(data: &DataMatrix, prob: &ProbMatrix, v: &[f64]) -> Result<Matrix> {
    let n = data.n();
    if prob.n() != n {
        return Err(EsoError::DimensionMismatch { expected: n, got: prob.n() });
    }
    if v.len() != n {
        return Err(EsoError::DimensionMismatch { expected: n, got: v.len() });
    }
    if n > DENSE_CAP {
        return Err(EsoError::InvalidArgument(format!("certificate limited to n <= {DENSE_CAP}")));
    }
    let pg = prob.matrix.hadamard(&data.gram())?;
    let p = prob.marginals();
    let d: Vec<f64> = v.iter().zip(&p).map(|(a, b)| a * b).collect();
    Matrix::from_diagonal(&d).sub(&pg)
}

/// Certificate against an explicit probability matrix; statistical
/// estimates are refused.
pub fn certificate_with(data: &DataMatrix, prob: &ProbMatrix, v: &[f64]) -> Result<Certificate> {
    if !prob.provenance.is_exact() {
        return Err(EsoError::UnsupportedMethod { method: "monte_carlo", kind: "certificate" });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(EsoError::InvalidArgument("v has non-finite entries".into()));
    }
    let m = certificate_matrix(data, prob, v)?;
    if m.rows() == 0 {
        return Ok(Certificate { margin: 0.0, pass: true, witness: None, gap: 0.0, bottom_vector: Vec::new() });
    }
    let eig = SymmetricEigen::new(&m)?;
    let margin = eig.min();
    let h = eig.vector(0);
    let gap = m.quad_form(&h);
    let pass = margin >= -CERTIFICATE_TOLERANCE;
    Ok(Certificate { margin, pass, witness: if pass { None } else { Some(h.clone()) }, gap, bottom_vector: h })
}

pub fn certificate(data: &DataMatrix, spec: &SamplingSpec, v: &[f64]) -> Result<Certificate> {
    spec.validate()?;
    if spec.n != data.n() {
        return Err(EsoError::DimensionMismatch { expected: data.n(), got: spec.n });
    }
    let prob = ProbMatrix::compute(spec, ProbMethod::Auto)?;
    certificate_with(data, &prob, v)
}

/// Margin `λ_min(Diag(v ∘ p) − P ∘ AᵀA)`; nonnegative certifies ESO(v).
pub fn certify(data: &DataMatrix, spec: &SamplingSpec, v: &[f64]) -> Result<f64> {
    Ok(certificate(data, spec, v)?.margin)
}

/// Formulas applicable to a spec, in dominance order where one exists.
pub fn applicable_formulas(data: &DataMatrix, spec: &SamplingSpec) -> Vec<FormulaId> {
    FormulaId::ALL
        .iter()
        .copied()
        .filter(|f| *f != FormulaId::CoupledPower)
        .filter(|&f| match f {
            FormulaId::Uncoupled | FormulaId::CoupledExact => true,
            FormulaId::CoupledFormula | FormulaId::CoupledBound | FormulaId::GenericTau | FormulaId::Conservative => {
                spec.cardinality_cap().is_some()
            }
            _ => eso_with_formula(data, spec, f).is_ok(),
        })
        .collect()
}
