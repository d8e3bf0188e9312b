//! Largest eigenvalues `λ(M)` and `λ′(M) = λ(D^{-1/2} M D^{-1/2})`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::eigen::SymmetricEigen;
use crate::error::{EsoError, Result};
use crate::matrix::{dot, norm2, Matrix};
use crate::prob_matrix::{exact_submatrix, ProbMatrix, ProbMethod};
use crate::sampling::{SamplingKind, SamplingSpec};
use crate::DENSE_CAP;

pub const DEFAULT_POWER_ITERATIONS: usize = 10;
pub const DEFAULT_SAFEGUARD: f64 = 1.01;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum EigenMethod {
    DenseExact,
    /// `iterations` steps from the normalized all-ones vector; the Rayleigh
    /// quotient is multiplied by `safeguard`.
    PowerMethod { iterations: usize, safeguard: f64 },
}

impl EigenMethod {
    pub fn power() -> Self {
        EigenMethod::PowerMethod { iterations: DEFAULT_POWER_ITERATIONS, safeguard: DEFAULT_SAFEGUARD }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EigenEstimate {
    pub value: f64,
    pub method: EigenMethod,
    /// Dense: `‖Mx − λx‖` of the returned eigenpair. Power: relative change
    /// between the last two Rayleigh quotients.
    pub residual: f64,
}

fn check_symmetric(m: &Matrix) -> Result<()> {
    if !m.is_square() {
        return Err(EsoError::InvalidMatrix(format!("expected a square matrix, got {}x{}", m.rows(), m.cols())));
    }
    if m.has_non_finite() {
        return Err(EsoError::InvalidMatrix("non-finite entry".into()));
    }
    if !m.is_symmetric(1e-10 * m.max_abs().max(1.0)) {
        return Err(EsoError::InvalidMatrix("matrix is not symmetric".into()));
    }
    Ok(())
}

/// Largest eigenvalue of a symmetric matrix.
pub fn lambda_max(m: &Matrix, method: EigenMethod) -> Result<EigenEstimate> {
    check_symmetric(m)?;
    let n = m.rows();
    if n == 0 {
        return Ok(EigenEstimate { value: 0.0, method, residual: 0.0 });
    }
    match method {
        EigenMethod::DenseExact => {
            if n > DENSE_CAP {
                return Err(EsoError::InvalidArgument(format!(
                    "dense eigen-solve limited to n <= {DENSE_CAP}; use the power method"
                )));
            }
            let eig = SymmetricEigen::new(&m.symmetrized())?;
            let top = n - 1;
            Ok(EigenEstimate { value: eig.max(), method, residual: eig.residual(m, top) })
        }
        EigenMethod::PowerMethod { iterations, safeguard } => {
            if !(safeguard.is_finite() && safeguard >= 1.0) {
                return Err(EsoError::InvalidArgument(format!("safeguard {safeguard} must be at least 1")));
            }
            let (value, residual) = power_iteration(m, iterations.max(1));
            Ok(EigenEstimate { value: value * safeguard, method, residual })
        }
    }
}

fn power_iteration(m: &Matrix, iterations: usize) -> (f64, f64) {
    let n = m.rows();
    let mut x = vec![1.0 / libm::sqrt(n as f64); n];
    let mut y = m.mul_vec(&x);
    if norm2(&y) <= 1e-300 {
        // Deterministic perturbation when the all-ones vector is in the kernel.
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = 1.0 + ((i * 7919) % 97) as f64 / 97.0;
        }
        let s = norm2(&x);
        x.iter_mut().for_each(|v| *v /= s);
        y = m.mul_vec(&x);
    }
    let mut prev = dot(&x, &y);
    let mut current = prev;
    for _ in 0..iterations {
        let s = norm2(&y);
        if s <= 1e-300 {
            return (0.0, 0.0);
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / s;
        }
        y = m.mul_vec(&x);
        prev = current;
        current = dot(&x, &y);
    }
    let residual = libm::fabs(current - prev) / libm::fabs(current).max(1e-300);
    (current, residual)
}

/// Indices with positive diagonal, after checking that zero-diagonal rows
/// vanish as PSD matrices must.
fn support(m: &Matrix) -> Result<Vec<usize>> {
    let n = m.rows();
    let mut keep = Vec::new();
    for i in 0..n {
        let d = m[(i, i)];
        if d < 0.0 {
            return Err(EsoError::InvalidMatrix(format!("negative diagonal entry at {i}")));
        }
        if d == 0.0 {
            if (0..n).any(|j| m[(i, j)] != 0.0) {
                return Err(EsoError::InvalidMatrix(format!(
                    "row {i} has a zero diagonal but nonzero off-diagonal entries; matrix is not PSD"
                )));
            }
        } else {
            keep.push(i);
        }
    }
    Ok(keep)
}

/// `D^{-1/2} M D^{-1/2}` on the support of the diagonal.
pub fn normalized(m: &Matrix) -> Result<Matrix> {
    check_symmetric(m)?;
    let keep = support(m)?;
    let sub = m.principal(&keep);
    let d: Vec<f64> = sub.diagonal().iter().map(|&x| 1.0 / libm::sqrt(x)).collect();
    Ok(Matrix::from_fn(keep.len(), keep.len(), |i, j| d[i] * sub[(i, j)] * d[j]))
}

/// `λ′(M)`; zero for the zero matrix.
pub fn lambda_prime(m: &Matrix, method: EigenMethod) -> Result<EigenEstimate> {
    lambda_max(&normalized(m)?, method)
}

/// `max(|λ_2|, |λ_min|) / λ_1` of the normalized matrix; governs power
/// method convergence.
pub fn eigen_gap_ratio(m: &Matrix) -> Result<f64> {
    let nm = normalized(m)?;
    if nm.rows() < 2 {
        return Ok(0.0);
    }
    let eig = SymmetricEigen::new(&nm)?;
    let k = eig.values.len();
    let top = eig.values[k - 1];
    if top <= 0.0 {
        return Ok(0.0);
    }
    Ok(libm::fabs(eig.values[k - 2]).max(libm::fabs(eig.values[0])) / top)
}

/// Spectral quantities of `P(Ŝ)` with their two-sided bounds.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BoundsReport {
    pub n: usize,
    pub first_moment: f64,
    pub second_moment: f64,
    pub cap: Option<usize>,
    pub lambda: f64,
    pub lambda_prime: f64,
    pub lambda_prime_lower: f64,
    pub lambda_prime_upper: Option<f64>,
    pub lambda_lower: f64,
    pub lambda_upper: f64,
    /// `(n / E|Ŝ|)·λ` when all marginals are equal.
    pub uniform_prediction: Option<f64>,
}

impl BoundsReport {
    /// Names of violated inequalities at tolerance `tol` (relative to scale).
    pub fn violations(&self, tol: f64) -> Vec<&'static str> {
        let slack = |x: f64| tol * x.abs().max(1.0);
        let mut v = Vec::new();
        if self.lambda_prime < self.lambda_prime_lower - slack(self.lambda_prime_lower) {
            v.push("lambda_prime_lower");
        }
        if let Some(u) = self.lambda_prime_upper {
            if self.lambda_prime > u + slack(u) {
                v.push("lambda_prime_upper");
            }
        }
        if self.lambda < self.lambda_lower - slack(self.lambda_lower) {
            v.push("lambda_lower");
        }
        if self.lambda > self.lambda_upper + slack(self.lambda_upper) {
            v.push("lambda_upper");
        }
        if let Some(u) = self.uniform_prediction {
            if libm::fabs(self.lambda_prime - u) > slack(u) {
                v.push("uniform_identity");
            }
        }
        v
    }
}

pub fn lambda_bounds(spec: &SamplingSpec) -> Result<BoundsReport> {
    let p = ProbMatrix::compute(spec, ProbMethod::Auto)?.matrix;
    let n = spec.n;
    let (e1, e2) = spec.cardinality_moments();
    let cap = spec.cardinality_cap();
    let lambda = lambda_max(&p, EigenMethod::DenseExact)?.value;
    let lp = lambda_prime(&p, EigenMethod::DenseExact)?.value;
    let nf = n as f64;
    let lambda_upper = match cap {
        Some(t) if spec.is_certified_uniform() => e1 * t as f64 / nf,
        _ => e1,
    };
    let marg = p.diagonal();
    let uniform = e1 > 0.0 && marg.iter().all(|&x| libm::fabs(x - marg[0]) <= 1e-12);
    Ok(BoundsReport {
        n,
        first_moment: e1,
        second_moment: e2,
        cap,
        lambda,
        lambda_prime: lp,
        lambda_prime_lower: if e1 > 0.0 { e2 / e1 } else { 0.0 },
        lambda_prime_upper: cap.map(|t| t as f64),
        lambda_lower: e2 / nf,
        lambda_upper,
        uniform_prediction: if uniform { Some(nf / e1 * lambda) } else { None },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum RestrictedMethod {
    /// Dense eigen-solve of `P[J, J]`.
    Exact,
    /// Closed form or bound specific to the sampling kind.
    Formula,
    /// Smallest of every applicable formula.
    Bound,
    Power { iterations: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum BoundSource {
    Exact,
    TauNiceFormula,
    CTauBound,
    DoublyUniformBound,
    GenericCap,
    PowerMethod,
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RestrictedEigen {
    pub value: f64,
    pub source: BoundSource,
    pub candidates: Vec<(BoundSource, f64)>,
}

/// Kind-specific value of `λ′(J ∩ Ŝ)`, given `|J|` and the number of
/// partition blocks `J` meets (used by the distributed formula).
pub fn restricted_formula(spec: &SamplingSpec, j_len: usize, blocks_met: usize) -> Option<(BoundSource, f64)> {
    if j_len == 0 {
        return Some((BoundSource::Empty, 0.0));
    }
    let n = spec.n;
    let jm1 = (j_len - 1) as f64;
    match &spec.kind {
        SamplingKind::TauNice { tau } if *tau > 0 => {
            let t = *tau as f64;
            Some((BoundSource::TauNiceFormula, 1.0 + jm1 * (t - 1.0) / (n.max(2) - 1) as f64))
        }
        SamplingKind::CTauDistributed { partition, tau } if *tau > 0 => {
            let s = partition[0].len() as f64;
            let s1 = (s - 1.0).max(1.0);
            let t = *tau as f64;
            let w = blocks_met.max(1) as f64;
            let value = 1.0 + jm1 * (t - 1.0) / s1 + j_len as f64 * (t / s - (t - 1.0) / s1) * (w - 1.0) / w;
            Some((BoundSource::CTauBound, value))
        }
        SamplingKind::DoublyUniform { q } => {
            let e1 = crate::sampling::expected_size(q);
            if e1 <= 0.0 {
                return None;
            }
            let e2: f64 = q.iter().enumerate().map(|(c, &qc)| qc * (c * c) as f64).sum();
            Some((BoundSource::DoublyUniformBound, 1.0 + jm1 * (e2 / e1 - 1.0) / (n.max(2) - 1) as f64))
        }
        _ => None,
    }
}

/// `min(|J|, τ)` when a cardinality cap is known.
pub fn generic_cap(spec: &SamplingSpec, j_len: usize) -> Option<f64> {
    spec.cardinality_cap().map(|t| t.min(j_len) as f64)
}

fn blocks_met(spec: &SamplingSpec, set: &[usize]) -> usize {
    match &spec.kind {
        SamplingKind::CTauDistributed { partition, .. } | SamplingKind::Product { blocks: partition } => {
            partition.iter().filter(|b| b.iter().any(|i| set.binary_search(i).is_ok())).count()
        }
        _ => 0,
    }
}

/// `λ′(P(J ∩ Ŝ))` for a sorted index set `J`.
pub fn lambda_prime_restricted(spec: &SamplingSpec, set: &[usize], method: RestrictedMethod) -> Result<RestrictedEigen> {
    spec.validate()?;
    if let Some(&i) = set.iter().find(|&&i| i >= spec.n) {
        return Err(EsoError::DimensionMismatch { expected: spec.n, got: i + 1 });
    }
    if set.is_empty() || spec.is_nil() {
        return Ok(RestrictedEigen { value: 0.0, source: BoundSource::Empty, candidates: vec![(BoundSource::Empty, 0.0)] });
    }
    let single = |source: BoundSource, value: f64| RestrictedEigen { value, source, candidates: vec![(source, value)] };
    match method {
        RestrictedMethod::Exact => {
            let p = exact_submatrix(spec, set);
            Ok(single(BoundSource::Exact, lambda_prime(&p, EigenMethod::DenseExact)?.value))
        }
        RestrictedMethod::Power { iterations } => {
            let p = exact_submatrix(spec, set);
            let est = lambda_prime(&p, EigenMethod::PowerMethod { iterations, safeguard: DEFAULT_SAFEGUARD })?;
            let cap = generic_cap(spec, set.len()).unwrap_or(set.len() as f64);
            Ok(single(BoundSource::PowerMethod, est.value.min(cap)))
        }
        RestrictedMethod::Formula => {
            let formula = restricted_formula(spec, set.len(), blocks_met(spec, set))
                .or_else(|| generic_cap(spec, set.len()).map(|v| (BoundSource::GenericCap, v)));
            match formula {
                Some((source, value)) => Ok(single(source, value)),
                None => Err(EsoError::Unsupported {
                    formula: "restricted_formula",
                    reason: format!("no closed form for `{}` samplings without a cardinality cap", spec.kind_name()),
                }),
            }
        }
        RestrictedMethod::Bound => {
            let mut candidates = Vec::new();
            if let Some(c) = restricted_formula(spec, set.len(), blocks_met(spec, set)) {
                candidates.push(c);
            }
            candidates.push((BoundSource::GenericCap, generic_cap(spec, set.len()).unwrap_or(set.len() as f64)));
            let (source, value) = candidates
                .iter()
                .copied()
                .fold((BoundSource::GenericCap, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best });
            Ok(RestrictedEigen { value, source, candidates })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_prime_of_zero_and_diagonal() {
        assert_eq!(lambda_prime(&Matrix::zeros(3, 3), EigenMethod::DenseExact).unwrap().value, 0.0);
        let d = Matrix::from_diagonal(&[2.0, 5.0, 0.0]);
        assert!((lambda_prime(&d, EigenMethod::DenseExact).unwrap().value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn lambda_prime_of_all_ones_is_n() {
        let e = Matrix::from_fn(4, 4, |_, _| 3.0);
        assert!((lambda_prime(&e, EigenMethod::DenseExact).unwrap().value - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid_psd_diagonal() {
        let m = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(lambda_prime(&m, EigenMethod::DenseExact), Err(EsoError::InvalidMatrix(_))));
        let asym = Matrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap();
        assert!(lambda_max(&asym, EigenMethod::DenseExact).is_err());
    }

    #[test]
    fn power_method_overestimates_slightly() {
        let m = Matrix::from_rows(&[vec![2.0, 1.0, 0.0], vec![1.0, 2.0, 1.0], vec![0.0, 1.0, 2.0]]).unwrap();
        let exact = lambda_max(&m, EigenMethod::DenseExact).unwrap().value;
        let est = lambda_max(&m, EigenMethod::PowerMethod { iterations: 50, safeguard: 1.01 }).unwrap().value;
        assert!(est >= exact && est <= 1.0101 * exact);
    }

    #[test]
    fn power_method_handles_kernel_start() {
        let m = Matrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        let est = lambda_max(&m, EigenMethod::PowerMethod { iterations: 10, safeguard: 1.0 }).unwrap().value;
        assert!((est - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tau_nice_restricted_formula_matches_exact() {
        let s = SamplingSpec::tau_nice(6, 3);
        for set in [vec![0], vec![1, 4], vec![0, 2, 3, 5], (0..6).collect()] {
            let exact = lambda_prime_restricted(&s, &set, RestrictedMethod::Exact).unwrap().value;
            let formula = lambda_prime_restricted(&s, &set, RestrictedMethod::Formula).unwrap().value;
            assert!((exact - formula).abs() < 1e-10 * formula, "{set:?}");
        }
    }

    #[test]
    fn ctau_bound_dominates_exact() {
        let s = SamplingSpec::ctau_distributed(vec![vec![0, 1, 2], vec![3, 4, 5], vec![6, 7, 8]], 2);
        for set in [vec![0, 1], vec![0, 3], vec![0, 1, 3, 6], (0..9).collect()] {
            let exact = lambda_prime_restricted(&s, &set, RestrictedMethod::Exact).unwrap().value;
            let bound = lambda_prime_restricted(&s, &set, RestrictedMethod::Bound).unwrap().value;
            assert!(exact <= bound + 1e-10, "{set:?}: {exact} > {bound}");
        }
        // Whole ground set: the bound equals cτ.
        let all: Vec<usize> = (0..9).collect();
        let f = lambda_prime_restricted(&s, &all, RestrictedMethod::Formula).unwrap().value;
        assert!((f - 6.0).abs() < 1e-12);
    }

    #[test]
    fn bounds_sandwich_tau_nice() {
        let rep = lambda_bounds(&SamplingSpec::tau_nice(5, 2)).unwrap();
        assert!(rep.violations(1e-9).is_empty(), "{rep:?}");
        // Fixed cardinality: λ′ = τ.
        assert!((rep.lambda_prime - 2.0).abs() < 1e-12);
    }
}
