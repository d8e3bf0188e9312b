//! The probability matrix `P(Ŝ)` with `P_ij = Prob({i, j} ⊆ Ŝ)`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::eigen::SymmetricEigen;
use crate::error::{EsoError, Result};
use crate::matrix::Matrix;
use crate::rng::stream_rng;
use crate::sampling::{expected_size, Distribution, SamplingKind, SamplingSpec};
use crate::DEFAULT_ENUMERATION_CAP;

/// How the entries of a [`ProbMatrix`] were obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Provenance {
    ClosedForm,
    Enumerated,
    MonteCarlo { samples: usize, max_stderr: f64 },
}

impl Provenance {
    pub fn tag(&self) -> &'static str {
        match self {
            Provenance::ClosedForm => "closed_form",
            Provenance::Enumerated => "enumerated",
            Provenance::MonteCarlo { .. } => "monte_carlo",
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, Provenance::MonteCarlo { .. })
    }

    fn worst(self, other: Self) -> Self {
        match (self, other) {
            (Provenance::ClosedForm, o) | (o, Provenance::ClosedForm) => o,
            _ => Provenance::Enumerated,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ProbMethod {
    /// Closed forms composed through convex combination, intersection and
    /// restriction; explicit laws are summed directly. Always exact.
    #[default]
    Auto,
    /// Only for the six structured base kinds.
    ClosedForm,
    /// Sum over the enumerated support.
    Enumerate,
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbMatrix {
    pub matrix: Matrix,
    pub provenance: Provenance,
    /// Entrywise standard errors, Monte-Carlo only.
    pub stderr: Option<Matrix>,
}

impl ProbMatrix {
    pub fn compute(spec: &SamplingSpec, method: ProbMethod) -> Result<Self> {
        spec.validate()?;
        let all: Vec<usize> = (0..spec.n).collect();
        match method {
            ProbMethod::Auto => Ok(Self::exact(exact_submatrix(spec, &all), provenance_of(spec))),
            ProbMethod::ClosedForm => {
                if !is_base_kind(spec) {
                    return Err(EsoError::UnsupportedMethod { method: "closed_form", kind: spec.kind_name() });
                }
                Ok(Self::exact(exact_submatrix(spec, &all), Provenance::ClosedForm))
            }
            ProbMethod::Enumerate => {
                let dist = spec.enumerate_with_cap(DEFAULT_ENUMERATION_CAP)?;
                Ok(Self::exact(from_distribution(&dist), Provenance::Enumerated))
            }
            ProbMethod::MonteCarlo { samples, seed } => monte_carlo(spec, samples, seed),
        }
    }

    /// Validate a user-supplied matrix as a probability matrix.
    pub fn from_matrix(matrix: Matrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(EsoError::InvalidMatrix("probability matrix must be square".into()));
        }
        if matrix.has_non_finite() {
            return Err(EsoError::InvalidMatrix("non-finite entry".into()));
        }
        if !matrix.is_symmetric(1e-12) {
            return Err(EsoError::InvalidMatrix("probability matrix must be symmetric".into()));
        }
        let n = matrix.rows();
        for i in 0..n {
            for j in 0..n {
                let v = matrix[(i, j)];
                if !(-1e-12..=1.0 + 1e-12).contains(&v) {
                    return Err(EsoError::InvalidMatrix(format!("entry ({i}, {j}) = {v} is not a probability")));
                }
                if v > matrix[(i, i)].min(matrix[(j, j)]) + 1e-12 {
                    return Err(EsoError::InvalidMatrix(format!("entry ({i}, {j}) exceeds a diagonal entry")));
                }
            }
        }
        Ok(Self::exact(matrix, Provenance::Enumerated))
    }

    fn exact(matrix: Matrix, provenance: Provenance) -> Self {
        Self { matrix, provenance, stderr: None }
    }

    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    /// `p_i = P_ii`.
    pub fn marginals(&self) -> Vec<f64> {
        self.matrix.diagonal()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(SymmetricEigen::new(&self.matrix)?.min())
    }

    /// `Σ_t w_t P_t`.
    pub fn combine_convex(parts: &[(f64, &ProbMatrix)]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| EsoError::InvalidArgument("no components".into()))?;
        let n = first.1.n();
        let mut m = Matrix::zeros(n, n);
        let mut prov = Provenance::ClosedForm;
        for (w, p) in parts {
            m.add_scaled(&p.matrix, *w)?;
            prov = prov.worst(p.provenance);
        }
        Ok(Self::exact(m, prov))
    }

    /// Probability matrix of the intersection of two independent samplings.
    pub fn intersect(&self, other: &ProbMatrix) -> Result<Self> {
        Ok(Self::exact(self.matrix.hadamard(&other.matrix)?, self.provenance.worst(other.provenance)))
    }

    /// Probability matrix of `J ∩ Ŝ`.
    pub fn restrict(&self, set: &[usize]) -> Result<Self> {
        let n = self.n();
        let mut keep = vec![false; n];
        for &j in set {
            if j >= n {
                return Err(EsoError::DimensionMismatch { expected: n, got: j + 1 });
            }
            keep[j] = true;
        }
        Ok(Self::exact(self.matrix.masked(&keep), self.provenance))
    }
}

fn is_base_kind(spec: &SamplingSpec) -> bool {
    matches!(
        spec.kind,
        SamplingKind::Elementary { .. }
            | SamplingKind::Serial { .. }
            | SamplingKind::TauNice { .. }
            | SamplingKind::CTauDistributed { .. }
            | SamplingKind::DoublyUniform { .. }
            | SamplingKind::Product { .. }
    )
}

fn provenance_of(spec: &SamplingSpec) -> Provenance {
    match &spec.kind {
        SamplingKind::Graph { .. } | SamplingKind::Explicit { .. } => Provenance::Enumerated,
        SamplingKind::ConvexCombination { components } => {
            components.iter().fold(Provenance::ClosedForm, |acc, (_, c)| acc.worst(provenance_of(c)))
        }
        SamplingKind::Intersection { first, second } => provenance_of(first).worst(provenance_of(second)),
        SamplingKind::Restriction { inner, .. } => provenance_of(inner),
        _ => Provenance::ClosedForm,
    }
}

/// `P` from an explicit law: `Σ_S Prob(S) 1_S 1_Sᵀ`.
pub fn from_distribution(dist: &Distribution) -> Matrix {
    let mut m = Matrix::zeros(dist.n, dist.n);
    for a in &dist.atoms {
        for &i in &a.set {
            for &j in &a.set {
                m[(i, j)] += a.prob;
            }
        }
    }
    m
}

/// Exact principal submatrix `P[idx, idx]` of a valid spec, computed without
/// enumeration.
pub(crate) fn exact_submatrix(spec: &SamplingSpec, idx: &[usize]) -> Matrix {
    let n = spec.n;
    let k = idx.len();
    match &spec.kind {
        SamplingKind::Elementary { set } => {
            let inside = membership(n, set);
            Matrix::from_fn(k, k, |a, b| if inside[idx[a]] && inside[idx[b]] { 1.0 } else { 0.0 })
        }
        SamplingKind::Serial { q } => Matrix::from_fn(k, k, |a, b| if idx[a] == idx[b] { q[idx[a]] } else { 0.0 }),
        SamplingKind::TauNice { tau } => {
            let t = *tau as f64;
            let nf = n as f64;
            let off = if n > 1 { t * (t - 1.0) / (nf * (nf - 1.0)) } else { 0.0 };
            Matrix::from_fn(k, k, |a, b| if idx[a] == idx[b] { t / nf } else { off })
        }
        SamplingKind::CTauDistributed { partition, tau } => {
            let block = block_of(n, partition);
            let s = partition[0].len() as f64;
            let t = *tau as f64;
            let same = if s > 1.0 { t * (t - 1.0) / (s * (s - 1.0)) } else { 0.0 };
            Matrix::from_fn(k, k, |a, b| {
                let (i, j) = (idx[a], idx[b]);
                if i == j {
                    t / s
                } else if block[i] == block[j] {
                    same
                } else {
                    t * t / (s * s)
                }
            })
        }
        SamplingKind::DoublyUniform { q } => {
            let nf = n as f64;
            let e1 = expected_size(q);
            let e2: f64 = q.iter().enumerate().map(|(c, &qc)| qc * (c * c) as f64).sum();
            let off = if n > 1 { (e2 - e1) / (nf * (nf - 1.0)) } else { 0.0 };
            Matrix::from_fn(k, k, |a, b| if idx[a] == idx[b] { e1 / nf } else { off })
        }
        SamplingKind::Product { blocks } => {
            let block = block_of(n, blocks);
            let size: Vec<f64> = blocks.iter().map(|b| b.len() as f64).collect();
            Matrix::from_fn(k, k, |a, b| {
                let (i, j) = (idx[a], idx[b]);
                if i == j {
                    1.0 / size[block[i]]
                } else if block[i] == block[j] {
                    0.0
                } else {
                    1.0 / (size[block[i]] * size[block[j]])
                }
            })
        }
        SamplingKind::Graph { members, .. } | SamplingKind::Explicit { members } => {
            let mut local = vec![usize::MAX; n];
            for (a, &i) in idx.iter().enumerate() {
                local[i] = a;
            }
            let mut m = Matrix::zeros(k, k);
            let mut hit = Vec::new();
            for mem in members {
                hit.clear();
                hit.extend(mem.set.iter().map(|&i| local[i]).filter(|&a| a != usize::MAX));
                for &a in &hit {
                    for &b in &hit {
                        m[(a, b)] += mem.prob;
                    }
                }
            }
            m
        }
        SamplingKind::ConvexCombination { components } => {
            let mut m = Matrix::zeros(k, k);
            for (w, c) in components {
                m.add_scaled(&exact_submatrix(c, idx), *w).expect("component shapes agree");
            }
            m
        }
        SamplingKind::Intersection { first, second } => exact_submatrix(first, idx)
            .hadamard(&exact_submatrix(second, idx))
            .expect("component shapes agree"),
        SamplingKind::Restriction { inner, set } => {
            let inside = membership(n, set);
            let keep: Vec<bool> = idx.iter().map(|&i| inside[i]).collect();
            exact_submatrix(inner, idx).masked(&keep)
        }
    }
}

/// Exact `P[idx, idx]` for a spec, validated.
pub fn prob_submatrix(spec: &SamplingSpec, idx: &[usize]) -> Result<Matrix> {
    spec.validate()?;
    if let Some(&i) = idx.iter().find(|&&i| i >= spec.n) {
        return Err(EsoError::DimensionMismatch { expected: spec.n, got: i + 1 });
    }
    Ok(exact_submatrix(spec, idx))
}

fn membership(n: usize, set: &[usize]) -> Vec<bool> {
    let mut v = vec![false; n];
    for &i in set {
        v[i] = true;
    }
    v
}

fn block_of(n: usize, blocks: &[Vec<usize>]) -> Vec<usize> {
    let mut v = vec![0; n];
    for (b, block) in blocks.iter().enumerate() {
        for &i in block {
            v[i] = b;
        }
    }
    v
}

fn monte_carlo(spec: &SamplingSpec, samples: usize, seed: u64) -> Result<ProbMatrix> {
    if samples == 0 {
        return Err(EsoError::InvalidArgument("Monte-Carlo estimation needs at least one sample".into()));
    }
    let n = spec.n;
    let mut counts = Matrix::zeros(n, n);
    let mut rng = stream_rng(seed, 0);
    for _ in 0..samples {
        let s = spec.draw(&mut rng);
        for &i in &s {
            for &j in &s {
                counts[(i, j)] += 1.0;
            }
        }
    }
    let m = counts.scaled(1.0 / samples as f64);
    let nf = samples as f64;
    let stderr = Matrix::from_fn(n, n, |i, j| {
        let p = m[(i, j)];
        libm::sqrt(p * (1.0 - p) / nf)
    });
    let max_stderr = stderr.max_abs();
    Ok(ProbMatrix { matrix: m, provenance: Provenance::MonteCarlo { samples, max_stderr }, stderr: Some(stderr) })
}

/// One line of an identity check: a quantity computed from `P` against the
/// same quantity as an expectation over `Ŝ`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct IdentityCheck {
    pub name: &'static str,
    pub from_matrix: f64,
    pub expectation: f64,
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct IdentityReport {
    /// Expectations are exact (enumeration) rather than sample means.
    pub exact: bool,
    pub samples: usize,
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn max_discrepancy(&self) -> f64 {
        self.checks.iter().map(|c| c.discrepancy).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityOptions {
    pub cap: usize,
    /// Draws used when the support is too large to enumerate.
    pub samples: usize,
    pub seed: u64,
}

impl Default for IdentityOptions {
    fn default() -> Self {
        Self { cap: DEFAULT_ENUMERATION_CAP, samples: 100_000, seed: 0 }
    }
}

pub const IDENTITY_NAMES: [&str; 6] =
    ["hadamard_submatrix", "hadamard_quadratic", "sum_squared", "linear", "second_moment", "first_moment"];

/// Check the six identities linking `P` to expectations over `Ŝ` for one
/// pair `(M, h)`.
pub fn check_identities(spec: &SamplingSpec, m: &Matrix, h: &[f64], opts: IdentityOptions) -> Result<IdentityReport> {
    spec.validate()?;
    let n = spec.n;
    if m.rows() != n || m.cols() != n {
        return Err(EsoError::DimensionMismatch { expected: n, got: m.rows() });
    }
    if h.len() != n {
        return Err(EsoError::DimensionMismatch { expected: n, got: h.len() });
    }
    let p = ProbMatrix::compute(spec, ProbMethod::Auto)?.matrix;
    let pm = p.hadamard(m)?;
    let ones = vec![1.0; n];
    let lhs = [
        0.0,
        pm.quad_form(h),
        p.quad_form(h),
        p.diagonal().iter().zip(h).map(|(a, b)| a * b).sum(),
        p.quad_form(&ones),
        p.trace(),
    ];

    let mut sub = Matrix::zeros(n, n);
    let mut rhs = [0.0; 6];
    let mut accumulate = |set: &[usize], w: f64| {
        for &i in set {
            for &j in set {
                sub[(i, j)] += w * m[(i, j)];
            }
        }
        let mut quad = 0.0;
        for &i in set {
            for &j in set {
                quad += h[i] * m[(i, j)] * h[j];
            }
        }
        let lin: f64 = set.iter().map(|&i| h[i]).sum();
        let c = set.len() as f64;
        rhs[1] += w * quad;
        rhs[2] += w * lin * lin;
        rhs[3] += w * lin;
        rhs[4] += w * c * c;
        rhs[5] += w * c;
    };

    let (exact, samples) = if spec.is_enumerable(opts.cap) {
        let dist = spec.enumerate_with_cap(opts.cap)?;
        for a in &dist.atoms {
            accumulate(&a.set, a.prob);
        }
        (true, 0)
    } else {
        if opts.samples < 1000 {
            return Err(EsoError::InvalidArgument(String::from(
                "support too large to enumerate; at least 1000 Monte-Carlo draws are required",
            )));
        }
        let mut rng = stream_rng(opts.seed, 0);
        let w = 1.0 / opts.samples as f64;
        for _ in 0..opts.samples {
            let s = spec.draw(&mut rng);
            accumulate(&s, w);
        }
        (false, opts.samples)
    };

    let mut checks = Vec::with_capacity(6);
    checks.push(IdentityCheck {
        name: IDENTITY_NAMES[0],
        from_matrix: pm.sum(),
        expectation: sub.sum(),
        discrepancy: pm.max_abs_diff(&sub),
    });
    for k in 1..6 {
        checks.push(IdentityCheck {
            name: IDENTITY_NAMES[k],
            from_matrix: lhs[k],
            expectation: rhs[k],
            discrepancy: libm::fabs(lhs[k] - rhs[k]),
        });
    }
    Ok(IdentityReport { exact, samples, checks })
}
