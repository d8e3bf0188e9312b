//! Direct checks of the ESO inequality for `f(x) = ½‖Ax‖²`, exhaustive or
//! by simulation, plus a battery of structural identities.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::DataMatrix;
use crate::error::{EsoError, Result};
use crate::eso::{certificate, Certificate};
use crate::fixtures::{random_spec, random_symmetric, random_unit_vector, random_vector};
use crate::prob_matrix::{check_identities, from_distribution, IdentityOptions, ProbMatrix, ProbMethod, IDENTITY_NAMES};
use crate::rng::stream_rng;
use crate::sampling::{Distribution, SamplingKind, SamplingSpec};
use crate::DEFAULT_ENUMERATION_CAP;

/// Exhaustive checks pass when `slack ≥ -EXHAUSTIVE_TOLERANCE`.
pub const EXHAUSTIVE_TOLERANCE: f64 = 1e-10;

/// Draws per Monte-Carlo chunk; chunk `c` uses RNG stream `c`.
pub const CHUNK_LEN: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum CheckMode {
    Exhaustive,
    MonteCarlo { trials: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PointCheck {
    pub lhs_mean: f64,
    pub lhs_stderr: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EsoCheckReport {
    pub mode: CheckMode,
    pub trials: usize,
    /// Values at the point with the smallest normalized slack.
    pub lhs_mean: f64,
    pub lhs_stderr: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
    pub points_tested: usize,
    pub worst_point: usize,
    pub points: Vec<PointCheck>,
}

/// Test points `(x, h)`: `x ∈ {0, e, random unit}` crossed with
/// `h ∈ {e_i, e, random unit, bottom eigenvector of the certificate}`.
pub fn canonical_points(data: &DataMatrix, spec: &SamplingSpec, v: &[f64], seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let n = data.n();
    let mut rng = stream_rng(seed, u64::MAX);
    let xs = [vec![0.0; n], vec![1.0; n], random_unit_vector(&mut rng, n)];
    let mut hs: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();
    hs.push(vec![1.0; n]);
    hs.push(random_unit_vector(&mut rng, n));
    if let Ok(cert) = certificate(data, spec, v) {
        if !cert.bottom_vector.is_empty() {
            hs.push(cert.bottom_vector);
        }
    }
    let mut points = Vec::with_capacity(xs.len() * hs.len());
    for x in &xs {
        for h in &hs {
            points.push((x.clone(), h.clone()));
        }
    }
    points
}

struct Prepared {
    /// `f(x)` per point.
    fx: Vec<f64>,
    /// `∇f(x) = AᵀAx` per point.
    grad: Vec<Vec<f64>>,
    h: Vec<Vec<f64>>,
    rhs: Vec<f64>,
}

/// First and second moments of the per-draw left-hand side, per point.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub weight: f64,
    pub count: usize,
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
}

impl Moments {
    fn zeros(k: usize) -> Self {
        Self { weight: 0.0, count: 0, sum: vec![0.0; k], sum_sq: vec![0.0; k] }
    }

    /// Add another chunk; merging in chunk order keeps results independent of
    /// how chunks were scheduled.
    pub fn merge(&mut self, other: &Moments) {
        self.weight += other.weight;
        self.count += other.count;
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            *a += b;
        }
    }
}

/// Reusable evaluation state for one `(A, Ŝ, v, points)` check.
pub struct EsoCheck<'a> {
    data: &'a DataMatrix,
    spec: &'a SamplingSpec,
    prep: Prepared,
    scratch: Vec<f64>,
    touched: Vec<usize>,
    flag: Vec<bool>,
}

impl<'a> EsoCheck<'a> {
    pub fn new(data: &'a DataMatrix, spec: &'a SamplingSpec, v: &[f64], points: &[(Vec<f64>, Vec<f64>)]) -> Result<Self> {
        spec.validate()?;
        let n = data.n();
        if spec.n != n {
            return Err(EsoError::DimensionMismatch { expected: n, got: spec.n });
        }
        if v.len() != n {
            return Err(EsoError::DimensionMismatch { expected: n, got: v.len() });
        }
        if v.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
            return Err(EsoError::InvalidArgument("v must be positive and finite".into()));
        }
        let p = spec.marginals();
        let mut prep = Prepared { fx: Vec::new(), grad: Vec::new(), h: Vec::new(), rhs: Vec::new() };
        for (x, h) in points {
            if x.len() != n || h.len() != n {
                return Err(EsoError::DimensionMismatch { expected: n, got: x.len().min(h.len()) });
            }
            if x.iter().chain(h).any(|a| !a.is_finite()) {
                return Err(EsoError::InvalidArgument("test points must be finite".into()));
            }
            let r = data.mul_vec(x);
            let fx = 0.5 * r.iter().map(|a| a * a).sum::<f64>();
            let g = data.tmul_vec(&r);
            let rhs = fx
                + (0..n).map(|i| p[i] * g[i] * h[i]).sum::<f64>()
                + 0.5 * (0..n).map(|i| p[i] * v[i] * h[i] * h[i]).sum::<f64>();
            prep.fx.push(fx);
            prep.grad.push(g);
            prep.h.push(h.clone());
            prep.rhs.push(rhs);
        }
        let m = data.m();
        Ok(Self { data, spec, prep, scratch: vec![0.0; m], touched: Vec::new(), flag: vec![false; m] })
    }

    pub fn points(&self) -> usize {
        self.prep.rhs.len()
    }

    /// `f(x + h_[S])` for point `k`.
    fn value(&mut self, k: usize, set: &[usize]) -> f64 {
        let h = &self.prep.h[k];
        let g = &self.prep.grad[k];
        let mut linear = 0.0;
        for &i in set {
            linear += g[i] * h[i];
            for &(j, a) in self.data.col(i) {
                if !self.flag[j] {
                    self.flag[j] = true;
                    self.touched.push(j);
                }
                self.scratch[j] += a * h[i];
            }
        }
        let mut quad = 0.0;
        for &j in &self.touched {
            quad += self.scratch[j] * self.scratch[j];
            self.scratch[j] = 0.0;
            self.flag[j] = false;
        }
        self.touched.clear();
        self.prep.fx[k] + linear + 0.5 * quad
    }

    fn add_draw(&mut self, acc: &mut Moments, set: &[usize], w: f64) {
        for k in 0..self.points() {
            let val = self.value(k, set);
            acc.sum[k] += w * val;
            acc.sum_sq[k] += w * val * val;
        }
        acc.weight += w;
        acc.count += 1;
    }

    pub fn exact(&mut self, dist: &Distribution) -> Moments {
        let mut acc = Moments::zeros(self.points());
        for a in &dist.atoms {
            self.add_draw(&mut acc, &a.set, a.prob);
        }
        acc
    }

    /// Draws `[chunk·CHUNK_LEN, min((chunk+1)·CHUNK_LEN, trials))` from stream `chunk`.
    pub fn chunk(&mut self, seed: u64, chunk: usize, trials: usize) -> Moments {
        let mut acc = Moments::zeros(self.points());
        let start = chunk * CHUNK_LEN;
        let len = trials.saturating_sub(start).min(CHUNK_LEN);
        let mut rng = stream_rng(seed, chunk as u64);
        for _ in 0..len {
            let s = self.spec.draw(&mut rng);
            self.add_draw(&mut acc, &s, 1.0);
        }
        acc
    }

    pub fn report(&self, mode: CheckMode, acc: &Moments) -> EsoCheckReport {
        let exhaustive = matches!(mode, CheckMode::Exhaustive);
        let mut points = Vec::with_capacity(self.points());
        for k in 0..self.points() {
            let rhs = self.prep.rhs[k];
            let (mean, stderr) = if exhaustive {
                (acc.sum[k], 0.0)
            } else {
                let nn = acc.count as f64;
                let mean = acc.sum[k] / nn;
                let var = (acc.sum_sq[k] / nn - mean * mean).max(0.0) * nn / (nn - 1.0).max(1.0);
                (mean, libm::sqrt(var / nn))
            };
            let slack = rhs - mean;
            let tol = if exhaustive {
                EXHAUSTIVE_TOLERANCE
            } else {
                3.0 * stderr + EXHAUSTIVE_TOLERANCE * rhs.abs().max(1.0)
            };
            points.push(PointCheck { lhs_mean: mean, lhs_stderr: stderr, rhs, slack, pass: slack >= -tol });
        }
        let score = |p: &PointCheck| p.slack / (3.0 * p.lhs_stderr + EXHAUSTIVE_TOLERANCE);
        let worst = (0..points.len()).min_by(|&a, &b| score(&points[a]).total_cmp(&score(&points[b]))).unwrap_or(0);
        let w = points.get(worst).cloned().unwrap_or(PointCheck { lhs_mean: 0.0, lhs_stderr: 0.0, rhs: 0.0, slack: 0.0, pass: true });
        EsoCheckReport {
            mode,
            trials: if exhaustive { 0 } else { acc.count },
            lhs_mean: w.lhs_mean,
            lhs_stderr: w.lhs_stderr,
            rhs: w.rhs,
            slack: w.slack,
            pass: points.iter().all(|p| p.pass),
            points_tested: points.len(),
            worst_point: worst,
            points,
        }
    }
}

/// Check `E f(x + h_[Ŝ]) ≤ f(x) + Σ p_i ∇_i f(x) h_i + ½ Σ p_i v_i h_i²` for
/// `f(x) = ½‖Ax‖²` at the given points.
pub fn check_eso_quadratic(
    data: &DataMatrix,
    spec: &SamplingSpec,
    v: &[f64],
    points: &[(Vec<f64>, Vec<f64>)],
    mode: CheckMode,
) -> Result<EsoCheckReport> {
    let mut check = EsoCheck::new(data, spec, v, points)?;
    let acc = match mode {
        CheckMode::Exhaustive => check.exact(&spec.enumerate_with_cap(DEFAULT_ENUMERATION_CAP)?),
        CheckMode::MonteCarlo { trials, seed } => {
            if trials < 2 {
                return Err(EsoError::InvalidArgument("Monte-Carlo mode needs at least two trials".into()));
            }
            let mut acc = Moments::zeros(check.points());
            for c in 0..trials.div_ceil(CHUNK_LEN) {
                acc.merge(&check.chunk(seed, c, trials));
            }
            acc
        }
    };
    Ok(check.report(mode, &acc))
}

/// Matrix form of the check; a failing certificate carries its witness.
pub fn check_eso_matrix_form(data: &DataMatrix, spec: &SamplingSpec, v: &[f64]) -> Result<Certificate> {
    certificate(data, spec, v)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BatteryCheck {
    pub name: String,
    pub cases: usize,
    pub max_discrepancy: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BatteryReport {
    pub checks: Vec<BatteryCheck>,
}

impl BatteryReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

struct Tally {
    name: String,
    cases: usize,
    max: f64,
    tol: f64,
}

impl Tally {
    fn new(name: &str, tol: f64) -> Self {
        Self { name: name.into(), cases: 0, max: 0.0, tol }
    }

    fn add(&mut self, d: f64) {
        self.cases += 1;
        self.max = if d.is_nan() { f64::INFINITY } else { self.max.max(d) };
    }

    fn finish(self) -> BatteryCheck {
        BatteryCheck { pass: self.max <= self.tol, name: self.name, cases: self.cases, max_discrepancy: self.max, tolerance: self.tol }
    }
}

/// Run the structural identities on random enumerable specs: the six
/// probability-matrix identities, marginals, closed forms against
/// enumeration, and the convex combination, intersection, restriction and
/// doubly uniform decomposition rules.
pub fn run_identity_battery(seeds: &[u64], sizes: &[usize], specs_per_size: usize) -> Result<BatteryReport> {
    let mut identities: Vec<Tally> = IDENTITY_NAMES.iter().map(|n| Tally::new(n, 1e-10)).collect();
    let mut marginals = Tally::new("marginals", 1e-12);
    let mut closed = Tally::new("auto_vs_enumeration", 1e-12);
    let mut convex = Tally::new("convex_combination", 1e-12);
    let mut inter = Tally::new("intersection", 1e-12);
    let mut restr = Tally::new("restriction_chain", 1e-12);
    let mut du = Tally::new("doubly_uniform_decomposition", 1e-12);

    for &seed in seeds {
        for &n in sizes {
            if n == 0 {
                return Err(EsoError::InvalidArgument("sizes must be positive".into()));
            }
            let mut rng = stream_rng(seed, n as u64);
            for _ in 0..specs_per_size {
                let s1 = random_spec(&mut rng, n);
                let s2 = random_spec(&mut rng, n);
                let m = random_symmetric(&mut rng, n);
                let h = random_vector(&mut rng, n);

                let rep = check_identities(&s1, &m, &h, IdentityOptions::default())?;
                for (t, c) in identities.iter_mut().zip(&rep.checks) {
                    t.add(c.discrepancy);
                }

                let d1 = s1.enumerate()?;
                let p1 = ProbMatrix::compute(&s1, ProbMethod::Auto)?;
                let e1 = from_distribution(&d1);
                closed.add(p1.matrix.max_abs_diff(&e1));
                marginals.add(max_diff(&s1.marginals(), &d1.marginals()));

                let p2 = ProbMatrix::compute(&s2, ProbMethod::Auto)?;
                let w = 0.3 + 0.4 * crate::rng::unit(&mut rng);
                let comb = SamplingSpec::convex_combination(alloc::vec![(w, s1.clone()), (1.0 - w, s2.clone())]);
                let lhs = ProbMatrix::combine_convex(&[(w, &p1), (1.0 - w, &p2)])?;
                convex.add(lhs.matrix.max_abs_diff(&from_distribution(&comb.enumerate()?)));

                let both = SamplingSpec::intersection(s1.clone(), s2.clone());
                inter.add(p1.intersect(&p2)?.matrix.max_abs_diff(&from_distribution(&both.enumerate()?)));

                let j = crate::fixtures::random_subset(&mut rng, n, 0.5);
                let outer = SamplingSpec::restriction(comb.clone(), j.clone());
                let inner = SamplingSpec::convex_combination(alloc::vec![
                    (w, SamplingSpec::restriction(s1.clone(), j.clone())),
                    (1.0 - w, SamplingSpec::restriction(s2.clone(), j.clone())),
                ]);
                restr.add(from_distribution(&outer.enumerate()?).max_abs_diff(&from_distribution(&inner.enumerate()?)));

                if let SamplingKind::DoublyUniform { q } = &s1.kind {
                    let parts: Vec<(f64, SamplingSpec)> =
                        q.iter().enumerate().map(|(k, &qk)| (qk, SamplingSpec::tau_nice(n, k))).collect();
                    let mix = SamplingSpec::convex_combination(parts);
                    du.add(p1.matrix.max_abs_diff(&from_distribution(&mix.enumerate()?)));
                }
            }
        }
    }
    let mut checks: Vec<BatteryCheck> = identities.into_iter().map(Tally::finish).collect();
    for t in [marginals, closed, convex, inter, restr, du] {
        checks.push(t.finish());
    }
    Ok(BatteryReport { checks })
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| libm::fabs(x - y)).fold(0.0, f64::max)
}

/// Human-readable one-line summary.
pub fn describe(report: &EsoCheckReport) -> String {
    format!(
        "{} points, worst slack {:.3e} (stderr {:.3e}): {}",
        report.points_tested,
        report.slack,
        report.lhs_stderr,
        if report.pass { "pass" } else { "FAIL" }
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eso::{eso_coupled, V_FLOOR};
    use crate::spectral::RestrictedMethod;

    fn example() -> DataMatrix {
        DataMatrix::from_triplets(2, 3, &[(0, 0, 1.0), (0, 1, 1.0), (1, 1, 2.0)]).unwrap()
    }

    #[test]
    fn zero_displacement_is_tight() {
        let a = example();
        let s = SamplingSpec::tau_nice(3, 2);
        let pts = vec![(vec![1.0, -2.0, 0.5], vec![0.0; 3])];
        let r = check_eso_quadratic(&a, &s, &[1.0; 3], &pts, CheckMode::Exhaustive).unwrap();
        assert_eq!(r.slack, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn hand_enumerated_example() {
        // x = 0, h = e: lhs = (1/3)·½(‖A(e1+e2)‖² + ‖A(e1+e3)‖² + ‖A(e2+e3)‖²) = (1/6)(8 + 1 + 5).
        let a = example();
        let s = SamplingSpec::tau_nice(3, 2);
        let v = [1.5, 5.5, V_FLOOR];
        let r = check_eso_quadratic(&a, &s, &v, &[(vec![0.0; 3], vec![1.0; 3])], CheckMode::Exhaustive).unwrap();
        assert!((r.lhs_mean - 7.0 / 3.0).abs() < 1e-14);
        let rhs = 0.5 * (2.0 / 3.0) * (1.5 + 5.5 + V_FLOOR);
        assert!((r.rhs - rhs).abs() < 1e-14);
        assert!(r.pass);
    }

    #[test]
    fn halved_v_fails_at_a_canonical_point() {
        let a = example();
        let s = SamplingSpec::tau_nice(3, 2);
        let v = eso_coupled(&a, &s, RestrictedMethod::Exact).unwrap().v;
        let pts = canonical_points(&a, &s, &v, 1);
        assert!(check_eso_quadratic(&a, &s, &v, &pts, CheckMode::Exhaustive).unwrap().pass);
        let half: Vec<f64> = v.iter().map(|x| 0.5 * x).collect();
        let pts = canonical_points(&a, &s, &half, 1);
        assert!(!check_eso_quadratic(&a, &s, &half, &pts, CheckMode::Exhaustive).unwrap().pass);
    }

    #[test]
    fn witness_is_sound() {
        let a = example();
        let s = SamplingSpec::tau_nice(3, 2);
        let v = [0.6, 2.0, 0.1];
        let cert = check_eso_matrix_form(&a, &s, &v).unwrap();
        assert!(cert.margin < -1e-8);
        let h = cert.witness.unwrap();
        let r = check_eso_quadratic(&a, &s, &v, &[(vec![0.0; 3], h)], CheckMode::Exhaustive).unwrap();
        assert!(r.slack < 0.0);
    }

    #[test]
    fn monte_carlo_agrees_with_exhaustive() {
        let a = example();
        let s = SamplingSpec::tau_nice(3, 2);
        let v = [1.5, 5.5, V_FLOOR];
        let pts = canonical_points(&a, &s, &v, 3);
        let ex = check_eso_quadratic(&a, &s, &v, &pts, CheckMode::Exhaustive).unwrap();
        let mc = check_eso_quadratic(&a, &s, &v, &pts, CheckMode::MonteCarlo { trials: 20_000, seed: 5 }).unwrap();
        assert!(mc.pass);
        for (e, m) in ex.points.iter().zip(&mc.points) {
            assert!((e.lhs_mean - m.lhs_mean).abs() <= 5.0 * m.lhs_stderr + 1e-12);
        }
    }

    #[test]
    fn small_battery_passes() {
        let rep = run_identity_battery(&[1], &[3, 4], 10).unwrap();
        assert!(rep.pass(), "{rep:?}");
    }
}
