//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use eso_core::eso::{applicable_formulas, certify, eso_specialized, eso_with_formula};
use eso_core::fixtures::{
    random_blocks, random_full_rank_sparse, random_partition, random_spec, random_sparse_matrix, random_symmetric,
    random_vector, shuffled,
};
use eso_core::prob_matrix::{check_identities, prob_submatrix, IdentityOptions};
use eso_core::rng::{below, normal, stream_rng, unit};
use eso_core::sampling::for_each_combination;
use eso_core::solver::{nsync_iterations, optimal_serial_sampling, solve, tradeoff_report, QuadraticProblem, SolveOptions};
use eso_core::spectral::{eigen_gap_ratio, lambda_bounds, lambda_prime, lambda_prime_restricted};
use eso_core::verifier::{canonical_points, check_eso_quadratic, describe, CheckMode};
use eso_core::{
    DataMatrix, EigenMethod, FormulaId, Matrix, ProbMatrix, ProbMethod, RestrictedMethod, SamplingSpec, WeightedSet,
    DEFAULT_ENUMERATION_CAP,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

type Fixture = (DataMatrix, Vec<SamplingSpec>);
type Criterion<'a> = (&'static str, &'static str, Box<dyn Fn() -> Outcome + 'a>);

/// Accepted range of power estimate / exact value.
const BAND: std::ops::RangeInclusive<f64> = 1.0 - 1e-12..=1.031;

/// Greedy independent sets of the data conflict graph, so every draw meets
/// each row support at most once.
fn conflict_free_spec(data: &DataMatrix, seed: u64) -> SamplingSpec {
    let mut rng = stream_rng(seed, 7);
    let n = data.n();
    let graph = data.conflict_graph();
    let mut uncovered: Vec<bool> = vec![true; n];
    let mut sets = Vec::new();
    while uncovered.iter().any(|&u| u) {
        let mut set: Vec<usize> = Vec::new();
        let order = shuffled(&mut rng, n);
        for &i in order.iter().filter(|&&i| uncovered[i]).chain(order.iter().filter(|&&i| !uncovered[i])) {
            if set.iter().all(|&k| !graph.has_edge(i, k)) {
                set.push(i);
            }
        }
        for &i in &set {
            uncovered[i] = false;
        }
        sets.push(set);
    }
    let w = 1.0 / sets.len() as f64;
    let members = sets.into_iter().map(|s| WeightedSet::new(s, w)).collect();
    SamplingSpec::graph(n, graph.edges().collect(), members)
}

fn matching_specs(data: &DataMatrix, seed: u64) -> Vec<SamplingSpec> {
    let mut rng = stream_rng(seed, 3);
    let n = data.n();
    let mut specs = vec![SamplingSpec::uniform_serial(n), SamplingSpec::tau_nice(n, 1 + below(&mut rng, n))];
    let divisors: Vec<usize> = (2..=n).filter(|c| n.is_multiple_of(*c) && *c < n).collect();
    let c = if divisors.is_empty() { 1 } else { divisors[below(&mut rng, divisors.len())] };
    specs.push(SamplingSpec::ctau_distributed(random_partition(&mut rng, n, c), 1 + below(&mut rng, n / c)));
    let mut q = vec![0.0; n + 1];
    for qc in q.iter_mut().skip(1) {
        if unit(&mut rng) < 0.3 {
            *qc = unit(&mut rng);
        }
    }
    q[1 + below(&mut rng, n)] += 0.5;
    let s: f64 = q.iter().sum();
    specs.push(SamplingSpec::doubly_uniform(q.into_iter().map(|x| x / s).collect()));
    let q: Vec<f64> = (0..n).map(|_| 0.1 + unit(&mut rng)).collect();
    let s: f64 = q.iter().sum();
    specs.push(SamplingSpec::serial(q.into_iter().map(|x| x / s).collect()));
    specs.push(conflict_free_spec(data, seed));
    specs.push(SamplingSpec::product(random_blocks(&mut rng, n)));
    specs.push(SamplingSpec::convex_combination(vec![
        (0.5, SamplingSpec::tau_nice(n, 1 + below(&mut rng, n))),
        (0.5, SamplingSpec::uniform_serial(n)),
    ]));
    specs
}

fn corpus() -> Vec<Fixture> {
    (0..50u64)
        .map(|k| {
            let mut rng = stream_rng(1000 + k, 0);
            let m = 5 + below(&mut rng, 46);
            let n = 5 + below(&mut rng, 46);
            let density = 0.05 + 0.15 * unit(&mut rng);
            let data = random_sparse_matrix(&mut rng, m, n, density);
            let specs = matching_specs(&data, k);
            (data, specs)
        })
        .collect()
}

fn ac01() -> Outcome {
    let mut worst = 0.0f64;
    let mut cases = 0;
    let mut rng = stream_rng(1, 0);
    for n in 1..=8 {
        for tau in 1..=n {
            let spec = SamplingSpec::tau_nice(n, tau);
            let a = ProbMatrix::compute(&spec, ProbMethod::ClosedForm).unwrap();
            let b = ProbMatrix::compute(&spec, ProbMethod::Enumerate).unwrap();
            worst = worst.max(a.matrix.max_abs_diff(&b.matrix));
            cases += 1;
        }
        for c in [1usize, 2, 4].into_iter().filter(|c| n % c == 0) {
            for tau in 1..=n / c {
                let contiguous: Vec<Vec<usize>> = (0..c).map(|b| (b * n / c..(b + 1) * n / c).collect()).collect();
                for partition in [contiguous, random_partition(&mut rng, n, c)] {
                    let spec = SamplingSpec::ctau_distributed(partition, tau);
                    let a = ProbMatrix::compute(&spec, ProbMethod::ClosedForm).unwrap();
                    let b = ProbMatrix::compute(&spec, ProbMethod::Enumerate).unwrap();
                    worst = worst.max(a.matrix.max_abs_diff(&b.matrix));
                    cases += 1;
                }
            }
        }
    }
    outcome(worst <= 1e-12, format!("{cases} specs, max entry difference {worst:.2e}"))
}

fn ac02() -> Outcome {
    let mut rng = stream_rng(2, 0);
    let mut worst = 0.0f64;
    let mut specs = 0;
    let mut all_exact = true;
    while specs < 100 {
        let n = 1 + below(&mut rng, 6);
        let spec = random_spec(&mut rng, n);
        if spec.validate().is_err() || !spec.is_enumerable(DEFAULT_ENUMERATION_CAP) {
            continue;
        }
        specs += 1;
        for _ in 0..5 {
            let m = random_symmetric(&mut rng, n);
            let h = random_vector(&mut rng, n);
            let rep = check_identities(&spec, &m, &h, IdentityOptions::default()).unwrap();
            all_exact &= rep.exact;
            worst = worst.max(rep.max_discrepancy());
        }
    }
    outcome(worst <= 1e-10 && all_exact, format!("{specs} specs x 5 pairs, max discrepancy {worst:.2e}"))
}

fn ac03() -> Outcome {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in 1..=8usize {
        let all: Vec<usize> = (0..n).collect();
        for tau in 1..=n {
            let spec = SamplingSpec::tau_nice(n, tau);
            for k in 1..=n {
                for_each_combination(&all, k, |j| {
                    let exact = lambda_prime_restricted(&spec, j, RestrictedMethod::Exact).unwrap().value;
                    let formula = 1.0 + (k as f64 - 1.0) * (tau as f64 - 1.0) / (n.max(2) - 1) as f64;
                    worst = worst.max((exact - formula).abs() / formula);
                    cases += 1;
                });
            }
        }
    }
    outcome(worst <= 1e-8, format!("{cases} (n, tau, J) cases, max relative error {worst:.2e}"))
}

fn ac04() -> Outcome {
    let mut rng = stream_rng(4, 0);
    let mut tested = 0;
    let mut violations = Vec::new();
    while tested < 200 {
        let n = 2 + below(&mut rng, 7);
        let spec = random_spec(&mut rng, n);
        if spec.validate().is_err() || spec.cardinality_cap().is_none() || spec.is_nil() {
            continue;
        }
        tested += 1;
        let rep = lambda_bounds(&spec).unwrap();
        for v in rep.violations(1e-9) {
            violations.push(format!("{} ({})", v, spec.kind_name()));
        }
    }
    outcome(violations.is_empty(), format!("{tested} capped specs, {} violations {:?}", violations.len(), violations))
}

fn ac05(corpus: &[Fixture]) -> Outcome {
    let mut checked = 0;
    let mut worst = f64::INFINITY;
    let mut failures = Vec::new();
    for (k, (data, specs)) in corpus.iter().enumerate() {
        for spec in specs {
            for f in applicable_formulas(data, spec) {
                let res = match eso_with_formula(data, spec, f) {
                    Ok(r) => r,
                    Err(e) => {
                        failures.push(format!("fixture {k} {} {}: {e}", spec.kind_name(), f.as_str()));
                        continue;
                    }
                };
                let margin = certify(data, spec, &res.v).unwrap();
                checked += 1;
                worst = worst.min(margin);
                if margin < -1e-8 {
                    failures.push(format!("fixture {k} {} {}: margin {margin:.3e}", spec.kind_name(), f.as_str()));
                }
            }
        }
    }
    let detail = format!("{checked} certificates, smallest margin {worst:.3e}, {} failures {:?}", failures.len(), failures);
    outcome(failures.is_empty(), detail)
}

fn ac06() -> Outcome {
    let mut rng = stream_rng(6, 0);
    let fixtures: Vec<(DataMatrix, SamplingSpec)> = vec![
        (random_sparse_matrix(&mut rng, 12, 10, 0.3), SamplingSpec::tau_nice(10, 3)),
        (random_sparse_matrix(&mut rng, 15, 12, 0.25), SamplingSpec::ctau_distributed(random_partition(&mut rng, 12, 3), 2)),
        (random_sparse_matrix(&mut rng, 10, 8, 0.4), SamplingSpec::doubly_uniform(vec![0.0, 0.2, 0.3, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0])),
        (random_sparse_matrix(&mut rng, 9, 9, 0.3), SamplingSpec::product(vec![vec![0, 1, 2], vec![3, 4], vec![5, 6, 7, 8]])),
        (random_sparse_matrix(&mut rng, 8, 11, 0.35), SamplingSpec::serial((1..=11).map(|i| i as f64 / 66.0).collect())),
    ];
    let mut lines = Vec::new();
    let mut pass = true;
    for (k, (data, spec)) in fixtures.iter().enumerate() {
        let v = eso_specialized(data, spec).unwrap().v;
        let pts = canonical_points(data, spec, &v, 60 + k as u64);
        let mc = check_eso_quadratic(data, spec, &v, &pts, CheckMode::MonteCarlo { trials: 100_000, seed: k as u64 }).unwrap();
        let ex = check_eso_quadratic(data, spec, &v, &pts, CheckMode::Exhaustive).unwrap();
        pass &= mc.pass && ex.pass;
        if !(mc.pass && ex.pass) {
            lines.push(format!("{}: {} / {}", spec.kind_name(), describe(&mc), describe(&ex)));
        }
    }
    outcome(pass, format!("5 fixtures, 1e5 draws and exhaustive check each {}", lines.join("; ")))
}

fn ac07(corpus: &[Fixture]) -> Outcome {
    let mut checked = 0;
    let mut failures = Vec::new();
    for (k, (data, specs)) in corpus.iter().enumerate() {
        for spec in specs.iter().filter(|s| s.cardinality_cap().is_some()) {
            let exact = eso_with_formula(data, spec, FormulaId::CoupledExact).unwrap().v;
            let generic = eso_with_formula(data, spec, FormulaId::GenericTau).unwrap().v;
            let cons = eso_with_formula(data, spec, FormulaId::Conservative).unwrap().v;
            checked += 1;
            let ok = (0..data.n()).all(|i| exact[i] <= generic[i] + 1e-10 && generic[i] <= cons[i] + 1e-10);
            if !ok {
                failures.push(format!("fixture {k} {}", spec.kind_name()));
            }
        }
    }
    outcome(failures.is_empty(), format!("{checked} (A, spec) pairs, {} failures {:?}", failures.len(), failures))
}

fn ac08() -> Outcome {
    let mut rng = stream_rng(8, 0);
    let data = random_full_rank_sparse(&mut rng, 20, 10, 0.3);
    let b: Vec<f64> = (0..10).map(|_| normal(&mut rng)).collect();
    let problem = QuadraticProblem::new(data, 0.1, b).unwrap();
    let eso_data = problem.eso_data().unwrap();
    let lambda = problem.strong_convexity().unwrap();
    let x0 = vec![0.0; 10];
    let gap0 = problem.objective(&x0) - problem.fstar;
    let eps = 1e-6;
    let mut pass = true;
    let mut parts = Vec::new();
    for tau in [1usize, 3] {
        let spec = SamplingSpec::tau_nice(10, tau);
        let res = eso_specialized(&eso_data, &spec).unwrap();
        let k = nsync_iterations(&res.v, &res.p, lambda, gap0, eps).ceil() as usize;
        let opts = |seed| SolveOptions { epsilon: 0.0, max_iter: k, seed };
        let mean = (0..100u64).map(|s| *solve(&problem, &spec, &res.v, &x0, opts(s)).unwrap().gaps.last().unwrap()).sum::<f64>()
            / 100.0;
        pass &= mean <= eps;
        parts.push(format!("tau {tau}: K {k}, mean gap {mean:.2e}"));
    }
    outcome(pass, format!("lambda_min {lambda:.3}, gap0 {gap0:.3e}; {}", parts.join("; ")))
}

fn ac09() -> Outcome {
    let mut rng = stream_rng(9, 0);
    let mut worst_ratio = 0.0f64;
    let mut order_failures = 0;
    for _ in 0..200 {
        let m = 3 + below(&mut rng, 20);
        let n = 2 + below(&mut rng, 20);
        let data = random_full_rank_sparse(&mut rng, m, n, 0.3);
        let x0 = random_vector(&mut rng, n);
        let xs = random_vector(&mut rng, n);
        let d = optimal_serial_sampling(&data, &x0, &xs).unwrap();
        let w = data.col_sq_norms();
        let dd: Vec<f64> = (0..n).map(|i| w[i].powf(1.0 / 6.0) * (x0[i] - xs[i]).abs().powf(1.0 / 3.0)).collect();
        let n2 = dd.iter().map(|x| x * x).sum::<f64>().sqrt();
        let n6 = dd.iter().map(|x| x.powi(6)).sum::<f64>().powf(1.0 / 6.0);
        let oracle = n as f64 * n6.powi(3) / n2.powi(3);
        worst_ratio = worst_ratio.max((d.ratio - oracle).abs() / oracle);
        if d.c_opt > d.c_unif * (1.0 + 1e-12) {
            order_failures += 1;
        }
    }
    let mut worst_equal = 0.0f64;
    for k in 0..20 {
        let n = 2 + k;
        let c = 0.5 + unit(&mut rng);
        let data = DataMatrix::from_triplets(n, n, &(0..n).map(|i| (i, i, c)).collect::<Vec<_>>()).unwrap();
        let x0 = vec![0.0; n];
        let delta = 0.1 + unit(&mut rng);
        let xs: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { delta } else { -delta }).collect();
        let d = optimal_serial_sampling(&data, &x0, &xs).unwrap();
        worst_equal = worst_equal.max((d.c_opt - d.c_unif).abs() / d.c_unif);
    }
    let pass = order_failures == 0 && worst_ratio <= 1e-10 && worst_equal <= 1e-10;
    outcome(
        pass,
        format!(
            "200 instances, {order_failures} order failures, ratio error {worst_ratio:.2e}, equal-d gap {worst_equal:.2e}"
        ),
    )
}

fn restricted_matrices(data: &DataMatrix, spec: &SamplingSpec) -> Vec<Matrix> {
    (0..data.m())
        .map(|j| data.row_support(j))
        .filter(|s| s.len() >= 2)
        .map(|s| prob_submatrix(spec, &s).unwrap())
        .filter(|p| (0..p.rows()).any(|i| p[(i, i)] > 0.0))
        .collect()
}

fn ac10(corpus: &[Fixture], product: &(DataMatrix, SamplingSpec)) -> Outcome {
    let mut in_regime = 0;
    let mut outside = 0;
    let mut outside_miss = 0;
    let mut failures = 0;
    let mut worst_low = f64::INFINITY;
    let mut worst_high = 0.0f64;
    let mut check = |p: &Matrix| {
        let exact = lambda_prime(p, EigenMethod::DenseExact).unwrap().value;
        let est = lambda_prime(p, EigenMethod::power()).unwrap().value;
        let rel = est / exact;
        if eigen_gap_ratio(p).unwrap() <= 0.9 {
            in_regime += 1;
            worst_low = worst_low.min(rel);
            worst_high = worst_high.max(rel);
            if !BAND.contains(&rel) {
                failures += 1;
            }
        } else {
            outside += 1;
            if !BAND.contains(&rel) {
                outside_miss += 1;
            }
        }
    };
    for (data, specs) in corpus {
        for spec in specs {
            for p in restricted_matrices(data, spec) {
                check(&p);
            }
        }
    }
    for p in restricted_matrices(&product.0, &product.1) {
        check(&p);
    }
    outcome(
        failures == 0,
        format!(
            "{in_regime} matrices with gap ratio <= 0.9: estimate/exact in [{worst_low:.4}, {worst_high:.4}], {failures} outside [1, 1.031]; \
             reported only: {outside} with larger gap ratio, {outside_miss} of them outside the band"
        ),
    )
}

fn product_fixture(tau: usize) -> (DataMatrix, SamplingSpec) {
    let mut rng = stream_rng(11, 0);
    let data = random_sparse_matrix(&mut rng, 300, 500, 0.02).normalize_columns();
    let perm = shuffled(&mut rng, 500);
    let blocks: Vec<Vec<usize>> = (0..tau).map(|b| perm[b * 500 / tau..(b + 1) * 500 / tau].to_vec()).collect();
    (data, SamplingSpec::product(blocks))
}

fn ac11() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for tau in [8usize, 10, 20] {
        let (data, spec) = product_fixture(tau);
        let rep =
            tradeoff_report(&data, &spec, &[FormulaId::GenericTau, FormulaId::CoupledPower], 10, 1e-3, 1e-4).unwrap();
        let g = rep.row(FormulaId::GenericTau).unwrap();
        let c = rep.row(FormulaId::CoupledPower).unwrap();
        pass &= c.max_ratio < g.max_ratio && c.preprocessing_passes > g.preprocessing_passes;
        parts.push(format!(
            "tau {tau}: max ratio {:.3} vs {:.3}, passes {:.1} vs {:.1}",
            c.max_ratio, g.max_ratio, c.preprocessing_passes, g.preprocessing_passes
        ));
    }
    outcome(pass, format!("coupled vs generic; {}", parts.join("; ")))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let corpus = corpus();
    let product = product_fixture(10);
    let criteria: Vec<Criterion> = vec![
        ("AC-01", "closed-form probability matrices match enumeration", Box::new(ac01)),
        ("AC-02", "identity battery", Box::new(ac02)),
        ("AC-03", "tau-nice restricted eigenvalue formula", Box::new(ac03)),
        ("AC-04", "eigenvalue sandwich", Box::new(ac04)),
        ("AC-05", "ESO certificates", Box::new(|| ac05(&corpus))),
        ("AC-06", "Monte-Carlo and exhaustive ESO checks", Box::new(ac06)),
        ("AC-07", "dominance chain", Box::new(|| ac07(&corpus))),
        ("AC-08", "solver meets the iteration bound", Box::new(ac08)),
        ("AC-09", "optimal serial design", Box::new(ac09)),
        ("AC-10", "safeguarded power method", Box::new(|| ac10(&corpus, &product))),
        ("AC-11", "tradeoff structure on a 300x500 fixture", Box::new(ac11)),
    ];
    let mut failed = 0;
    for (id, name, f) in &criteria {
        let t = Instant::now();
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!(
            "[{}] {id} {name}: {} ({:.2}s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed in {:.1}s", criteria.len() - failed, criteria.len(), start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
