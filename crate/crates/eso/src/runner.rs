//! Parallel drivers with deterministic output order.

use eso_core::solver::{solve, QuadraticProblem, SolveOptions, SolverTrace};
use eso_core::verifier::{CheckMode, EsoCheck, EsoCheckReport, CHUNK_LEN};
use eso_core::{DataMatrix, Result, SamplingSpec, DEFAULT_ENUMERATION_CAP};
use rayon::prelude::*;

/// Size the global rayon pool; `0` keeps the default.
pub fn configure_threads(threads: usize) {
    if threads > 0 {
        // A pool that is already initialized keeps its size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
}

/// One solver run per seed, returned in seed order.
pub fn multi_seed_solve(
    problem: &QuadraticProblem,
    spec: &SamplingSpec,
    v: &[f64],
    x0: &[f64],
    opts: SolveOptions,
    seeds: &[u64],
) -> Vec<Result<SolverTrace>> {
    seeds.par_iter().map(|&seed| solve(problem, spec, v, x0, SolveOptions { seed, ..opts })).collect()
}

/// Mean gap per iteration; runs that stopped early hold their final gap.
pub fn mean_gaps(traces: &[SolverTrace]) -> Vec<f64> {
    let len = traces.iter().map(|t| t.gaps.len()).max().unwrap_or(0);
    (0..len)
        .map(|k| {
            let s: f64 = traces.iter().map(|t| t.gaps[k.min(t.gaps.len() - 1)]).sum();
            s / traces.len() as f64
        })
        .collect()
}

/// `check_eso_quadratic` with Monte-Carlo chunks spread over threads.
pub fn check_eso_parallel(
    data: &DataMatrix,
    spec: &SamplingSpec,
    v: &[f64],
    points: &[(Vec<f64>, Vec<f64>)],
    mode: CheckMode,
) -> Result<EsoCheckReport> {
    let mut check = EsoCheck::new(data, spec, v, points)?;
    match mode {
        CheckMode::Exhaustive => {
            let acc = check.exact(&spec.enumerate_with_cap(DEFAULT_ENUMERATION_CAP)?);
            Ok(check.report(mode, &acc))
        }
        CheckMode::MonteCarlo { trials, seed } => {
            if trials < 2 {
                return Err(eso_core::EsoError::InvalidArgument("Monte-Carlo mode needs at least two trials".into()));
            }
            let chunks = trials.div_ceil(CHUNK_LEN);
            let parts: Vec<_> = (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut local = EsoCheck::new(data, spec, v, points).expect("inputs validated above");
                    local.chunk(seed, c, trials)
                })
                .collect();
            let mut acc = parts[0].clone();
            for p in &parts[1..] {
                acc.merge(p);
            }
            Ok(check.report(mode, &acc))
        }
    }
}
