//! Seeded generators for random specs, data matrices and test vectors.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::data::DataMatrix;
use crate::matrix::Matrix;
use crate::rng::{below, normal, unit};
use crate::sampling::{ConflictGraph, SamplingSpec, WeightedSet};

pub fn random_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| normal(rng)).collect()
}

pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut v = random_vector(rng, n);
    let s = crate::matrix::norm2(&v);
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
    v
}

pub fn random_symmetric<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Matrix {
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let x = normal(rng);
            m[(i, j)] = x;
            m[(j, i)] = x;
        }
    }
    m
}

/// Random probability vector of length `k` with some exact zeros.
pub fn random_law<R: Rng + ?Sized>(rng: &mut R, k: usize, zero_chance: f64) -> Vec<f64> {
    let mut q: Vec<f64> = (0..k).map(|_| if unit(rng) < zero_chance { 0.0 } else { unit(rng) + 0.05 }).collect();
    if q.iter().all(|&x| x == 0.0) {
        q[below(rng, k)] = 1.0;
    }
    let s: f64 = q.iter().sum();
    q.iter_mut().for_each(|x| *x /= s);
    // Push rounding into the largest entry so the sum is 1 to machine precision.
    let err = 1.0 - q.iter().sum::<f64>();
    let top = (0..k).max_by(|&a, &b| q[a].total_cmp(&q[b])).unwrap_or(0);
    q[top] += err;
    q
}

pub fn random_subset<R: Rng + ?Sized>(rng: &mut R, n: usize, keep: f64) -> Vec<usize> {
    (0..n).filter(|_| unit(rng) < keep).collect()
}

pub fn shuffled<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        v.swap(i, below(rng, i + 1));
    }
    v
}

/// `c` random blocks of size `n / c` (requires `c | n`).
pub fn random_partition<R: Rng + ?Sized>(rng: &mut R, n: usize, c: usize) -> Vec<Vec<usize>> {
    let perm = shuffled(rng, n);
    perm.chunks(n / c).map(|b| b.to_vec()).collect()
}

/// Random partition into blocks of uneven sizes.
pub fn random_blocks<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Vec<usize>> {
    let perm = shuffled(rng, n);
    let mut blocks = Vec::new();
    let mut start = 0;
    while start < n {
        let len = 1 + below(rng, (n - start).min(3));
        blocks.push(perm[start..start + len].to_vec());
        start += len;
    }
    blocks
}

fn random_members<R: Rng + ?Sized>(rng: &mut R, n: usize, count: usize) -> Vec<WeightedSet> {
    let q = random_law(rng, count, 0.0);
    q.into_iter().map(|p| WeightedSet::new(random_subset(rng, n, 0.5), p)).collect()
}

/// Random graph sampling: members are independent sets found greedily.
pub fn random_graph_spec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> SamplingSpec {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if unit(rng) < 0.3 {
                edges.push((i, j));
            }
        }
    }
    let graph = ConflictGraph::new(n, edges.iter().copied()).expect("edges are in range");
    let count = 1 + below(rng, 4);
    let q = random_law(rng, count, 0.0);
    let members = q
        .into_iter()
        .map(|p| {
            let mut set: Vec<usize> = Vec::new();
            for i in shuffled(rng, n) {
                if set.iter().all(|&k| !graph.has_edge(i, k)) && unit(rng) < 0.7 {
                    set.push(i);
                }
            }
            WeightedSet::new(set, p)
        })
        .collect();
    SamplingSpec::graph(n, edges, members)
}

/// Random non-composite spec on `n` coordinates.
pub fn random_base_spec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> SamplingSpec {
    match below(rng, 8) {
        0 => SamplingSpec::elementary(n, random_subset(rng, n, 0.5)),
        1 => SamplingSpec::serial(random_law(rng, n, 0.2)),
        2 => SamplingSpec::tau_nice(n, below(rng, n + 1)),
        3 => {
            let divisors: Vec<usize> = (1..=n).filter(|c| n.is_multiple_of(*c)).collect();
            let c = divisors[below(rng, divisors.len())];
            let tau = below(rng, n / c + 1);
            SamplingSpec::ctau_distributed(random_partition(rng, n, c), tau)
        }
        4 => SamplingSpec::doubly_uniform(random_law(rng, n + 1, 0.3)),
        5 => SamplingSpec::product(random_blocks(rng, n)),
        6 => random_graph_spec(rng, n),
        _ => {
            let count = 1 + below(rng, 5);
            SamplingSpec::explicit(n, random_members(rng, n, count))
        }
    }
}

/// Random spec, possibly composite (one level deep).
pub fn random_spec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> SamplingSpec {
    match below(rng, 11) {
        0 => {
            let k = 2 + below(rng, 2);
            let w = random_law(rng, k, 0.0);
            SamplingSpec::convex_combination(w.into_iter().map(|wt| (wt, random_base_spec(rng, n))).collect())
        }
        1 => SamplingSpec::intersection(random_base_spec(rng, n), random_base_spec(rng, n)),
        2 => SamplingSpec::restriction(random_base_spec(rng, n), random_subset(rng, n, 0.6)),
        _ => random_base_spec(rng, n),
    }
}

/// Random proper spec with a cardinality cap, one of the structured kinds.
pub fn random_proper_spec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> SamplingSpec {
    loop {
        let s = match below(rng, 5) {
            0 => SamplingSpec::serial(random_law(rng, n, 0.0)),
            1 => SamplingSpec::tau_nice(n, 1 + below(rng, n)),
            2 => {
                let divisors: Vec<usize> = (1..=n).filter(|c| n.is_multiple_of(*c)).collect();
                let c = divisors[below(rng, divisors.len())];
                SamplingSpec::ctau_distributed(random_partition(rng, n, c), 1 + below(rng, n / c))
            }
            3 => {
                let mut q = random_law(rng, n + 1, 0.3);
                q[0] = 0.0;
                if q.iter().all(|&x| x == 0.0) {
                    q[n] = 1.0;
                }
                let s: f64 = q.iter().sum();
                SamplingSpec::doubly_uniform(q.into_iter().map(|x| x / s).collect())
            }
            _ => SamplingSpec::product(random_blocks(rng, n)),
        };
        if s.validate().is_ok() && s.is_proper() {
            return s;
        }
    }
}

/// `m × n` sparse matrix with Gaussian nonzeros at the given density; every
/// row gets at least one nonzero.
pub fn random_sparse_matrix<R: Rng + ?Sized>(rng: &mut R, m: usize, n: usize, density: f64) -> DataMatrix {
    let mut trip = Vec::new();
    for j in 0..m {
        let mut row: Vec<usize> = (0..n).filter(|_| unit(rng) < density).collect();
        if row.is_empty() {
            row.push(below(rng, n));
        }
        for i in row {
            trip.push((j, i, normal(rng)));
        }
    }
    DataMatrix::from_triplets(m, n, &trip).expect("generated entries are distinct")
}

/// Sparse matrix whose every column has at least one nonzero.
pub fn random_full_rank_sparse<R: Rng + ?Sized>(rng: &mut R, m: usize, n: usize, density: f64) -> DataMatrix {
    let mut present = vec![vec![false; n]; m];
    for row in present.iter_mut() {
        for slot in row.iter_mut() {
            *slot = unit(rng) < density;
        }
    }
    for i in 0..n {
        present[i % m][i] = true;
    }
    let mut trip = Vec::new();
    for (j, row) in present.iter().enumerate() {
        for (i, &on) in row.iter().enumerate() {
            if on {
                trip.push((j, i, normal(rng)));
            }
        }
    }
    DataMatrix::from_triplets(m, n, &trip).expect("generated entries are distinct")
}
