//! Coordinate samplings: random subsets of `{0, …, n-1}`.
//!
//! A [`SamplingSpec`] is a declarative description of the law of `Ŝ`. It can
//! be validated, drawn from, enumerated exactly (when the support is small),
//! and queried for marginals `p_i = Prob(i ∈ Ŝ)` and cardinality moments.
//! Indices are 0-based throughout the crate.

use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{EsoError, Result};
use crate::rng::{below, categorical, stream_rng};
use crate::DEFAULT_ENUMERATION_CAP;

/// Tolerance on probability vectors summing to one.
pub const LAW_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSet {
    pub set: Vec<usize>,
    pub prob: f64,
}

impl WeightedSet {
    pub fn new(set: impl Into<Vec<usize>>, prob: f64) -> Self {
        Self { set: sorted(set.into()), prob }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingSpec {
    /// Size of the ground set.
    pub n: usize,
    pub kind: SamplingKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SamplingKind {
    /// Always returns `set`.
    Elementary { set: Vec<usize> },
    /// Returns the singleton `{i}` with probability `q[i]`.
    Serial { q: Vec<f64> },
    /// Uniform over all subsets of cardinality `tau`.
    TauNice { tau: usize },
    /// Union of independent `tau`-nice samplings on the blocks of an
    /// equal-size partition.
    CTauDistributed { partition: Vec<Vec<usize>>, tau: usize },
    /// Cardinality drawn from `q` (indexed `0..=n`), then a uniform subset of
    /// that size.
    DoublyUniform { q: Vec<f64> },
    /// One uniformly chosen element from each block of a partition.
    Product { blocks: Vec<Vec<usize>> },
    /// Explicit law over independent sets of a conflict graph.
    Graph { edges: Vec<(usize, usize)>, members: Vec<WeightedSet> },
    /// Pick component `t` with probability `weight_t`, then sample from it.
    ConvexCombination { components: Vec<(f64, SamplingSpec)> },
    /// Intersection of two independent draws.
    Intersection { first: Box<SamplingSpec>, second: Box<SamplingSpec> },
    /// `J ∩ Ŝ` for a fixed set `J`.
    Restriction { inner: Box<SamplingSpec>, set: Vec<usize> },
    /// Fully specified law.
    Explicit { members: Vec<WeightedSet> },
}

impl SamplingSpec {
    pub fn elementary(n: usize, set: impl Into<Vec<usize>>) -> Self {
        Self { n, kind: SamplingKind::Elementary { set: sorted(set.into()) } }
    }

    pub fn serial(q: Vec<f64>) -> Self {
        Self { n: q.len(), kind: SamplingKind::Serial { q } }
    }

    pub fn uniform_serial(n: usize) -> Self {
        Self::serial(vec![1.0 / n as f64; n])
    }

    pub fn tau_nice(n: usize, tau: usize) -> Self {
        Self { n, kind: SamplingKind::TauNice { tau } }
    }

    pub fn ctau_distributed(partition: Vec<Vec<usize>>, tau: usize) -> Self {
        let n = partition.iter().map(Vec::len).sum();
        let partition = partition.into_iter().map(sorted).collect();
        Self { n, kind: SamplingKind::CTauDistributed { partition, tau } }
    }

    /// `q[k]` is the probability that `|Ŝ| = k`, for `k = 0..=n`.
    pub fn doubly_uniform(q: Vec<f64>) -> Self {
        Self { n: q.len().saturating_sub(1), kind: SamplingKind::DoublyUniform { q } }
    }

    pub fn product(blocks: Vec<Vec<usize>>) -> Self {
        let n = blocks.iter().map(Vec::len).sum();
        let blocks = blocks.into_iter().map(sorted).collect();
        Self { n, kind: SamplingKind::Product { blocks } }
    }

    pub fn graph(n: usize, edges: Vec<(usize, usize)>, members: Vec<WeightedSet>) -> Self {
        Self { n, kind: SamplingKind::Graph { edges, members } }
    }

    pub fn convex_combination(components: Vec<(f64, SamplingSpec)>) -> Self {
        let n = components.first().map_or(0, |(_, s)| s.n);
        Self { n, kind: SamplingKind::ConvexCombination { components } }
    }

    pub fn intersection(first: SamplingSpec, second: SamplingSpec) -> Self {
        Self { n: first.n, kind: SamplingKind::Intersection { first: Box::new(first), second: Box::new(second) } }
    }

    pub fn restriction(inner: SamplingSpec, set: impl Into<Vec<usize>>) -> Self {
        Self { n: inner.n, kind: SamplingKind::Restriction { inner: Box::new(inner), set: sorted(set.into()) } }
    }

    pub fn explicit(n: usize, members: Vec<WeightedSet>) -> Self {
        Self { n, kind: SamplingKind::Explicit { members } }
    }

    pub fn kind_name(&self) -> &'static str {
        match &self.kind {
            SamplingKind::Elementary { .. } => "elementary",
            SamplingKind::Serial { .. } => "serial",
            SamplingKind::TauNice { .. } => "tau_nice",
            SamplingKind::CTauDistributed { .. } => "ctau_distributed",
            SamplingKind::DoublyUniform { .. } => "doubly_uniform",
            SamplingKind::Product { .. } => "product",
            SamplingKind::Graph { .. } => "graph",
            SamplingKind::ConvexCombination { .. } => "convex_combination",
            SamplingKind::Intersection { .. } => "intersection",
            SamplingKind::Restriction { .. } => "restriction",
            SamplingKind::Explicit { .. } => "explicit",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if n == 0 {
            return Err(invalid("n", "ground set must be nonempty".into()));
        }
        match &self.kind {
            SamplingKind::Elementary { set } => check_set("set", set, n),
            SamplingKind::Serial { q } => {
                if q.len() != n {
                    return Err(invalid("q", format!("expected {n} probabilities, got {}", q.len())));
                }
                check_law("q", q.iter().copied())
            }
            SamplingKind::TauNice { tau } => {
                if *tau > n {
                    return Err(invalid("tau", format!("tau = {tau} exceeds n = {n}")));
                }
                Ok(())
            }
            SamplingKind::CTauDistributed { partition, tau } => {
                check_partition("partition", partition, n)?;
                let s = partition[0].len();
                if partition.iter().any(|b| b.len() != s) {
                    return Err(invalid("partition", "blocks must all have the same size".into()));
                }
                if *tau > s {
                    return Err(invalid("tau", format!("tau = {tau} exceeds block size {s}")));
                }
                Ok(())
            }
            SamplingKind::DoublyUniform { q } => {
                if q.len() != n + 1 {
                    return Err(invalid("q", format!("expected {} cardinality probabilities, got {}", n + 1, q.len())));
                }
                check_law("q", q.iter().copied())
            }
            SamplingKind::Product { blocks } => check_partition("blocks", blocks, n),
            SamplingKind::Graph { edges, members } => {
                let graph = ConflictGraph::new(n, edges.iter().copied())?;
                check_members(members, n)?;
                for m in members {
                    if m.prob > 0.0 && !graph.is_independent(&m.set) {
                        return Err(invalid("members", format!("set {:?} is not independent in the conflict graph", m.set)));
                    }
                }
                Ok(())
            }
            SamplingKind::ConvexCombination { components } => {
                if components.is_empty() {
                    return Err(invalid("components", "convex combination needs at least one component".into()));
                }
                check_law("weights", components.iter().map(|(w, _)| *w))?;
                for (_, c) in components {
                    check_same_n(c, n)?;
                    c.validate()?;
                }
                Ok(())
            }
            SamplingKind::Intersection { first, second } => {
                check_same_n(first, n)?;
                check_same_n(second, n)?;
                first.validate()?;
                second.validate()
            }
            SamplingKind::Restriction { inner, set } => {
                check_same_n(inner, n)?;
                check_set("set", set, n)?;
                inner.validate()
            }
            SamplingKind::Explicit { members } => check_members(members, n),
        }
    }

    /// A constant `τ` with `|Ŝ| ≤ τ` surely, when one can be certified from
    /// the structure of the spec.
    pub fn cardinality_cap(&self) -> Option<usize> {
        match &self.kind {
            SamplingKind::Elementary { set } => Some(set.len()),
            SamplingKind::Serial { .. } => Some(1),
            SamplingKind::TauNice { tau } => Some(*tau),
            SamplingKind::CTauDistributed { partition, tau } => Some(partition.len() * tau),
            SamplingKind::DoublyUniform { q } => Some(q.iter().rposition(|&x| x > 0.0).unwrap_or(0)),
            SamplingKind::Product { blocks } => Some(blocks.len()),
            SamplingKind::Graph { members, .. } | SamplingKind::Explicit { members } => {
                Some(members.iter().filter(|m| m.prob > 0.0).map(|m| m.set.len()).max().unwrap_or(0))
            }
            SamplingKind::ConvexCombination { components } => components
                .iter()
                .filter(|(w, _)| *w > 0.0)
                .map(|(_, c)| c.cardinality_cap())
                .try_fold(0usize, |acc, c| c.map(|c| acc.max(c))),
            SamplingKind::Intersection { first, second } => match (first.cardinality_cap(), second.cardinality_cap()) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            },
            SamplingKind::Restriction { inner, set } => {
                Some(inner.cardinality_cap().map_or(set.len(), |c| c.min(set.len())))
            }
        }
    }

    /// Kinds whose uniformity (equal marginals) follows from their definition.
    pub fn is_certified_uniform(&self) -> bool {
        matches!(
            self.kind,
            SamplingKind::TauNice { .. } | SamplingKind::DoublyUniform { .. } | SamplingKind::CTauDistributed { .. }
        )
    }

    /// Number of atoms an exact enumeration would visit (saturating).
    pub fn support_size(&self) -> u128 {
        let n = self.n;
        match &self.kind {
            SamplingKind::Elementary { .. } => 1,
            SamplingKind::Serial { q } => q.iter().filter(|&&x| x > 0.0).count() as u128,
            SamplingKind::TauNice { tau } => binomial(n, *tau),
            SamplingKind::CTauDistributed { partition, tau } => {
                let per = binomial(partition[0].len(), *tau);
                (0..partition.len()).fold(1u128, |acc, _| acc.saturating_mul(per))
            }
            SamplingKind::DoublyUniform { q } => q
                .iter()
                .enumerate()
                .filter(|(_, &x)| x > 0.0)
                .fold(0u128, |acc, (k, _)| acc.saturating_add(binomial(n, k))),
            SamplingKind::Product { blocks } => {
                blocks.iter().fold(1u128, |acc, b| acc.saturating_mul(b.len() as u128))
            }
            SamplingKind::Graph { members, .. } | SamplingKind::Explicit { members } => members.len() as u128,
            SamplingKind::ConvexCombination { components } => {
                components.iter().fold(0u128, |acc, (_, c)| acc.saturating_add(c.support_size()))
            }
            SamplingKind::Intersection { first, second } => first.support_size().saturating_mul(second.support_size()),
            SamplingKind::Restriction { inner, .. } => inner.support_size(),
        }
    }

    pub fn is_enumerable(&self, cap: usize) -> bool {
        self.support_size() <= cap as u128
    }

    /// Exact law of `Ŝ` under the default cap.
    pub fn enumerate(&self) -> Result<Distribution> {
        self.enumerate_with_cap(DEFAULT_ENUMERATION_CAP)
    }

    pub fn enumerate_with_cap(&self, cap: usize) -> Result<Distribution> {
        self.validate()?;
        let support = self.support_size();
        if support > cap as u128 {
            return Err(EsoError::Capacity { support, cap });
        }
        Ok(Distribution::from_map(self.n, self.atoms()))
    }

    fn atoms(&self) -> BTreeMap<Vec<usize>, f64> {
        let n = self.n;
        let mut out = BTreeMap::new();
        let mut add = |set: Vec<usize>, p: f64| {
            if p > 0.0 {
                *out.entry(set).or_insert(0.0) += p;
            }
        };
        match &self.kind {
            SamplingKind::Elementary { set } => add(set.clone(), 1.0),
            SamplingKind::Serial { q } => {
                for (i, &p) in q.iter().enumerate() {
                    add(vec![i], p);
                }
            }
            SamplingKind::TauNice { tau } => {
                let all: Vec<usize> = (0..n).collect();
                let p = 1.0 / binomial(n, *tau) as f64;
                for_each_combination(&all, *tau, |c| add(c.to_vec(), p));
            }
            SamplingKind::CTauDistributed { partition, tau } => {
                let per_block: Vec<Vec<Vec<usize>>> = partition
                    .iter()
                    .map(|b| {
                        let mut subsets = Vec::new();
                        for_each_combination(b, *tau, |c| subsets.push(c.to_vec()));
                        subsets
                    })
                    .collect();
                let p = 1.0 / per_block.iter().map(|s| s.len() as f64).product::<f64>();
                for_each_product(&per_block, |set| add(set, p));
            }
            SamplingKind::DoublyUniform { q } => {
                let all: Vec<usize> = (0..n).collect();
                for (k, &qk) in q.iter().enumerate() {
                    if qk > 0.0 {
                        let p = qk / binomial(n, k) as f64;
                        for_each_combination(&all, k, |c| add(c.to_vec(), p));
                    }
                }
            }
            SamplingKind::Product { blocks } => {
                let per_block: Vec<Vec<Vec<usize>>> =
                    blocks.iter().map(|b| b.iter().map(|&i| vec![i]).collect()).collect();
                let p = 1.0 / blocks.iter().map(|b| b.len() as f64).product::<f64>();
                for_each_product(&per_block, |set| add(set, p));
            }
            SamplingKind::Graph { members, .. } | SamplingKind::Explicit { members } => {
                for m in members {
                    add(m.set.clone(), m.prob);
                }
            }
            SamplingKind::ConvexCombination { components } => {
                for (w, c) in components {
                    for (set, p) in c.atoms() {
                        add(set, w * p);
                    }
                }
            }
            SamplingKind::Intersection { first, second } => {
                let a = first.atoms();
                let b = second.atoms();
                for (s1, p1) in &a {
                    for (s2, p2) in &b {
                        add(intersect_sorted(s1, s2), p1 * p2);
                    }
                }
            }
            SamplingKind::Restriction { inner, set } => {
                for (s, p) in inner.atoms() {
                    add(intersect_sorted(&s, set), p);
                }
            }
        }
        out
    }

    /// One realization of `Ŝ` (sorted). The spec must be valid.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let n = self.n;
        match &self.kind {
            SamplingKind::Elementary { set } => set.clone(),
            SamplingKind::Serial { q } => vec![categorical(rng, q)],
            SamplingKind::TauNice { tau } => {
                let all: Vec<usize> = (0..n).collect();
                choose_subset(&all, *tau, rng)
            }
            SamplingKind::CTauDistributed { partition, tau } => {
                let mut out: Vec<usize> = partition.iter().flat_map(|b| choose_subset(b, *tau, rng)).collect();
                out.sort_unstable();
                out
            }
            SamplingKind::DoublyUniform { q } => {
                let k = categorical(rng, q);
                let all: Vec<usize> = (0..n).collect();
                choose_subset(&all, k, rng)
            }
            SamplingKind::Product { blocks } => {
                let mut out: Vec<usize> = blocks.iter().map(|b| b[below(rng, b.len())]).collect();
                out.sort_unstable();
                out
            }
            SamplingKind::Graph { members, .. } | SamplingKind::Explicit { members } => {
                let weights: Vec<f64> = members.iter().map(|m| m.prob).collect();
                members[categorical(rng, &weights)].set.clone()
            }
            SamplingKind::ConvexCombination { components } => {
                let weights: Vec<f64> = components.iter().map(|(w, _)| *w).collect();
                components[categorical(rng, &weights)].1.draw(rng)
            }
            SamplingKind::Intersection { first, second } => {
                let a = first.draw(rng);
                let b = second.draw(rng);
                intersect_sorted(&a, &b)
            }
            SamplingKind::Restriction { inner, set } => intersect_sorted(&inner.draw(rng), set),
        }
    }

    /// Deterministic single draw from `(seed, stream_index)`.
    pub fn draw_seeded(&self, seed: u64, stream_index: u64) -> Result<Vec<usize>> {
        self.validate()?;
        Ok(self.draw(&mut stream_rng(seed, stream_index)))
    }

    /// `p_i = Prob(i ∈ Ŝ)`, exact for every kind.
    pub fn marginals(&self) -> Vec<f64> {
        let n = self.n;
        match &self.kind {
            SamplingKind::Elementary { set } => indicator(n, set),
            SamplingKind::Serial { q } => q.clone(),
            SamplingKind::TauNice { tau } => vec![*tau as f64 / n as f64; n],
            SamplingKind::CTauDistributed { partition, tau } => {
                vec![*tau as f64 / partition[0].len() as f64; n]
            }
            SamplingKind::DoublyUniform { q } => vec![expected_size(q) / n as f64; n],
            SamplingKind::Product { blocks } => {
                let mut p = vec![0.0; n];
                for b in blocks {
                    for &i in b {
                        p[i] = 1.0 / b.len() as f64;
                    }
                }
                p
            }
            SamplingKind::Graph { members, .. } | SamplingKind::Explicit { members } => {
                let mut p = vec![0.0; n];
                for m in members {
                    for &i in &m.set {
                        p[i] += m.prob;
                    }
                }
                p
            }
            SamplingKind::ConvexCombination { components } => {
                let mut p = vec![0.0; n];
                for (w, c) in components {
                    for (pi, ci) in p.iter_mut().zip(c.marginals()) {
                        *pi += w * ci;
                    }
                }
                p
            }
            SamplingKind::Intersection { first, second } => {
                first.marginals().iter().zip(second.marginals()).map(|(a, b)| a * b).collect()
            }
            SamplingKind::Restriction { inner, set } => {
                let keep = indicator(n, set);
                inner.marginals().iter().zip(keep).map(|(p, k)| p * k).collect()
            }
        }
    }

    /// Every coordinate has positive inclusion probability.
    pub fn is_proper(&self) -> bool {
        self.marginals().iter().all(|&p| p > 0.0)
    }

    /// `Ŝ = ∅` surely.
    pub fn is_nil(&self) -> bool {
        self.marginals().iter().sum::<f64>() <= 1e-14
    }

    /// First coordinate that is never selected, if any.
    pub fn first_improper(&self) -> Option<usize> {
        self.marginals().iter().position(|&p| p <= 0.0)
    }

    /// `(E|Ŝ|, E|Ŝ|²)`, exact.
    pub fn cardinality_moments(&self) -> (f64, f64) {
        let first: f64 = self.marginals().iter().sum();
        let second = match &self.kind {
            SamplingKind::Elementary { set } => (set.len() * set.len()) as f64,
            SamplingKind::Serial { .. } => 1.0,
            SamplingKind::TauNice { tau } => (tau * tau) as f64,
            SamplingKind::CTauDistributed { partition, tau } => {
                let k = (partition.len() * tau) as f64;
                k * k
            }
            SamplingKind::DoublyUniform { q } => {
                q.iter().enumerate().map(|(k, &qk)| qk * (k * k) as f64).sum()
            }
            SamplingKind::Product { blocks } => (blocks.len() * blocks.len()) as f64,
            SamplingKind::Graph { members, .. } | SamplingKind::Explicit { members } => {
                members.iter().map(|m| m.prob * (m.set.len() * m.set.len()) as f64).sum()
            }
            SamplingKind::ConvexCombination { components } => {
                components.iter().map(|(w, c)| w * c.cardinality_moments().1).sum()
            }
            SamplingKind::Intersection { .. } | SamplingKind::Restriction { .. } => {
                // eᵀ P e over the full probability matrix.
                let all: Vec<usize> = (0..self.n).collect();
                crate::prob_matrix::exact_submatrix(self, &all).sum()
            }
        };
        (first, second)
    }
}

/// Exact law of a sampling as a list of atoms with positive probability,
/// sorted lexicographically by set.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    pub n: usize,
    pub atoms: Vec<WeightedSet>,
}

impl Distribution {
    fn from_map(n: usize, map: BTreeMap<Vec<usize>, f64>) -> Self {
        let atoms = map.into_iter().filter(|(_, p)| *p > 0.0).map(|(set, prob)| WeightedSet { set, prob }).collect();
        Self { n, atoms }
    }

    pub fn total(&self) -> f64 {
        self.atoms.iter().map(|a| a.prob).sum()
    }

    pub fn probability_of(&self, set: &[usize]) -> f64 {
        self.atoms.iter().find(|a| a.set == set).map_or(0.0, |a| a.prob)
    }

    /// `E[g(Ŝ)]`.
    pub fn expect(&self, mut g: impl FnMut(&[usize]) -> f64) -> f64 {
        self.atoms.iter().map(|a| a.prob * g(&a.set)).sum()
    }

    pub fn marginals(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.n];
        for a in &self.atoms {
            for &i in &a.set {
                p[i] += a.prob;
            }
        }
        p
    }
}

/// Undirected graph on `{0, …, n-1}` whose edges join coordinates that must
/// not be updated together.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictGraph {
    pub n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl ConflictGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(invalid("graph_edges", format!("self-loop at {a}")));
            }
            if a >= n || b >= n {
                return Err(invalid("graph_edges", format!("edge ({a}, {b}) out of range for n = {n}")));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(Self { n, edges: set })
    }

    /// Edge `(i, i')` whenever some support set contains both.
    pub fn from_supports<'a>(n: usize, supports: impl IntoIterator<Item = &'a [usize]>) -> Self {
        let mut edges = BTreeSet::new();
        for s in supports {
            for (a, &i) in s.iter().enumerate() {
                for &k in &s[a + 1..] {
                    edges.insert((i.min(k), i.max(k)));
                }
            }
        }
        Self { n, edges }
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn is_independent(&self, set: &[usize]) -> bool {
        set.iter().enumerate().all(|(a, &i)| set[a + 1..].iter().all(|&k| !self.has_edge(i, k)))
    }
}

fn invalid(field: &'static str, reason: String) -> EsoError {
    EsoError::InvalidSpec { field, reason }
}

fn check_same_n(spec: &SamplingSpec, n: usize) -> Result<()> {
    if spec.n != n {
        return Err(invalid("n", format!("component has n = {}, expected {n}", spec.n)));
    }
    Ok(())
}

fn check_set(field: &'static str, set: &[usize], n: usize) -> Result<()> {
    if let Some(&i) = set.iter().find(|&&i| i >= n) {
        return Err(invalid(field, format!("index {i} out of range for n = {n}")));
    }
    if set.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid(field, "indices must be distinct".to_owned()));
    }
    Ok(())
}

fn check_law(field: &'static str, probs: impl Iterator<Item = f64>) -> Result<()> {
    let mut total = 0.0;
    for p in probs {
        if !p.is_finite() || p < 0.0 {
            return Err(invalid(field, format!("probability {p} is not a nonnegative number")));
        }
        total += p;
    }
    if libm::fabs(total - 1.0) > LAW_TOLERANCE {
        return Err(invalid(field, format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

fn check_members(members: &[WeightedSet], n: usize) -> Result<()> {
    for m in members {
        check_set("members", &m.set, n)?;
    }
    check_law("weights", members.iter().map(|m| m.prob))
}

fn check_partition(field: &'static str, blocks: &[Vec<usize>], n: usize) -> Result<()> {
    if blocks.is_empty() {
        return Err(invalid(field, "partition needs at least one block".into()));
    }
    let mut seen = vec![false; n];
    for b in blocks {
        if b.is_empty() {
            return Err(invalid(field, "empty block".into()));
        }
        check_set(field, b, n)?;
        for &i in b {
            if seen[i] {
                return Err(invalid(field, format!("index {i} appears in two blocks")));
            }
            seen[i] = true;
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(invalid(field, format!("index {i} is not covered by any block")));
    }
    Ok(())
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

fn indicator(n: usize, set: &[usize]) -> Vec<f64> {
    let mut v = vec![0.0; n];
    for &i in set {
        v[i] = 1.0;
    }
    v
}

pub(crate) fn expected_size(q: &[f64]) -> f64 {
    q.iter().enumerate().map(|(k, &qk)| qk * k as f64).sum()
}

/// Intersection of two sorted index lists.
pub fn intersect_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Visit every `k`-subset of `items` in lexicographic position order.
pub fn for_each_combination(items: &[usize], k: usize, mut f: impl FnMut(&[usize])) {
    let n = items.len();
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    let mut buf = vec![0; k];
    loop {
        for (b, &i) in buf.iter_mut().zip(&idx) {
            *b = items[i];
        }
        f(&buf);
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Visit the sorted union of one choice from each list.
fn for_each_product(lists: &[Vec<Vec<usize>>], mut f: impl FnMut(Vec<usize>)) {
    if lists.iter().any(Vec::is_empty) {
        return;
    }
    let mut odometer = vec![0usize; lists.len()];
    loop {
        let mut set: Vec<usize> = odometer.iter().zip(lists).flat_map(|(&k, l)| l[k].iter().copied()).collect();
        set.sort_unstable();
        f(set);
        let mut pos = lists.len();
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            odometer[pos] += 1;
            if odometer[pos] < lists[pos].len() {
                break;
            }
            odometer[pos] = 0;
        }
    }
}

/// Uniform `k`-subset of `items` by partial Fisher–Yates, returned sorted.
fn choose_subset<R: Rng + ?Sized>(items: &[usize], k: usize, rng: &mut R) -> Vec<usize> {
    let mut pool = items.to_vec();
    let len = pool.len();
    for i in 0..k.min(len) {
        let j = i + below(rng, len - i);
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool.sort_unstable();
    pool
}
