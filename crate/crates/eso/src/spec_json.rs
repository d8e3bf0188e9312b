//! JSON form of a sampling spec. Indices are 1-based on the wire.
//!
//! ```json
//! {"kind": "tau_nice", "n": 10, "tau": 3}
//! {"kind": "ctau_distributed", "partition": [[1, 2], [3, 4]], "tau": 1}
//! {"kind": "convex_combination", "weights": [0.5, 0.5], "components": [ … ]}
//! ```

use std::path::Path;

use eso_core::{SamplingKind, SamplingSpec, WeightedSet};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireMember {
    pub set: Vec<usize>,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub members: Option<Vec<WireMember>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<WireSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_edges: Option<Vec<[usize; 2]>>,
}

fn need<T>(v: Option<T>, kind: &str, field: &str) -> Result<T, String> {
    v.ok_or_else(|| format!("`{kind}` sampling requires field `{field}`"))
}

fn zero_based(v: Vec<usize>, field: &str) -> Result<Vec<usize>, String> {
    v.into_iter()
        .map(|i| i.checked_sub(1).ok_or_else(|| format!("`{field}` contains index 0; indices are 1-based")))
        .collect()
}

fn zero_based_blocks(v: Vec<Vec<usize>>, field: &str) -> Result<Vec<Vec<usize>>, String> {
    v.into_iter().map(|b| zero_based(b, field)).collect()
}

fn members(v: Vec<WireMember>) -> Result<Vec<WeightedSet>, String> {
    v.into_iter().map(|m| Ok(WeightedSet::new(zero_based(m.set, "members")?, m.prob))).collect()
}

impl WireSpec {
    pub fn into_spec(self) -> Result<SamplingSpec, String> {
        let kind = self.kind.clone();
        let k = kind.as_str();
        let spec = match k {
            "elementary" => SamplingSpec::elementary(need(self.n, k, "n")?, zero_based(need(self.set, k, "set")?, "set")?),
            "serial" => match (self.q, self.n) {
                (Some(q), _) => SamplingSpec::serial(q),
                (None, Some(n)) => SamplingSpec::uniform_serial(n),
                (None, None) => return Err("`serial` sampling requires `q` or `n`".into()),
            },
            "tau_nice" => SamplingSpec::tau_nice(need(self.n, k, "n")?, need(self.tau, k, "tau")?),
            "ctau_distributed" => SamplingSpec::ctau_distributed(
                zero_based_blocks(need(self.partition, k, "partition")?, "partition")?,
                need(self.tau, k, "tau")?,
            ),
            "doubly_uniform" => SamplingSpec::doubly_uniform(need(self.q, k, "q")?),
            "product" => SamplingSpec::product(zero_based_blocks(need(self.blocks, k, "blocks")?, "blocks")?),
            "graph" => {
                let edges = need(self.graph_edges, k, "graph_edges")?
                    .into_iter()
                    .map(|[a, b]| Ok((zero_based(vec![a], "graph_edges")?[0], zero_based(vec![b], "graph_edges")?[0])))
                    .collect::<Result<Vec<_>, String>>()?;
                SamplingSpec::graph(need(self.n, k, "n")?, edges, members(need(self.members, k, "members")?)?)
            }
            "explicit" => SamplingSpec::explicit(need(self.n, k, "n")?, members(need(self.members, k, "members")?)?),
            "convex_combination" => {
                let comps = need(self.components, k, "components")?;
                let weights = need(self.weights, k, "weights")?;
                if comps.len() != weights.len() {
                    return Err(format!("{} weights for {} components", weights.len(), comps.len()));
                }
                let parts = weights
                    .into_iter()
                    .zip(comps)
                    .map(|(w, c)| Ok((w, c.into_spec()?)))
                    .collect::<Result<Vec<_>, String>>()?;
                SamplingSpec::convex_combination(parts)
            }
            "intersection" => {
                let comps = need(self.components, k, "components")?;
                let [a, b]: [WireSpec; 2] =
                    comps.try_into().map_err(|_| "`intersection` needs exactly two components".to_string())?;
                SamplingSpec::intersection(a.into_spec()?, b.into_spec()?)
            }
            "restriction" => {
                let comps = need(self.components, k, "components")?;
                let [inner]: [WireSpec; 1] =
                    comps.try_into().map_err(|_| "`restriction` needs exactly one component".to_string())?;
                SamplingSpec::restriction(inner.into_spec()?, zero_based(need(self.set, k, "set")?, "set")?)
            }
            other => return Err(format!("unknown sampling kind `{other}`")),
        };
        if let Some(n) = self.n {
            if n != spec.n {
                return Err(format!("`n` = {n} disagrees with the {} coordinates implied by the spec", spec.n));
            }
        }
        spec.validate().map_err(|e| e.to_string())?;
        Ok(spec)
    }

    pub fn from_spec(spec: &SamplingSpec) -> Self {
        let one = |v: &[usize]| v.iter().map(|i| i + 1).collect::<Vec<_>>();
        let blocks = |b: &[Vec<usize>]| b.iter().map(|x| one(x)).collect::<Vec<_>>();
        let wire_members =
            |m: &[WeightedSet]| m.iter().map(|w| WireMember { set: one(&w.set), prob: w.prob }).collect::<Vec<_>>();
        let mut w = WireSpec { kind: spec.kind_name().to_string(), n: Some(spec.n), ..Default::default() };
        match &spec.kind {
            SamplingKind::Elementary { set } => w.set = Some(one(set)),
            SamplingKind::Serial { q } => w.q = Some(q.clone()),
            SamplingKind::TauNice { tau } => w.tau = Some(*tau),
            SamplingKind::CTauDistributed { partition, tau } => {
                w.partition = Some(blocks(partition));
                w.tau = Some(*tau);
            }
            SamplingKind::DoublyUniform { q } => w.q = Some(q.clone()),
            SamplingKind::Product { blocks: b } => w.blocks = Some(blocks(b)),
            SamplingKind::Graph { edges, members } => {
                w.graph_edges = Some(edges.iter().map(|&(a, b)| [a + 1, b + 1]).collect());
                w.members = Some(wire_members(members));
            }
            SamplingKind::Explicit { members } => w.members = Some(wire_members(members)),
            SamplingKind::ConvexCombination { components } => {
                w.weights = Some(components.iter().map(|c| c.0).collect());
                w.components = Some(components.iter().map(|c| WireSpec::from_spec(&c.1)).collect());
            }
            SamplingKind::Intersection { first, second } => {
                w.components = Some(vec![WireSpec::from_spec(first), WireSpec::from_spec(second)]);
            }
            SamplingKind::Restriction { inner, set } => {
                w.components = Some(vec![WireSpec::from_spec(inner)]);
                w.set = Some(one(set));
            }
        }
        w
    }
}

pub fn parse_spec(text: &str) -> Result<SamplingSpec, String> {
    let wire: WireSpec = serde_json::from_str(text).map_err(|e| e.to_string())?;
    wire.into_spec()
}

pub fn spec_to_json(spec: &SamplingSpec) -> String {
    serde_json::to_string_pretty(&WireSpec::from_spec(spec)).expect("spec serializes")
}

/// Read a spec from a path, or parse it inline when the argument starts
/// with `{`.
pub fn load_spec(arg: &str) -> Result<SamplingSpec, CliError> {
    if arg.trim_start().starts_with('{') {
        return parse_spec(arg).map_err(|e| CliError::input("inline sampling spec", e));
    }
    let text = std::fs::read_to_string(Path::new(arg)).map_err(|e| CliError::input(arg, e))?;
    parse_spec(&text).map_err(|e| CliError::input(arg, e))
}
