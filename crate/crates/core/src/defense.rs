//! Target-side defenses: random edge addition and label-only output.

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphDataset};
use crate::models::{predict, GnnModel, Posteriors, QueryMode};
use crate::numerics::RngStream;

/// Which defense the target deploys.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DefenseDoc", into = "DefenseDoc")]
pub enum DefenseConfig {
    #[default]
    None,
    /// Adds `multiplier * |E|` random edges to the target training graph.
    EdgeAddition { multiplier: f64 },
    /// The target answers queries with a one-hot of its predicted class.
    LabelOnly,
}

/// On-disk form: `{"kind": ..., "multiplier": ...}` with the multiplier
/// present only for edge addition.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DefenseDoc {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    multiplier: Option<f64>,
}

impl TryFrom<DefenseDoc> for DefenseConfig {
    type Error = String;

    fn try_from(d: DefenseDoc) -> std::result::Result<Self, String> {
        match (d.kind.as_str(), d.multiplier) {
            ("none", None) => Ok(DefenseConfig::None),
            ("label_only", None) => Ok(DefenseConfig::LabelOnly),
            ("edge_addition", Some(multiplier)) => Ok(DefenseConfig::EdgeAddition { multiplier }),
            ("edge_addition", None) => Err("edge_addition needs a multiplier".into()),
            ("none" | "label_only", Some(_)) => Err(format!("`{}` takes no multiplier", d.kind)),
            (other, _) => Err(format!("unknown defense `{other}`")),
        }
    }
}

impl From<DefenseConfig> for DefenseDoc {
    fn from(d: DefenseConfig) -> Self {
        let multiplier = match d {
            DefenseConfig::EdgeAddition { multiplier } => Some(multiplier),
            _ => None,
        };
        DefenseDoc {
            kind: d.name().to_string(),
            multiplier,
        }
    }
}

impl DefenseConfig {
    pub fn validate(&self) -> Result<()> {
        if let DefenseConfig::EdgeAddition { multiplier } = *self {
            if !(multiplier.is_finite() && multiplier >= 0.0) {
                return Err(Error::config(
                    "defense.multiplier",
                    format!("must be a finite value >= 0, got {multiplier}"),
                ));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            DefenseConfig::None => "none",
            DefenseConfig::EdgeAddition { .. } => "edge_addition",
            DefenseConfig::LabelOnly => "label_only",
        }
    }
}

/// Copy of `dataset` with `round(multiplier * |E|)` new undirected edges,
/// drawn uniformly without replacement from the absent simple pairs.
pub fn add_random_edges(
    dataset: &GraphDataset,
    multiplier: f64,
    rng: &mut RngStream,
) -> Result<GraphDataset> {
    if !(multiplier.is_finite() && multiplier >= 0.0) {
        return Err(Error::invalid(format!(
            "edge multiplier must be >= 0, got {multiplier}"
        )));
    }
    let g = &dataset.graph;
    let n = g.node_count() as u64;
    let existing = g.edge_count() as u64;
    let wanted = (multiplier * existing as f64).round() as u64;
    if wanted == 0 {
        return Ok(dataset.clone());
    }
    let all_pairs = n * n.saturating_sub(1) / 2;
    let absent = all_pairs - existing;
    if wanted > absent {
        return Err(Error::invalid(format!(
            "cannot add {wanted} edges: only {absent} absent pairs"
        )));
    }

    let mut added: Vec<(usize, usize)> = Vec::with_capacity(wanted as usize);
    if wanted * 2 > absent {
        // dense request: enumerate the complement and sample a subset
        let mut pool: Vec<(usize, usize)> = Vec::with_capacity(absent as usize);
        for u in 0..n as usize {
            for v in u + 1..n as usize {
                if !g.has_edge(u, v) {
                    pool.push((u, v));
                }
            }
        }
        let picks = rand::seq::index::sample(rng, pool.len(), wanted as usize);
        added.extend(picks.iter().map(|i| pool[i]));
    } else {
        let mut seen: HashSet<(usize, usize)> = HashSet::with_capacity(wanted as usize);
        while (added.len() as u64) < wanted {
            let u = rng.random_range(0..n as usize);
            let v = rng.random_range(0..n as usize);
            if u == v {
                continue;
            }
            let pair = (u.min(v), u.max(v));
            if g.has_edge(pair.0, pair.1) || !seen.insert(pair) {
                continue;
            }
            added.push(pair);
        }
    }

    let mut edges: Vec<(usize, usize)> = g.edges().collect();
    edges.extend(added);
    dataset.with_graph(Graph::from_edges(g.node_count(), &edges)?)
}

/// One-hot of the predicted class (ties to the lowest index).
pub fn label_only_posterior(p: &Posteriors) -> Vec<f64> {
    let mut out = vec![0.0; p.len()];
    if !p.is_empty() {
        out[p.argmax()] = 1.0;
    }
    out
}

/// One-hots of the 0-hop and 2-hop predictions for node `v`.
pub fn label_only_attack_features(
    target: &GnnModel,
    partition: &GraphDataset,
    v: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let zero = predict(target, partition, v, QueryMode::ZeroHop)?;
    let two = predict(target, partition, v, QueryMode::TwoHop)?;
    Ok((label_only_posterior(&zero), label_only_posterior(&two)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_synthetic, SyntheticParams};
    use crate::models::{train, Arch, ModelConfig};
    use crate::numerics::Matrix;

    fn ring(n: usize) -> GraphDataset {
        let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        GraphDataset::new(
            Graph::from_edges(n, &edges).unwrap(),
            Matrix::filled(n, 2, 0.5),
            (0..n).map(|i| i % 2).collect(),
            2,
        )
        .unwrap()
    }

    #[test]
    fn multiplier_zero_is_identity() {
        let ds = ring(10);
        let out = add_random_edges(&ds, 0.0, &mut RngStream::new(1)).unwrap();
        assert_eq!(out.graph, ds.graph);
    }

    #[test]
    fn doubling_adds_exactly_twice_the_edges() {
        let ds = ring(10);
        assert_eq!(ds.graph.edge_count(), 10);
        for seed in 0..20 {
            let out = add_random_edges(&ds, 2.0, &mut RngStream::new(seed)).unwrap();
            assert_eq!(out.graph.edge_count(), 30);
            out.graph.validate(false).unwrap();
            for (u, v) in ds.graph.edges() {
                assert!(out.graph.has_edge(u, v));
            }
            let deg_sum: usize = (0..10).map(|v| out.graph.degree(v)).sum();
            assert_eq!(deg_sum, 3 * 20);
        }
    }

    #[test]
    fn sparse_path_keeps_edges_and_triples_mean_degree() {
        let ds = generate_synthetic(&SyntheticParams {
            n: 300,
            ..Default::default()
        })
        .unwrap();
        let before = ds.graph.edge_count();
        let out = add_random_edges(&ds, 2.0, &mut RngStream::new(4)).unwrap();
        out.graph.validate(false).unwrap();
        assert_eq!(out.graph.edge_count(), 3 * before);
        assert!(ds.graph.edges().all(|(u, v)| out.graph.has_edge(u, v)));
    }

    #[test]
    fn too_many_edges_is_an_error() {
        let ds = ring(5); // 10 pairs, 5 present
        assert!(add_random_edges(&ds, 1.0, &mut RngStream::new(0)).is_ok());
        assert!(add_random_edges(&ds, 1.2, &mut RngStream::new(0)).is_err());
        let full = add_random_edges(&ds, 1.0, &mut RngStream::new(0)).unwrap();
        assert_eq!(full.graph.edge_count(), 10);
    }

    #[test]
    fn one_hot_cases() {
        let p = Posteriors::new(vec![0.1, 0.7, 0.2]).unwrap();
        assert_eq!(label_only_posterior(&p), vec![0.0, 1.0, 0.0]);
        let u = Posteriors::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(label_only_posterior(&u), vec![1.0, 0.0]);
        let once = Posteriors::new(label_only_posterior(&p)).unwrap();
        assert_eq!(label_only_posterior(&once), label_only_posterior(&p));
        assert_eq!(once.argmax(), p.argmax());
    }

    #[test]
    fn mlp_target_gives_identical_one_hots() {
        let ds = generate_synthetic(&SyntheticParams {
            n: 60,
            dim: 8,
            ..Default::default()
        })
        .unwrap();
        let cfg = ModelConfig {
            epochs: 5,
            ..ModelConfig::new(Arch::Mlp)
        };
        let model = train(&cfg, &ds, &RngStream::new(0)).unwrap();
        for v in 0..ds.node_count() {
            let (a, b) = label_only_attack_features(&model, &ds, v).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.iter().sum::<f64>(), 1.0);
            assert!(a.iter().all(|&x| x == 0.0 || x == 1.0));
        }
    }

    #[test]
    fn config_parsing() {
        let d: DefenseConfig =
            serde_json::from_str(r#"{"kind":"edge_addition","multiplier":20}"#).unwrap();
        assert_eq!(d, DefenseConfig::EdgeAddition { multiplier: 20.0 });
        assert!(DefenseConfig::EdgeAddition { multiplier: -1.0 }
            .validate()
            .is_err());
        assert!(
            serde_json::from_str::<DefenseConfig>(r#"{"kind":"label_only","multiplier":2}"#)
                .is_err()
        );
        assert!(serde_json::from_str::<DefenseConfig>(r#"{"kind":"edge_addition"}"#).is_err());
        let text = serde_json::to_string(&DefenseConfig::LabelOnly).unwrap();
        assert_eq!(text, r#"{"kind":"label_only"}"#);
    }
}
