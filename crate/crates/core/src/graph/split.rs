use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Graph, GraphDataset};
use crate::error::{Error, Result};
use crate::numerics::RngStream;

/// Four disjoint node sets of one dataset. Each set is sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub target_train: Vec<usize>,
    pub target_test: Vec<usize>,
    pub shadow_train: Vec<usize>,
    pub shadow_test: Vec<usize>,
}

impl SplitPlan {
    pub fn sets(&self) -> [&[usize]; 4] {
        [
            &self.target_train,
            &self.target_test,
            &self.shadow_train,
            &self.shadow_test,
        ]
    }
}

/// Halves a random permutation into target/shadow, then halves each again
/// into train/test. Odd sizes favour the earlier set.
pub fn make_split_plan(dataset: &GraphDataset, seed: u64) -> Result<SplitPlan> {
    let n = dataset.node_count();
    if n < 4 {
        return Err(Error::invalid(format!("cannot split {n} nodes four ways")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut RngStream::new(seed).derive("split"));

    let (target, shadow) = perm.split_at(n.div_ceil(2));
    let halve = |s: &[usize]| -> (Vec<usize>, Vec<usize>) {
        let (a, b) = s.split_at(s.len().div_ceil(2));
        let (mut a, mut b) = (a.to_vec(), b.to_vec());
        a.sort_unstable();
        b.sort_unstable();
        (a, b)
    };
    let (target_train, target_test) = halve(target);
    let (shadow_train, shadow_test) = halve(shadow);
    Ok(SplitPlan {
        target_train,
        target_test,
        shadow_train,
        shadow_test,
    })
}

/// Induced sub-dataset over `nodes`; node `nodes[i]` becomes node `i`.
/// Edges leaving the set are dropped.
pub fn induce(dataset: &GraphDataset, nodes: &[usize]) -> Result<GraphDataset> {
    if nodes.is_empty() {
        return Err(Error::invalid("induce: empty node set"));
    }
    let n = dataset.node_count();
    let mut local = vec![usize::MAX; n];
    for (i, &v) in nodes.iter().enumerate() {
        dataset.check_node(v)?;
        if local[v] != usize::MAX {
            return Err(Error::invalid(format!("induce: node {v} listed twice")));
        }
        local[v] = i;
    }
    let lists: Vec<Vec<usize>> = nodes
        .iter()
        .map(|&v| {
            dataset
                .graph
                .neighbors(v)
                .iter()
                .filter_map(|&u| (local[u] != usize::MAX).then_some(local[u]))
                .collect()
        })
        .collect();
    GraphDataset::new(
        Graph::from_lists(lists),
        dataset.features.select_rows(nodes),
        nodes.iter().map(|&v| dataset.labels[v]).collect(),
        dataset.class_count,
    )
}
