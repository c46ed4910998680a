use std::collections::VecDeque;

use super::{Graph, GraphDataset};
use crate::error::Result;

/// The induced subgraph on all nodes within `k` hops of a center node.
///
/// `members` is sorted by original id, so the local index of a node is its
/// position in `members` and local neighbor lists keep the original order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubgraphView {
    pub members: Vec<usize>,
    pub graph: Graph,
    pub center: usize,
}

impl SubgraphView {
    pub fn local_index(&self, original: usize) -> Option<usize> {
        self.members.binary_search(&original).ok()
    }

    /// Induced edges as local `(u, v)` pairs with `u < v`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.graph.edges().collect()
    }

    /// Materialises the view as a dataset carrying the members' features and
    /// labels.
    pub fn to_dataset(&self, source: &GraphDataset) -> Result<GraphDataset> {
        GraphDataset::new(
            self.graph.clone(),
            source.features.select_rows(&self.members),
            self.members.iter().map(|&v| source.labels[v]).collect(),
            source.class_count,
        )
    }
}

/// Breadth-first closure to distance `k` around `v`, with the induced edges.
pub fn khop_subgraph(dataset: &GraphDataset, v: usize, k: usize) -> Result<SubgraphView> {
    dataset.check_node(v)?;
    let g = &dataset.graph;
    let mut dist = vec![usize::MAX; g.node_count()];
    let mut queue = VecDeque::new();
    let mut members = vec![v];
    dist[v] = 0;
    queue.push_back(v);
    while let Some(u) = queue.pop_front() {
        if dist[u] == k {
            continue;
        }
        for &w in g.neighbors(u) {
            if dist[w] == usize::MAX {
                dist[w] = dist[u] + 1;
                members.push(w);
                queue.push_back(w);
            }
        }
    }
    members.sort_unstable();

    let local = |orig: usize| members.binary_search(&orig).ok();
    let lists: Vec<Vec<usize>> = members
        .iter()
        .map(|&u| g.neighbors(u).iter().filter_map(|&w| local(w)).collect())
        .collect();
    let center = local(v).expect("center is a member");
    Ok(SubgraphView {
        graph: Graph::from_lists(lists),
        members,
        center,
    })
}
