//! Graph storage, datasets, splitting and structural queries.

mod io;
mod metrics;
mod split;
mod subgraph;
mod synth;

pub use io::{load_dataset, write_dataset};
pub use metrics::{cosine_similarity, feature_similarity, node_metric, NodeMetric};
pub use split::{induce, make_split_plan, SplitPlan};
pub use subgraph::{khop_subgraph, SubgraphView};
pub use synth::{generate_synthetic, SyntheticParams};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Row `i` holds the feature vector of node `i`.
pub type FeatureMatrix = Matrix;
/// Integer class labels, one per node.
pub type LabelVector = Vec<usize>;

/// Undirected graph in compressed sparse row form.
///
/// Each undirected edge is stored in both endpoint lists; lists are sorted
/// and duplicate-free. Base graphs never contain self-loops; the only graph
/// carrying one is the single-node query graph from [`Graph::self_loop`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph {
            offsets: vec![0; n + 1],
            targets: Vec::new(),
        }
    }

    /// Builds a simple undirected graph. Duplicate edges (in either
    /// orientation) collapse to one; self-loops and out-of-range endpoints are
    /// rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut lists: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(Error::NodeOutOfRange { node: w, count: n });
                }
            }
            if u == v {
                return Err(Error::invalid(format!("self-loop on node {u}")));
            }
            lists[u].push(v);
            lists[v].push(u);
        }
        Ok(Self::from_lists(lists))
    }

    pub(crate) fn from_lists(mut lists: Vec<Vec<usize>>) -> Self {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for l in &mut lists {
            l.sort_unstable();
            l.dedup();
            targets.extend_from_slice(l);
            offsets.push(targets.len());
        }
        Graph { offsets, targets }
    }

    /// A single node connected to itself, used to wrap a lone feature vector
    /// into a graph-shaped query.
    pub fn self_loop() -> Self {
        Graph {
            offsets: vec![0, 1],
            targets: vec![0],
        }
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Number of undirected edges (a self-loop counts once).
    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    /// Each undirected edge once, as `(u, v)` with `u <= v`, in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.node_count()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| u <= v)
                .map(move |v| (u, v))
        })
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.node_count() && self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn has_self_loops(&self) -> bool {
        (0..self.node_count()).any(|v| self.has_edge(v, v))
    }

    /// Full structural scan: sorted unique lists, indices in range, symmetry
    /// and (when `allow_self_loops` is false) no self-loops.
    pub fn validate(&self, allow_self_loops: bool) -> Result<()> {
        let n = self.node_count();
        for v in 0..n {
            let nb = self.neighbors(v);
            if nb.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid(format!(
                    "neighbor list of {v} unsorted or duplicated"
                )));
            }
            for &u in nb {
                if u >= n {
                    return Err(Error::NodeOutOfRange { node: u, count: n });
                }
                if u == v && !allow_self_loops {
                    return Err(Error::invalid(format!("self-loop on node {v}")));
                }
                if !self.has_edge(u, v) {
                    return Err(Error::invalid(format!("edge ({v},{u}) not symmetric")));
                }
            }
        }
        Ok(())
    }
}

/// A graph with node features and labels.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphDataset {
    pub graph: Graph,
    pub features: FeatureMatrix,
    pub labels: LabelVector,
    pub class_count: usize,
}

impl GraphDataset {
    pub fn new(
        graph: Graph,
        features: FeatureMatrix,
        labels: LabelVector,
        class_count: usize,
    ) -> Result<Self> {
        let n = graph.node_count();
        if features.rows() != n {
            return Err(Error::RowCountMismatch(format!(
                "{} feature rows for {n} nodes",
                features.rows()
            )));
        }
        if labels.len() != n {
            return Err(Error::RowCountMismatch(format!(
                "{} labels for {n} nodes",
                labels.len()
            )));
        }
        if class_count < 2 {
            return Err(Error::invalid("class_count must be at least 2"));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= class_count) {
            return Err(Error::invalid(format!(
                "label {bad} >= class_count {class_count}"
            )));
        }
        if !features.is_finite() {
            return Err(Error::NonFinite("feature matrix".into()));
        }
        Ok(GraphDataset {
            graph,
            features,
            labels,
            class_count,
        })
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub(crate) fn check_node(&self, v: usize) -> Result<()> {
        if v >= self.node_count() {
            return Err(Error::NodeOutOfRange {
                node: v,
                count: self.node_count(),
            });
        }
        Ok(())
    }

    /// The one-node dataset used by a 0-hop query: `x_v` with a self-loop.
    pub fn zero_hop_view(&self, v: usize) -> Result<GraphDataset> {
        self.check_node(v)?;
        Ok(GraphDataset {
            graph: Graph::self_loop(),
            features: self.features.select_rows(&[v]),
            labels: vec![self.labels[v]],
            class_count: self.class_count,
        })
    }

    /// Same nodes, different edge set.
    pub fn with_graph(&self, graph: Graph) -> Result<GraphDataset> {
        GraphDataset::new(
            graph,
            self.features.clone(),
            self.labels.clone(),
            self.class_count,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_graph_degrees() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let deg: Vec<_> = (0..3).map(|v| g.degree(v)).collect();
        assert_eq!(deg, vec![1, 2, 1]);
        assert_eq!(g.edge_count(), 2);
        g.validate(false).unwrap();
    }

    #[test]
    fn duplicate_orientations_collapse() {
        let g = Graph::from_edges(2, &[(0, 1), (1, 0), (0, 1)]).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.neighbors(0), &[1]);
    }

    #[test]
    fn rejects_self_loops_and_out_of_range() {
        assert!(Graph::from_edges(2, &[(1, 1)]).is_err());
        assert!(matches!(
            Graph::from_edges(2, &[(0, 2)]),
            Err(Error::NodeOutOfRange { node: 2, .. })
        ));
    }

    #[test]
    fn self_loop_query_graph() {
        let g = Graph::self_loop();
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.neighbors(0), &[0]);
        assert!(g.validate(false).is_err());
        g.validate(true).unwrap();
    }

    #[test]
    fn dataset_validation() {
        let g = Graph::empty(3);
        let x = Matrix::zeros(3, 2);
        assert!(GraphDataset::new(g.clone(), x.clone(), vec![0, 1], 2).is_err());
        assert!(GraphDataset::new(g.clone(), x.clone(), vec![0, 1, 2], 2).is_err());
        assert!(GraphDataset::new(g.clone(), x.clone(), vec![0, 0, 0], 1).is_err());
        let mut bad = x.clone();
        bad.set(0, 0, f64::INFINITY);
        assert!(GraphDataset::new(g.clone(), bad, vec![0, 1, 0], 2).is_err());
        GraphDataset::new(g, x, vec![0, 1, 0], 2).unwrap();
    }
}
