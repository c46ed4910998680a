use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Graph, GraphDataset};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, RngStream};

/// Parameters of the homophilous stochastic block model generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticParams {
    pub n: usize,
    pub classes: usize,
    pub dim: usize,
    pub intra_p: f64,
    pub inter_p: f64,
    pub feature_noise: f64,
    pub seed: u64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            n: 3000,
            classes: 6,
            dim: 256,
            intra_p: 0.01,
            inter_p: 0.0005,
            feature_noise: 0.5,
            seed: 1,
        }
    }
}

impl SyntheticParams {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("intra_p", self.intra_p), ("inter_p", self.inter_p)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("{name} = {p} is not a probability")));
            }
        }
        if self.dim < 1 {
            return Err(Error::invalid("feature dimension must be at least 1"));
        }
        if self.classes < 2 {
            return Err(Error::invalid("need at least 2 classes"));
        }
        if self.n < self.classes {
            return Err(Error::invalid("n must be at least the class count"));
        }
        if !(self.feature_noise >= 0.0 && self.feature_noise.is_finite()) {
            return Err(Error::invalid("feature_noise must be finite and >= 0"));
        }
        Ok(())
    }

    /// Expected undirected edge count under the block model.
    pub fn expected_edges(&self) -> f64 {
        let sizes: Vec<usize> = (0..self.classes)
            .map(|c| (self.n + self.classes - 1 - c) / self.classes)
            .collect();
        let total_pairs = (self.n * (self.n - 1) / 2) as f64;
        let intra_pairs: f64 = sizes
            .iter()
            .map(|&s| (s * s.saturating_sub(1) / 2) as f64)
            .sum();
        intra_pairs * self.intra_p + (total_pairs - intra_pairs) * self.inter_p
    }
}

/// Samples a stochastic block model with class-centroid features.
///
/// Node `i` has class `i % classes`. Each unordered pair is linked with
/// `intra_p` when the classes match and `inter_p` otherwise. Features are the
/// class centroid (a point on the unit sphere) plus i.i.d. Gaussian noise.
pub fn generate_synthetic(params: &SyntheticParams) -> Result<GraphDataset> {
    params.validate()?;
    let root = RngStream::new(params.seed).derive("synthetic");
    let n = params.n;
    let c = params.classes;
    let d = params.dim;

    let mut centroid_rng = root.derive("centroids");
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(c);
    let mut attempts = 0;
    while centroids.len() < c {
        attempts += 1;
        if attempts > 1000 {
            return Err(Error::invalid(format!(
                "cannot draw {c} distinct centroids in dimension {d}"
            )));
        }
        let mut v: Vec<f64> = (0..d)
            .map(|_| centroid_rng.sample(StandardNormal))
            .collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        if centroids.iter().any(|o| o == &v) {
            continue;
        }
        centroids.push(v);
    }

    let labels: Vec<usize> = (0..n).map(|i| i % c).collect();

    let mut edge_rng = root.derive("edges");
    let mut lists: Vec<Vec<usize>> = vec![Vec::new(); n];
    for u in 0..n {
        for v in (u + 1)..n {
            let p = if labels[u] == labels[v] {
                params.intra_p
            } else {
                params.inter_p
            };
            if edge_rng.random::<f64>() < p {
                lists[u].push(v);
                lists[v].push(u);
            }
        }
    }

    let mut noise_rng = root.derive("features");
    let mut features = Matrix::zeros(n, d);
    for i in 0..n {
        let centroid = &centroids[labels[i]];
        for (k, x) in features.row_mut(i).iter_mut().enumerate() {
            let z: f64 = noise_rng.sample(StandardNormal);
            *x = centroid[k] + params.feature_noise * z;
        }
    }

    GraphDataset::new(Graph::from_lists(lists), features, labels, c)
}
