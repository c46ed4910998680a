use super::config::{Arch, ModelConfig};
use super::layers::{GatLayer, GinLayer, Layer, LayerCache, Linear, SageLayer};
use crate::error::{Error, Result};
use crate::graph::{Graph, GraphDataset};
use crate::numerics::{adam_step, cross_entropy, dropout, Matrix, ParamTensor, RngStream};

/// A node classifier: architecture, configuration and trainable layers.
#[derive(Clone, Debug, PartialEq)]
pub struct GnnModel {
    config: ModelConfig,
    in_dim: usize,
    class_count: usize,
    pub(crate) layers: Vec<Layer>,
}

struct StepCache {
    layer: LayerCache,
    pre: Option<Matrix>,
    mask: Option<Matrix>,
}

impl GnnModel {
    /// Freshly initialised model (Glorot weights, zero biases, GIN `ε = 0`).
    pub fn new(
        config: &ModelConfig,
        in_dim: usize,
        class_count: usize,
        rng: &RngStream,
    ) -> Result<Self> {
        config.validate()?;
        if in_dim == 0 || class_count < 2 {
            return Err(Error::invalid("need in_dim >= 1 and class_count >= 2"));
        }
        let mut dims = vec![in_dim];
        dims.extend(std::iter::repeat_n(config.hidden, config.layers - 1));
        dims.push(class_count);
        let last = config.layers - 1;
        let layers = (0..config.layers)
            .map(|i| {
                let mut r = rng.derive(&format!("layer{i}"));
                let (a, b) = (dims[i], dims[i + 1]);
                match config.arch {
                    Arch::Mlp => Layer::Linear(Linear::new(a, b, &mut r)),
                    Arch::Sage => Layer::Sage(SageLayer::new(a, b, &mut r)),
                    Arch::Gin => Layer::Gin(GinLayer::new(a, b, config.gin_mlp_layers, &mut r)),
                    Arch::Gat if i < last => Layer::Gat(GatLayer::new(
                        a,
                        b / config.heads.0,
                        config.heads.0,
                        true,
                        &mut r,
                    )),
                    Arch::Gat => Layer::Gat(GatLayer::new(a, b, config.heads.1, false, &mut r)),
                }
            })
            .collect();
        Ok(GnnModel {
            config: config.clone(),
            in_dim,
            class_count,
            layers,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn arch(&self) -> Arch {
        self.config.arch
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    fn check_input(&self, graph: &Graph, x: &Matrix) -> Result<()> {
        if x.cols() != self.in_dim {
            return Err(Error::shape(format!(
                "feature dim {} but model expects {}",
                x.cols(),
                self.in_dim
            )));
        }
        if x.rows() != graph.node_count() {
            return Err(Error::shape(format!(
                "{} feature rows for {} graph nodes",
                x.rows(),
                graph.node_count()
            )));
        }
        Ok(())
    }

    fn forward_cached(
        &self,
        graph: &Graph,
        x: &Matrix,
        mut dropout_rng: Option<&mut RngStream>,
    ) -> Result<(Matrix, Vec<StepCache>)> {
        self.check_input(graph, x)?;
        let act = self.config.hidden_activation();
        let last = self.layers.len() - 1;
        let mut h = x.clone();
        let mut caches = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let (y, lc) = layer.forward(graph, &h);
            if i == last {
                caches.push(StepCache {
                    layer: lc,
                    pre: None,
                    mask: None,
                });
                h = y;
                break;
            }
            let a = act.forward(&y);
            let (a, mask) = match dropout_rng.as_deref_mut() {
                Some(rng) => dropout(&a, self.config.dropout, rng, true)?,
                None => (a, None),
            };
            caches.push(StepCache {
                layer: lc,
                pre: Some(y),
                mask,
            });
            h = a;
        }
        Ok((h, caches))
    }

    /// Inference logits over a graph and its feature matrix.
    pub fn forward(&self, graph: &Graph, x: &Matrix) -> Result<Matrix> {
        Ok(self.forward_cached(graph, x, None)?.0)
    }

    /// Forward pass with dropout drawn from `rng` (training mode).
    pub fn forward_train(&self, graph: &Graph, x: &Matrix, rng: &mut RngStream) -> Result<Matrix> {
        Ok(self.forward_cached(graph, x, Some(rng))?.0)
    }

    /// Inference logits for every node of `ds`.
    pub fn logits(&self, ds: &GraphDataset) -> Result<Matrix> {
        self.forward(&ds.graph, &ds.features)
    }

    fn backward(&mut self, graph: &Graph, caches: &[StepCache], dlogits: &Matrix) {
        let act = self.config.hidden_activation();
        let mut g = dlogits.clone();
        for (layer, c) in self.layers.iter_mut().zip(caches).rev() {
            if let Some(pre) = &c.pre {
                if let Some(mask) = &c.mask {
                    g = g.zip_map(mask, |a, b| a * b);
                }
                g = act.backward(pre, &g).expect("cached shapes");
            }
            g = layer.backward(graph, &c.layer, &g);
        }
    }

    /// Mean cross-entropy over `nodes`; parameter gradients are left in each
    /// tensor's `grad` (previous gradients are cleared first).
    pub fn compute_gradients(
        &mut self,
        ds: &GraphDataset,
        nodes: &[usize],
        dropout_rng: Option<&mut RngStream>,
    ) -> Result<f64> {
        self.zero_grad();
        let (logits, caches) = self.forward_cached(&ds.graph, &ds.features, dropout_rng)?;
        let (loss, dlogits) = cross_entropy(&logits, &ds.labels, nodes)?;
        self.backward(&ds.graph, &caches, &dlogits);
        Ok(loss)
    }

    /// Inference-mode loss over `nodes`, no gradients.
    pub fn loss(&self, ds: &GraphDataset, nodes: &[usize]) -> Result<f64> {
        let logits = self.logits(ds)?;
        Ok(cross_entropy(&logits, &ds.labels, nodes)?.0)
    }

    pub fn zero_grad(&mut self) {
        for p in self.parameters_mut() {
            p.zero_grad();
        }
    }

    /// All parameters as `layer{i}/<name>` pairs in a fixed order.
    pub fn named_parameters(&self) -> Vec<(String, &ParamTensor)> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(i, l)| {
                l.named_params()
                    .into_iter()
                    .map(move |(n, p)| (format!("layer{i}/{n}"), p))
            })
            .collect()
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut ParamTensor> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.params_mut())
            .collect()
    }

    /// Parameters of the final (output) layer.
    pub fn output_layer_mut(&mut self) -> Vec<&mut ParamTensor> {
        self.layers
            .last_mut()
            .expect("at least one layer")
            .params_mut()
    }

    pub fn parameter_count(&self) -> usize {
        self.named_parameters()
            .iter()
            .map(|(_, p)| p.value.as_slice().len())
            .sum()
    }
}

/// Logits of `model` on `ds`, with dropout when `training`.
pub fn model_forward(
    model: &GnnModel,
    ds: &GraphDataset,
    training: bool,
    rng: &mut RngStream,
) -> Result<Matrix> {
    if training {
        model.forward_train(&ds.graph, &ds.features, rng)
    } else {
        model.logits(ds)
    }
}

/// Full-batch training: one dropout forward, cross-entropy over every node,
/// backward and an Adam step per epoch.
pub fn train(config: &ModelConfig, ds: &GraphDataset, rng: &RngStream) -> Result<GnnModel> {
    Ok(train_with_history(config, ds, rng)?.0)
}

/// As [`train`], also returning the per-epoch training loss.
pub fn train_with_history(
    config: &ModelConfig,
    ds: &GraphDataset,
    rng: &RngStream,
) -> Result<(GnnModel, Vec<f64>)> {
    if ds.node_count() == 0 {
        return Err(Error::invalid("cannot train on an empty dataset"));
    }
    let mut model = GnnModel::new(
        config,
        ds.feature_dim(),
        ds.class_count,
        &rng.derive("init"),
    )?;
    let mut drop_rng = rng.derive("dropout");
    let nodes: Vec<usize> = (0..ds.node_count()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let loss = model.compute_gradients(ds, &nodes, Some(&mut drop_rng))?;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        history.push(loss);
        for p in model.parameters_mut() {
            adam_step(p, config.lr).map_err(|_| Error::Diverged { epoch, loss })?;
        }
    }
    Ok((model, history))
}
