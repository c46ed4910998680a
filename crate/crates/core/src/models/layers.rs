//! Message-passing layers with hand-written backward passes.
//!
//! Every layer maps node states `H (n x d_in)` to pre-activation outputs
//! `(n x d_out)`. Activation and dropout are applied by the model between
//! layers.

use crate::graph::Graph;
use crate::numerics::{glorot_init, Activation, Matrix, ParamTensor, RngStream};

pub(crate) const GAT_SLOPE: f64 = 0.2;

/// Dense affine map `x W + b`.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Linear {
    pub w: ParamTensor,
    pub b: ParamTensor,
}

impl Linear {
    pub fn new(d_in: usize, d_out: usize, rng: &mut RngStream) -> Self {
        Linear {
            w: ParamTensor::new(glorot_init(d_in, d_out, rng)),
            b: ParamTensor::zeros(1, d_out),
        }
    }

    pub fn forward(&self, x: &Matrix) -> Matrix {
        let mut y = x.dot(&self.w.value);
        y.add_row_vector(self.b.as_row());
        y
    }

    /// Accumulates parameter gradients and returns `dL/dx`.
    pub fn backward(&mut self, x: &Matrix, dy: &Matrix) -> Matrix {
        self.w.accumulate(&x.t_dot(dy));
        let db = Matrix::from_vec(1, dy.cols(), dy.col_sums()).expect("bias shape");
        self.b.accumulate(&db);
        dy.dot_t(&self.w.value)
    }

    fn params(&self) -> Vec<(&'static str, &ParamTensor)> {
        vec![("w", &self.w), ("b", &self.b)]
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        vec![&mut self.w, &mut self.b]
    }
}

/// Row `v` = mean of `h` over `N(v)`, zero when `N(v)` is empty.
pub(crate) fn neighbor_mean(graph: &Graph, h: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(h.rows(), h.cols());
    for v in 0..graph.node_count() {
        let nb = graph.neighbors(v);
        if nb.is_empty() {
            continue;
        }
        let inv = 1.0 / nb.len() as f64;
        let row = out.row_mut(v);
        for &u in nb {
            for (o, x) in row.iter_mut().zip(h.row(u)) {
                *o += x;
            }
        }
        row.iter_mut().for_each(|o| *o *= inv);
    }
    out
}

/// Row `v` = sum of `h` over `N(v)`.
pub(crate) fn neighbor_sum(graph: &Graph, h: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(h.rows(), h.cols());
    for v in 0..graph.node_count() {
        let row = out.row_mut(v);
        for &u in graph.neighbors(v) {
            for (o, x) in row.iter_mut().zip(h.row(u)) {
                *o += x;
            }
        }
    }
    out
}

/// Adjoint of [`neighbor_mean`] (or of [`neighbor_sum`] when `mean` is false).
fn scatter_to_neighbors(graph: &Graph, upstream: &Matrix, mean: bool, dh: &mut Matrix) {
    for v in 0..graph.node_count() {
        let nb = graph.neighbors(v);
        if nb.is_empty() {
            continue;
        }
        let k = if mean { 1.0 / nb.len() as f64 } else { 1.0 };
        let g = upstream.row(v);
        for &u in nb {
            for (d, x) in dh.row_mut(u).iter_mut().zip(g) {
                *d += k * x;
            }
        }
    }
}

/// GraphSAGE: `z_v = [h_v ‖ mean_{u∈N(v)} h_u]`, then a linear update.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct SageLayer {
    pub lin: Linear,
}

pub(crate) struct SageCache {
    z: Matrix,
}

impl SageLayer {
    pub fn new(d_in: usize, d_out: usize, rng: &mut RngStream) -> Self {
        SageLayer {
            lin: Linear::new(2 * d_in, d_out, rng),
        }
    }

    pub fn aggregate(graph: &Graph, h: &Matrix) -> Matrix {
        h.hconcat(&neighbor_mean(graph, h))
    }

    pub fn forward(&self, graph: &Graph, h: &Matrix) -> (Matrix, SageCache) {
        let z = Self::aggregate(graph, h);
        (self.lin.forward(&z), SageCache { z })
    }

    pub fn backward(&mut self, graph: &Graph, cache: &SageCache, dy: &Matrix) -> Matrix {
        let d = cache.z.cols() / 2;
        let dz = self.lin.backward(&cache.z, dy);
        let mut dh = dz.col_slice(0, d);
        scatter_to_neighbors(graph, &dz.col_slice(d, 2 * d), true, &mut dh);
        dh
    }
}

/// GIN: `z_v = (1+ε) h_v + Σ_{u∈N(v)} h_u`, then a small perceptron with relu
/// between its layers.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct GinLayer {
    pub eps: ParamTensor,
    pub mlp: Vec<Linear>,
}

pub(crate) struct GinCache {
    h: Matrix,
    /// Inputs to each perceptron layer (the first is `z`).
    inputs: Vec<Matrix>,
    /// Pre-activation outputs of all but the last perceptron layer.
    pre: Vec<Matrix>,
}

impl GinLayer {
    pub fn new(d_in: usize, d_out: usize, depth: usize, rng: &mut RngStream) -> Self {
        let mut mlp = Vec::with_capacity(depth);
        for i in 0..depth {
            let a = if i == 0 { d_in } else { d_out };
            mlp.push(Linear::new(a, d_out, &mut rng.derive(&format!("mlp{i}"))));
        }
        GinLayer {
            eps: ParamTensor::zeros(1, 1),
            mlp,
        }
    }

    pub fn aggregate(&self, graph: &Graph, h: &Matrix) -> Matrix {
        let mut z = h.clone();
        z.scale(1.0 + self.eps.value.get(0, 0));
        z.add_assign(&neighbor_sum(graph, h));
        z
    }

    pub fn forward(&self, graph: &Graph, h: &Matrix) -> (Matrix, GinCache) {
        let mut x = self.aggregate(graph, h);
        let mut inputs = Vec::with_capacity(self.mlp.len());
        let mut pre = Vec::with_capacity(self.mlp.len().saturating_sub(1));
        let last = self.mlp.len() - 1;
        for (i, lin) in self.mlp.iter().enumerate() {
            let y = lin.forward(&x);
            inputs.push(x);
            if i < last {
                x = Activation::Relu.forward(&y);
                pre.push(y);
            } else {
                x = y;
            }
        }
        (
            x,
            GinCache {
                h: h.clone(),
                inputs,
                pre,
            },
        )
    }

    pub fn backward(&mut self, graph: &Graph, cache: &GinCache, dy: &Matrix) -> Matrix {
        let mut g = dy.clone();
        for i in (0..self.mlp.len()).rev() {
            if i < self.mlp.len() - 1 {
                g = Activation::Relu
                    .backward(&cache.pre[i], &g)
                    .expect("cached shapes");
            }
            g = self.mlp[i].backward(&cache.inputs[i], &g);
        }
        // g = dL/dz
        let deps: f64 = g
            .as_slice()
            .iter()
            .zip(cache.h.as_slice())
            .map(|(a, b)| a * b)
            .sum();
        let mut de = Matrix::zeros(1, 1);
        de.set(0, 0, deps);
        self.eps.accumulate(&de);

        let mut dh = g.clone();
        dh.scale(1.0 + self.eps.value.get(0, 0));
        scatter_to_neighbors(graph, &g, false, &mut dh);
        dh
    }
}

/// One attention head: projection `W` and the split scoring vector
/// `a = [a_src ‖ a_dst]`.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct GatHead {
    pub w: ParamTensor,
    pub a_src: ParamTensor,
    pub a_dst: ParamTensor,
}

/// Multi-head graph attention. Each node attends over `N(v) ∪ {v}`;
/// heads are concatenated (hidden layers) or averaged (output layer).
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct GatLayer {
    pub heads: Vec<GatHead>,
    pub bias: ParamTensor,
    pub concat: bool,
}

struct HeadCache {
    g: Matrix,
    /// Pre-leaky-relu scores and attention weights, flattened in the order of
    /// `attention_lists`.
    pre: Vec<f64>,
    alpha: Vec<f64>,
}

pub(crate) struct GatCache {
    h: Matrix,
    lists: Vec<Vec<usize>>,
    heads: Vec<HeadCache>,
}

/// `N(v)` with `v` added when absent.
fn attention_lists(graph: &Graph) -> Vec<Vec<usize>> {
    (0..graph.node_count())
        .map(|v| {
            let mut l = graph.neighbors(v).to_vec();
            if l.binary_search(&v).is_err() {
                l.push(v);
            }
            l
        })
        .collect()
}

fn leaky(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        GAT_SLOPE * x
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl GatLayer {
    pub fn new(
        d_in: usize,
        head_width: usize,
        n_heads: usize,
        concat: bool,
        rng: &mut RngStream,
    ) -> Self {
        let heads = (0..n_heads)
            .map(|k| {
                let mut r = rng.derive(&format!("head{k}"));
                GatHead {
                    w: ParamTensor::new(glorot_init(d_in, head_width, &mut r)),
                    a_src: ParamTensor::new(glorot_init(1, head_width, &mut r)),
                    a_dst: ParamTensor::new(glorot_init(1, head_width, &mut r)),
                }
            })
            .collect();
        let out = if concat {
            head_width * n_heads
        } else {
            head_width
        };
        GatLayer {
            heads,
            bias: ParamTensor::zeros(1, out),
            concat,
        }
    }

    pub fn head_width(&self) -> usize {
        self.heads[0].w.value.cols()
    }

    fn head_forward(head: &GatHead, lists: &[Vec<usize>], h: &Matrix) -> (Matrix, HeadCache) {
        let g = h.dot(&head.w.value);
        let n = g.rows();
        let s: Vec<f64> = (0..n).map(|u| dot(g.row(u), head.a_src.as_row())).collect();
        let t: Vec<f64> = (0..n).map(|v| dot(g.row(v), head.a_dst.as_row())).collect();
        let mut out = Matrix::zeros(n, g.cols());
        let total: usize = lists.iter().map(Vec::len).sum();
        let mut pre = Vec::with_capacity(total);
        let mut alpha = Vec::with_capacity(total);
        for (v, list) in lists.iter().enumerate() {
            let start = pre.len();
            for &u in list {
                pre.push(s[u] + t[v]);
            }
            let e: Vec<f64> = pre[start..].iter().map(|&p| leaky(p)).collect();
            let max = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = e.iter().map(|x| (x - max).exp()).collect();
            let z: f64 = exps.iter().sum();
            let row = out.row_mut(v);
            for (&u, ex) in list.iter().zip(exps) {
                let a = ex / z;
                alpha.push(a);
                for (o, x) in row.iter_mut().zip(g.row(u)) {
                    *o += a * x;
                }
            }
        }
        (out, HeadCache { g, pre, alpha })
    }

    pub fn forward(&self, graph: &Graph, h: &Matrix) -> (Matrix, GatCache) {
        let lists = attention_lists(graph);
        let n = h.rows();
        let width = self.head_width();
        let mut out = Matrix::zeros(n, self.bias.value.cols());
        let mut caches = Vec::with_capacity(self.heads.len());
        let k = self.heads.len() as f64;
        for (i, head) in self.heads.iter().enumerate() {
            let (o, c) = Self::head_forward(head, &lists, h);
            if self.concat {
                out.set_col_block(i * width, &o);
            } else {
                let mut o = o;
                o.scale(1.0 / k);
                out.add_assign(&o);
            }
            caches.push(c);
        }
        out.add_row_vector(self.bias.as_row());
        (
            out,
            GatCache {
                h: h.clone(),
                lists,
                heads: caches,
            },
        )
    }

    pub fn backward(&mut self, cache: &GatCache, dy: &Matrix) -> Matrix {
        let db = Matrix::from_vec(1, dy.cols(), dy.col_sums()).expect("bias shape");
        self.bias.accumulate(&db);
        let width = self.head_width();
        let k = self.heads.len() as f64;
        let h = &cache.h;
        let n = h.rows();
        let mut dh = Matrix::zeros(n, h.cols());
        for (i, (head, hc)) in self.heads.iter_mut().zip(&cache.heads).enumerate() {
            let dout = if self.concat {
                dy.col_slice(i * width, (i + 1) * width)
            } else {
                let mut d = dy.clone();
                d.scale(1.0 / k);
                d
            };
            let g = &hc.g;
            let mut dg = Matrix::zeros(n, width);
            let mut ds = vec![0.0; n];
            let mut dt = vec![0.0; n];
            let mut idx = 0;
            for (v, list) in cache.lists.iter().enumerate() {
                let dv = dout.row(v);
                let alphas = &hc.alpha[idx..idx + list.len()];
                let dalpha: Vec<f64> = list.iter().map(|&u| dot(dv, g.row(u))).collect();
                let weighted: f64 = alphas.iter().zip(&dalpha).map(|(a, d)| a * d).sum();
                for (j, &u) in list.iter().enumerate() {
                    let a = alphas[j];
                    for (d, x) in dg.row_mut(u).iter_mut().zip(dv) {
                        *d += a * x;
                    }
                    let de = a * (dalpha[j] - weighted);
                    let slope = if hc.pre[idx + j] > 0.0 {
                        1.0
                    } else {
                        GAT_SLOPE
                    };
                    let dpre = de * slope;
                    ds[u] += dpre;
                    dt[v] += dpre;
                }
                idx += list.len();
            }
            let mut da_src = vec![0.0; width];
            let mut da_dst = vec![0.0; width];
            for u in 0..n {
                let gu = g.row(u);
                for c in 0..width {
                    da_src[c] += ds[u] * gu[c];
                    da_dst[c] += dt[u] * gu[c];
                }
            }
            for u in 0..n {
                let (asrc, adst) = (head.a_src.as_row(), head.a_dst.as_row());
                let row = dg.row_mut(u);
                for c in 0..width {
                    row[c] += ds[u] * asrc[c] + dt[u] * adst[c];
                }
            }
            head.a_src
                .accumulate(&Matrix::from_vec(1, width, da_src).expect("shape"));
            head.a_dst
                .accumulate(&Matrix::from_vec(1, width, da_dst).expect("shape"));
            head.w.accumulate(&h.t_dot(&dg));
            dh.add_assign(&dg.dot_t(&head.w.value));
        }
        dh
    }
}

/// A model layer of any family.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Layer {
    Linear(Linear),
    Sage(SageLayer),
    Gin(GinLayer),
    Gat(GatLayer),
}

pub(crate) enum LayerCache {
    Linear(Matrix),
    Sage(SageCache),
    Gin(GinCache),
    Gat(GatCache),
}

impl Layer {
    pub fn forward(&self, graph: &Graph, h: &Matrix) -> (Matrix, LayerCache) {
        match self {
            Layer::Linear(l) => (l.forward(h), LayerCache::Linear(h.clone())),
            Layer::Sage(l) => {
                let (y, c) = l.forward(graph, h);
                (y, LayerCache::Sage(c))
            }
            Layer::Gin(l) => {
                let (y, c) = l.forward(graph, h);
                (y, LayerCache::Gin(c))
            }
            Layer::Gat(l) => {
                let (y, c) = l.forward(graph, h);
                (y, LayerCache::Gat(c))
            }
        }
    }

    pub fn backward(&mut self, graph: &Graph, cache: &LayerCache, dy: &Matrix) -> Matrix {
        match (self, cache) {
            (Layer::Linear(l), LayerCache::Linear(x)) => l.backward(x, dy),
            (Layer::Sage(l), LayerCache::Sage(c)) => l.backward(graph, c, dy),
            (Layer::Gin(l), LayerCache::Gin(c)) => l.backward(graph, c, dy),
            (Layer::Gat(l), LayerCache::Gat(c)) => l.backward(c, dy),
            _ => unreachable!("layer/cache kind mismatch"),
        }
    }

    /// Parameters with stable names relative to the layer.
    pub fn named_params(&self) -> Vec<(String, &ParamTensor)> {
        match self {
            Layer::Linear(l) => l
                .params()
                .into_iter()
                .map(|(n, p)| (n.to_string(), p))
                .collect(),
            Layer::Sage(l) => l
                .lin
                .params()
                .into_iter()
                .map(|(n, p)| (n.to_string(), p))
                .collect(),
            Layer::Gin(l) => {
                let mut v = vec![("eps".to_string(), &l.eps)];
                for (i, lin) in l.mlp.iter().enumerate() {
                    v.extend(
                        lin.params()
                            .into_iter()
                            .map(|(n, p)| (format!("mlp{i}/{n}"), p)),
                    );
                }
                v
            }
            Layer::Gat(l) => {
                let mut v = Vec::new();
                for (i, h) in l.heads.iter().enumerate() {
                    v.push((format!("head{i}/w"), &h.w));
                    v.push((format!("head{i}/a_src"), &h.a_src));
                    v.push((format!("head{i}/a_dst"), &h.a_dst));
                }
                v.push(("bias".to_string(), &l.bias));
                v
            }
        }
    }

    /// Mutable parameters, in the same order as [`Layer::named_params`].
    pub fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        match self {
            Layer::Linear(l) => l.params_mut(),
            Layer::Sage(l) => l.lin.params_mut(),
            Layer::Gin(l) => {
                let mut v = vec![&mut l.eps];
                for lin in &mut l.mlp {
                    v.extend(lin.params_mut());
                }
                v
            }
            Layer::Gat(l) => {
                let mut v = Vec::new();
                for h in &mut l.heads {
                    v.push(&mut h.w);
                    v.push(&mut h.a_src);
                    v.push(&mut h.a_dst);
                }
                v.push(&mut l.bias);
                v
            }
        }
    }
}
