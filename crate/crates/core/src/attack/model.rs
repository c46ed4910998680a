use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::{query_features, AttackExample, AttackKind, FeatureEncoding, Membership};
use crate::analysis::{auc, confusion, ConfusionCounts};
use crate::codec::TensorBlob;
use crate::error::{Error, Result};
use crate::graph::GraphDataset;
use crate::models::layers::Linear;
use crate::models::GnnModel;
use crate::numerics::{
    adam_step, cross_entropy, row_softmax, Activation, Matrix, ParamTensor, RngStream,
};

/// Attack-model hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackTrainConfig {
    /// Hidden width of the single-input perceptron.
    pub hidden: usize,
    /// Width of each input branch of the combined model.
    pub branch_width: usize,
    pub lr: f64,
    pub epochs: usize,
}

impl Default for AttackTrainConfig {
    fn default() -> Self {
        AttackTrainConfig {
            hidden: 128,
            branch_width: 64,
            lr: 0.001,
            epochs: 500,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum AttackNet {
    /// `w -> hidden (relu) -> 2`
    Perceptron { hidden: Linear, out: Linear },
    /// Two `w -> branch (relu)` embeddings, concatenated, then `-> 2`.
    TwoBranch {
        branch0: Linear,
        branch2: Linear,
        out: Linear,
    },
}

/// Binary member/non-member classifier over attack features.
#[derive(Clone, Debug, PartialEq)]
pub struct AttackModel {
    kind: AttackKind,
    encoding: FeatureEncoding,
    input_width: usize,
    net: AttackNet,
}

struct Batch {
    x0: Option<Matrix>,
    x2: Option<Matrix>,
}

struct Cache {
    /// Pre-activations of the hidden layer(s): one for a perceptron, two for
    /// the branches.
    pre: Vec<Matrix>,
    hidden: Matrix,
}

fn stack(rows: Vec<&[f64]>, width: usize) -> Result<Matrix> {
    if rows.iter().any(|r| r.len() != width) {
        return Err(Error::shape(format!("attack input width must be {width}")));
    }
    Matrix::from_rows(&rows)
}

impl AttackModel {
    pub fn new(
        kind: AttackKind,
        encoding: FeatureEncoding,
        input_width: usize,
        cfg: &AttackTrainConfig,
        rng: &RngStream,
    ) -> Result<Self> {
        if input_width == 0 || cfg.hidden == 0 || cfg.branch_width == 0 {
            return Err(Error::invalid("attack widths must be positive"));
        }
        let net = match kind {
            AttackKind::Combined => AttackNet::TwoBranch {
                branch0: Linear::new(input_width, cfg.branch_width, &mut rng.derive("branch0")),
                branch2: Linear::new(input_width, cfg.branch_width, &mut rng.derive("branch2")),
                out: Linear::new(2 * cfg.branch_width, 2, &mut rng.derive("out")),
            },
            _ => AttackNet::Perceptron {
                hidden: Linear::new(input_width, cfg.hidden, &mut rng.derive("hidden")),
                out: Linear::new(cfg.hidden, 2, &mut rng.derive("out")),
            },
        };
        Ok(AttackModel {
            kind,
            encoding,
            input_width,
            net,
        })
    }

    pub fn kind(&self) -> AttackKind {
        self.kind
    }

    pub fn encoding(&self) -> FeatureEncoding {
        self.encoding
    }

    pub fn input_width(&self) -> usize {
        self.input_width
    }

    fn batch(&self, examples: &[AttackExample]) -> Result<Batch> {
        for (i, e) in examples.iter().enumerate() {
            if !e.has_fields_for(self.kind) {
                return Err(Error::invalid(format!(
                    "example {i} lacks the features a {} attack needs",
                    self.kind
                )));
            }
        }
        let w = self.input_width;
        let x0 = if self.kind.uses_zero_hop() {
            Some(stack(
                examples
                    .iter()
                    .map(|e| e.feature0.as_deref().unwrap())
                    .collect(),
                w,
            )?)
        } else {
            None
        };
        let x2 = if self.kind.uses_two_hop() {
            Some(stack(
                examples
                    .iter()
                    .map(|e| e.feature2.as_deref().unwrap())
                    .collect(),
                w,
            )?)
        } else {
            None
        };
        Ok(Batch { x0, x2 })
    }

    fn forward(&self, b: &Batch) -> (Matrix, Cache) {
        match &self.net {
            AttackNet::Perceptron { hidden, out } => {
                let x = b.x0.as_ref().or(b.x2.as_ref()).expect("one input present");
                let pre = hidden.forward(x);
                let h = Activation::Relu.forward(&pre);
                (
                    out.forward(&h),
                    Cache {
                        pre: vec![pre],
                        hidden: h,
                    },
                )
            }
            AttackNet::TwoBranch {
                branch0,
                branch2,
                out,
            } => {
                let p0 = branch0.forward(b.x0.as_ref().expect("0-hop input"));
                let p2 = branch2.forward(b.x2.as_ref().expect("2-hop input"));
                let h = Activation::Relu
                    .forward(&p0)
                    .hconcat(&Activation::Relu.forward(&p2));
                (
                    out.forward(&h),
                    Cache {
                        pre: vec![p0, p2],
                        hidden: h,
                    },
                )
            }
        }
    }

    fn backward(&mut self, b: &Batch, cache: &Cache, dlogits: &Matrix) {
        match &mut self.net {
            AttackNet::Perceptron { hidden, out } => {
                let dh = out.backward(&cache.hidden, dlogits);
                let dpre = Activation::Relu
                    .backward(&cache.pre[0], &dh)
                    .expect("shapes");
                let x = b.x0.as_ref().or(b.x2.as_ref()).expect("one input present");
                hidden.backward(x, &dpre);
            }
            AttackNet::TwoBranch {
                branch0,
                branch2,
                out,
            } => {
                let dh = out.backward(&cache.hidden, dlogits);
                let w = cache.pre[0].cols();
                let d0 = Activation::Relu
                    .backward(&cache.pre[0], &dh.col_slice(0, w))
                    .expect("shapes");
                let d2 = Activation::Relu
                    .backward(&cache.pre[1], &dh.col_slice(w, 2 * w))
                    .expect("shapes");
                branch0.backward(b.x0.as_ref().expect("0-hop input"), &d0);
                branch2.backward(b.x2.as_ref().expect("2-hop input"), &d2);
            }
        }
    }

    fn linears(&self) -> Vec<(&'static str, &Linear)> {
        match &self.net {
            AttackNet::Perceptron { hidden, out } => vec![("hidden", hidden), ("out", out)],
            AttackNet::TwoBranch {
                branch0,
                branch2,
                out,
            } => vec![("branch0", branch0), ("branch2", branch2), ("out", out)],
        }
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        let lins: Vec<&mut Linear> = match &mut self.net {
            AttackNet::Perceptron { hidden, out } => vec![hidden, out],
            AttackNet::TwoBranch {
                branch0,
                branch2,
                out,
            } => vec![branch0, branch2, out],
        };
        lins.into_iter()
            .flat_map(|l| [&mut l.w, &mut l.b])
            .collect()
    }

    /// Parameters as `<layer>/w`, `<layer>/b` pairs in a fixed order.
    pub fn named_parameters(&self) -> Vec<(String, &ParamTensor)> {
        self.linears()
            .into_iter()
            .flat_map(|(n, l)| [(format!("{n}/w"), &l.w), (format!("{n}/b"), &l.b)])
            .collect()
    }

    /// Sets every weight and bias to zero.
    pub fn zero_parameters(&mut self) {
        for p in self.params_mut() {
            p.value.fill(0.0);
        }
    }

    /// Softmax probability of the member class for each example.
    pub fn scores(&self, examples: &[AttackExample]) -> Result<Vec<f64>> {
        if examples.is_empty() {
            return Ok(Vec::new());
        }
        let b = self.batch(examples)?;
        let probs = row_softmax(&self.forward(&b).0);
        Ok((0..probs.rows()).map(|r| probs.get(r, 1)).collect())
    }

    /// Hidden-layer activations (the concatenated branch embeddings for the
    /// combined model).
    pub fn embeddings(&self, examples: &[AttackExample]) -> Result<Matrix> {
        let b = self.batch(examples)?;
        Ok(self.forward(&b).1.hidden)
    }

    /// Member when the member probability strictly exceeds 0.5.
    pub fn classify(score: f64) -> Membership {
        if score > 0.5 {
            Membership::Member
        } else {
            Membership::NonMember
        }
    }

    /// Mean cross-entropy over `examples`.
    pub fn loss(&self, examples: &[AttackExample]) -> Result<f64> {
        let b = self.batch(examples)?;
        let labels: Vec<usize> = examples.iter().map(|e| e.label.class_index()).collect();
        let all: Vec<usize> = (0..examples.len()).collect();
        Ok(cross_entropy(&self.forward(&b).0, &labels, &all)?.0)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = AttackFile {
            format: ATTACK_FORMAT.into(),
            kind: self.kind,
            encoding: self.encoding,
            input_width: self.input_width,
            config: self.shape_config(),
            parameters: self
                .named_parameters()
                .into_iter()
                .map(|(n, p)| TensorBlob::encode(n, &p.value))
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)? + "\n")
    }

    fn shape_config(&self) -> AttackTrainConfig {
        let mut cfg = AttackTrainConfig::default();
        match &self.net {
            AttackNet::Perceptron { hidden, .. } => cfg.hidden = hidden.w.value.cols(),
            AttackNet::TwoBranch { branch0, .. } => cfg.branch_width = branch0.w.value.cols(),
        }
        cfg
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: AttackFile = serde_json::from_str(text)?;
        if file.format != ATTACK_FORMAT {
            return Err(Error::invalid(format!(
                "unsupported attack format `{}`",
                file.format
            )));
        }
        let mut model = AttackModel::new(
            file.kind,
            file.encoding,
            file.input_width,
            &file.config,
            &RngStream::new(0),
        )?;
        let names: Vec<String> = model
            .named_parameters()
            .into_iter()
            .map(|(n, _)| n)
            .collect();
        if names.len() != file.parameters.len() {
            return Err(Error::shape("attack file tensor count"));
        }
        for ((name, slot), blob) in names.iter().zip(model.params_mut()).zip(&file.parameters) {
            let value = blob.decode()?;
            if &blob.name != name || value.shape() != slot.shape() {
                return Err(Error::shape(format!("attack tensor `{name}` mismatch")));
            }
            slot.value = value;
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

const ATTACK_FORMAT: &str = "gnn-audit/attack/v1";

#[derive(Serialize, Deserialize)]
struct AttackFile {
    format: String,
    kind: AttackKind,
    encoding: FeatureEncoding,
    input_width: usize,
    config: AttackTrainConfig,
    parameters: Vec<TensorBlob>,
}

/// Trains an attack model with top-2 posterior inputs.
pub fn train_attack(
    examples: &[AttackExample],
    kind: AttackKind,
    rng: &RngStream,
) -> Result<AttackModel> {
    train_attack_with(
        examples,
        kind,
        FeatureEncoding::Top2,
        &AttackTrainConfig::default(),
        rng,
    )
}

/// Full-batch cross-entropy training with Adam.
pub fn train_attack_with(
    examples: &[AttackExample],
    kind: AttackKind,
    encoding: FeatureEncoding,
    cfg: &AttackTrainConfig,
    rng: &RngStream,
) -> Result<AttackModel> {
    let members = examples.iter().filter(|e| e.label.is_member()).count();
    if members == 0 || members == examples.len() {
        return Err(Error::invalid(
            "attack training needs both member and non-member examples",
        ));
    }
    let width = {
        let e = &examples[0];
        e.feature0
            .as_ref()
            .or(e.feature2.as_ref())
            .map(Vec::len)
            .ok_or_else(|| Error::invalid("example carries no features"))?
    };
    let mut model = AttackModel::new(kind, encoding, width, cfg, &rng.derive("init"))?;
    let batch = model.batch(examples)?;
    let labels: Vec<usize> = examples.iter().map(|e| e.label.class_index()).collect();
    let all: Vec<usize> = (0..examples.len()).collect();
    for epoch in 1..=cfg.epochs {
        let (logits, cache) = model.forward(&batch);
        let (loss, dlogits) = cross_entropy(&logits, &labels, &all)?;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        model.backward(&batch, &cache, &dlogits);
        for p in model.params_mut() {
            adam_step(p, cfg.lr)?;
        }
    }
    Ok(model)
}

/// Membership verdict and member probability for node `v` of `partition`,
/// obtained by querying `target` the way the attack expects.
pub fn infer_membership(
    attack: &AttackModel,
    target: &GnnModel,
    partition: &GraphDataset,
    v: usize,
) -> Result<(Membership, f64)> {
    partition.check_node(v)?;
    let (feature0, feature2) =
        query_features(target, partition, &[v], attack.kind, attack.encoding)?
            .pop()
            .expect("one node queried");
    let example = AttackExample {
        feature0,
        feature2,
        label: Membership::NonMember,
    };
    let score = attack.scores(std::slice::from_ref(&example))?[0];
    Ok((AttackModel::classify(score), score))
}

/// Attack results on the target's members (`target_train`) and non-members
/// (`target_test`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackEvaluation {
    pub accuracy: f64,
    pub auc: f64,
    pub confusion: ConfusionCounts,
    /// Member probability per node of `target_train`, in node order.
    pub member_scores: Vec<f64>,
    /// Member probability per node of `target_test`, in node order.
    pub nonmember_scores: Vec<f64>,
}

/// Scores every target-train node (members) and target-test node
/// (non-members).
pub fn evaluate_attack(
    attack: &AttackModel,
    target: &GnnModel,
    target_train: &GraphDataset,
    target_test: &GraphDataset,
) -> Result<AttackEvaluation> {
    if target_train.node_count() == 0 || target_test.node_count() == 0 {
        return Err(Error::invalid("evaluate_attack: empty partition"));
    }
    let examples = super::build_examples(
        target,
        target_train,
        target_test,
        attack.kind,
        attack.encoding,
    )?;
    let scores = attack.scores(&examples)?;
    let m = target_train.node_count();
    let (member_scores, nonmember_scores) = (scores[..m].to_vec(), scores[m..].to_vec());
    let predictions: Vec<Membership> = scores.iter().map(|&s| AttackModel::classify(s)).collect();
    let truths: Vec<Membership> = examples.iter().map(|e| e.label).collect();
    let confusion = confusion(&predictions, &truths)?;
    let correct = predictions
        .iter()
        .zip(&truths)
        .filter(|(p, t)| p == t)
        .count();
    Ok(AttackEvaluation {
        accuracy: correct as f64 / scores.len() as f64,
        auc: auc(&member_scores, &nonmember_scores)?,
        confusion,
        member_scores,
        nonmember_scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn ex(f: [f64; 2], member: bool) -> AttackExample {
        AttackExample {
            feature0: Some(f.to_vec()),
            feature2: Some(f.to_vec()),
            label: if member {
                Membership::Member
            } else {
                Membership::NonMember
            },
        }
    }

    fn separable() -> Vec<AttackExample> {
        let mut v = Vec::new();
        for _ in 0..20 {
            v.push(ex([0.99, 0.01], true));
            v.push(ex([0.51, 0.49], false));
        }
        v
    }

    #[test]
    fn separable_features_are_learned() {
        let data = separable();
        for kind in AttackKind::ALL {
            let m = train_attack(&data, kind, &RngStream::new(1)).unwrap();
            let scores = m.scores(&data).unwrap();
            let acc = scores
                .iter()
                .zip(&data)
                .filter(|(&s, e)| AttackModel::classify(s) == e.label)
                .count() as f64
                / data.len() as f64;
            assert_eq!(acc, 1.0, "{kind}");
        }
    }

    #[test]
    fn shuffled_labels_give_chance_accuracy() {
        let mut rng = RngStream::new(7);
        let mut make = |n: usize| -> Vec<AttackExample> {
            (0..n)
                .map(|_| {
                    let p1: f64 = rng.random_range(0.5..1.0);
                    ex([p1, 1.0 - p1], rng.random::<bool>())
                })
                .collect()
        };
        let mut train = make(400);
        // keep both labels present
        train[0].label = Membership::Member;
        train[1].label = Membership::NonMember;
        let held_out = make(400);
        let m = train_attack(&train, AttackKind::ZeroHop, &RngStream::new(2)).unwrap();
        let scores = m.scores(&held_out).unwrap();
        let acc = scores
            .iter()
            .zip(&held_out)
            .filter(|(&s, e)| AttackModel::classify(s) == e.label)
            .count() as f64
            / held_out.len() as f64;
        assert!((acc - 0.5).abs() <= 0.1, "{acc}");
    }

    #[test]
    fn same_seed_same_parameters() {
        let data = separable();
        let a = train_attack(&data, AttackKind::Combined, &RngStream::new(3)).unwrap();
        let b = train_attack(&data, AttackKind::Combined, &RngStream::new(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_label_rejected() {
        let data = vec![ex([0.9, 0.1], true), ex([0.8, 0.2], true)];
        assert!(train_attack(&data, AttackKind::ZeroHop, &RngStream::new(0)).is_err());
    }

    #[test]
    fn zero_weights_score_half_and_say_non_member() {
        let mut m = AttackModel::new(
            AttackKind::ZeroHop,
            FeatureEncoding::Top2,
            2,
            &AttackTrainConfig::default(),
            &RngStream::new(0),
        )
        .unwrap();
        m.zero_parameters();
        let s = m.scores(&[ex([0.9, 0.1], true)]).unwrap()[0];
        assert_eq!(s, 0.5);
        assert_eq!(AttackModel::classify(s), Membership::NonMember);
    }

    #[test]
    fn missing_fields_are_rejected() {
        let m = AttackModel::new(
            AttackKind::Combined,
            FeatureEncoding::Top2,
            2,
            &AttackTrainConfig::default(),
            &RngStream::new(0),
        )
        .unwrap();
        let e = AttackExample {
            feature0: Some(vec![0.6, 0.4]),
            feature2: None,
            label: Membership::Member,
        };
        assert!(m.scores(&[e]).is_err());
    }

    #[test]
    fn attack_gradients_match_finite_differences() {
        let mut rng = RngStream::new(5);
        let data: Vec<AttackExample> = (0..12)
            .map(|i| {
                let p: f64 = rng.random_range(0.3..1.0);
                let q: f64 = rng.random_range(0.0..0.5);
                AttackExample {
                    feature0: Some(vec![p, 1.0 - p]),
                    feature2: Some(vec![q + 0.5, 0.5 - q]),
                    label: if i % 2 == 0 {
                        Membership::Member
                    } else {
                        Membership::NonMember
                    },
                }
            })
            .collect();
        let cfg = AttackTrainConfig {
            hidden: 6,
            branch_width: 4,
            ..Default::default()
        };
        for kind in AttackKind::ALL {
            let mut m =
                AttackModel::new(kind, FeatureEncoding::Top2, 2, &cfg, &RngStream::new(9)).unwrap();
            let b = m.batch(&data).unwrap();
            let labels: Vec<usize> = data.iter().map(|e| e.label.class_index()).collect();
            let all: Vec<usize> = (0..data.len()).collect();
            let (logits, cache) = m.forward(&b);
            let (_, d) = cross_entropy(&logits, &labels, &all).unwrap();
            m.backward(&b, &cache, &d);
            let n = m.named_parameters().len();
            for i in 0..n {
                let analytic = m.named_parameters()[i].1.grad.clone();
                let base = m.named_parameters()[i].1.value.clone();
                let numeric = crate::numerics::finite_diff_grad(
                    |x| {
                        let mut probe = m.clone();
                        probe.params_mut()[i].value = x.clone();
                        probe.loss(&data).unwrap()
                    },
                    &base,
                    1e-5,
                );
                let err = crate::numerics::relative_error(&analytic, &numeric);
                assert!(err < 1e-4, "{kind} param {i}: {err}");
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let m = train_attack(&separable(), AttackKind::Combined, &RngStream::new(3)).unwrap();
        let back = AttackModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(
            back.scores(&separable()).unwrap(),
            m.scores(&separable()).unwrap()
        );
    }
}
