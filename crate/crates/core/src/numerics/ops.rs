use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Matrix, RngStream};
use crate::error::{Error, Result};

/// Max-shifted softmax over each row.
pub fn row_softmax(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for r in 0..out.rows() {
        softmax_in_place(out.row_mut(r));
    }
    out
}

pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in row.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in row.iter_mut() {
        *x /= sum;
    }
}

/// Element-wise activation functions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Activation {
    Relu,
    LeakyRelu { slope: f64 },
    Elu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::LeakyRelu { slope } => {
                if x > 0.0 {
                    x
                } else {
                    slope * x
                }
            }
            Activation::Elu => {
                if x > 0.0 {
                    x
                } else {
                    x.exp_m1()
                }
            }
            Activation::Identity => x,
        }
    }

    /// Derivative at the forward input `x`.
    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu { slope } => {
                if x > 0.0 {
                    1.0
                } else {
                    slope
                }
            }
            Activation::Elu => {
                if x > 0.0 {
                    1.0
                } else {
                    x.exp()
                }
            }
            Activation::Identity => 1.0,
        }
    }

    pub fn forward(self, input: &Matrix) -> Matrix {
        if self == Activation::Identity {
            return input.clone();
        }
        input.map(|x| self.apply(x))
    }

    /// Gradient with respect to the forward input, given the upstream gradient.
    pub fn backward(self, input: &Matrix, upstream: &Matrix) -> Result<Matrix> {
        if !input.same_shape(upstream) {
            return Err(Error::shape("activation backward: input/upstream shapes"));
        }
        if self == Activation::Identity {
            return Ok(upstream.clone());
        }
        Ok(input.zip_map(upstream, |x, g| self.derivative(x) * g))
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::Relu => write!(f, "relu"),
            Activation::LeakyRelu { slope } => write!(f, "leaky_relu({slope})"),
            Activation::Elu => write!(f, "elu"),
            Activation::Identity => write!(f, "identity"),
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "elu" => Ok(Activation::Elu),
            "identity" => Ok(Activation::Identity),
            "leaky_relu" => Ok(Activation::LeakyRelu { slope: 0.2 }),
            other => {
                if let Some(arg) = other
                    .strip_prefix("leaky_relu(")
                    .and_then(|r| r.strip_suffix(')'))
                {
                    let slope = arg
                        .parse()
                        .map_err(|_| Error::invalid(format!("bad leaky_relu slope `{arg}`")))?;
                    Ok(Activation::LeakyRelu { slope })
                } else {
                    Err(Error::invalid(format!("unknown activation `{other}`")))
                }
            }
        }
    }
}

/// Mean cross-entropy over `mask` rows, with the gradient w.r.t. the logits.
pub fn cross_entropy(logits: &Matrix, labels: &[usize], mask: &[usize]) -> Result<(f64, Matrix)> {
    if mask.is_empty() {
        return Err(Error::invalid("cross_entropy: empty mask"));
    }
    if labels.len() != logits.rows() {
        return Err(Error::shape(format!(
            "{} labels for {} logit rows",
            labels.len(),
            logits.rows()
        )));
    }
    let c = logits.cols();
    let scale = 1.0 / mask.len() as f64;
    let mut grad = Matrix::zeros(logits.rows(), c);
    let mut loss = 0.0;
    for &i in mask {
        let y = labels[i];
        if y >= c {
            return Err(Error::invalid(format!("label {y} >= class count {c}")));
        }
        let row = logits.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
        loss += lse - row[y];
        let g = grad.row_mut(i);
        for (k, gk) in g.iter_mut().enumerate() {
            *gk = (row[k] - lse).exp() * scale;
        }
        g[y] -= scale;
    }
    Ok((loss * scale, grad))
}

/// Inverted dropout. Returns the output and, in training mode, the per-element
/// scale mask (`0` or `1/(1-rate)`) needed for the backward pass.
pub fn dropout(
    m: &Matrix,
    rate: f64,
    rng: &mut RngStream,
    training: bool,
) -> Result<(Matrix, Option<Matrix>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::invalid(format!("dropout rate {rate} not in [0,1)")));
    }
    if !training || rate == 0.0 {
        return Ok((m.clone(), None));
    }
    let keep = 1.0 / (1.0 - rate);
    let mask_data: Vec<f64> = (0..m.rows() * m.cols())
        .map(|_| {
            if rng.random::<f64>() < rate {
                0.0
            } else {
                keep
            }
        })
        .collect();
    let mask = Matrix::from_vec(m.rows(), m.cols(), mask_data)?;
    let out = m.zip_map(&mask, |x, k| x * k);
    Ok((out, Some(mask)))
}

/// Glorot/Xavier uniform initialisation in `±sqrt(6/(rows+cols))`.
pub fn glorot_init(rows: usize, cols: usize, rng: &mut RngStream) -> Matrix {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-bound..=bound))
        .collect();
    Matrix::from_vec(rows, cols, data).expect("shape by construction")
}

/// Central finite-difference gradient of a scalar function.
pub fn finite_diff_grad(f: impl Fn(&Matrix) -> f64, x: &Matrix, h: f64) -> Matrix {
    let mut grad = Matrix::zeros(x.rows(), x.cols());
    let mut probe = x.clone();
    for i in 0..x.as_slice().len() {
        let orig = probe.as_slice()[i];
        probe.as_mut_slice()[i] = orig + h;
        let up = f(&probe);
        probe.as_mut_slice()[i] = orig - h;
        let down = f(&probe);
        probe.as_mut_slice()[i] = orig;
        grad.as_mut_slice()[i] = (up - down) / (2.0 * h);
    }
    grad
}

/// Norm-wise relative error `‖a−b‖ / max(‖a‖, ‖b‖)`, `0` when both vanish.
pub fn relative_error(a: &Matrix, b: &Matrix) -> f64 {
    let diff = a.zip_map(b, |x, y| x - y).frobenius_norm();
    let scale = a.frobenius_norm().max(b.frobenius_norm());
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random(rows: usize, cols: usize, rng: &mut RngStream, spread: f64) -> Matrix {
        let data = (0..rows * cols)
            .map(|_| rng.random_range(-spread..spread))
            .collect();
        Matrix::from_vec(rows, cols, data).unwrap()
    }

    #[test]
    fn softmax_cases() {
        let m = Matrix::from_rows(&[vec![0.0, 0.0], vec![1000.0, 0.0]]).unwrap();
        let s = row_softmax(&m);
        assert_eq!(s.row(0), &[0.5, 0.5]);
        assert!((s.get(1, 0) - 1.0).abs() < 1e-12 && s.get(1, 1) >= 0.0);
        assert!(s.is_finite());

        let m = Matrix::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
        let s = row_softmax(&m);
        let z: f64 = [1.0f64, 2.0, 3.0].iter().map(|x| x.exp()).sum();
        for (k, x) in [1.0f64, 2.0, 3.0].iter().enumerate() {
            assert!((s.get(0, k) - x.exp() / z).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_rows_sum_to_one_and_shift_invariant() {
        let mut rng = RngStream::new(2);
        for _ in 0..20 {
            let m = random(4, 6, &mut rng, 30.0);
            let s = row_softmax(&m);
            for r in 0..4 {
                assert!((s.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(s.row(r).iter().all(|&p| p > 0.0 && p <= 1.0));
            }
            let c = rng.random_range(-50.0..50.0);
            let shifted = row_softmax(&m.map(|x| x + c));
            assert!(s.max_abs_diff(&shifted) < 1e-12);
        }
    }

    #[test]
    fn activation_forward_values() {
        let x = Matrix::from_rows(&[[-1.0, 0.0, 2.0]]).unwrap();
        assert_eq!(Activation::Relu.forward(&x).as_slice(), &[0.0, 0.0, 2.0]);
        let y =
            Activation::LeakyRelu { slope: 0.2 }.forward(&Matrix::from_rows(&[[-1.0]]).unwrap());
        assert!((y.get(0, 0) + 0.2).abs() < 1e-15);
        assert_eq!(Activation::Identity.forward(&x), x);
    }

    #[test]
    fn activation_backward_matches_finite_differences() {
        let mut rng = RngStream::new(4);
        let elu_x = Matrix::from_rows(&[[-0.5]]).unwrap();
        let up = Matrix::from_rows(&[[1.0]]).unwrap();
        let g = Activation::Elu.backward(&elu_x, &up).unwrap();
        let fd = finite_diff_grad(|m| Activation::Elu.apply(m.get(0, 0)), &elu_x, 1e-5);
        assert!((g.get(0, 0) - fd.get(0, 0)).abs() < 1e-6);

        for act in [
            Activation::Relu,
            Activation::LeakyRelu { slope: 0.2 },
            Activation::Elu,
            Activation::Identity,
        ] {
            for _ in 0..20 {
                let x = random(3, 4, &mut rng, 2.0);
                let w = random(3, 4, &mut rng, 1.0);
                let f = |m: &Matrix| -> f64 {
                    act.forward(m)
                        .as_slice()
                        .iter()
                        .zip(w.as_slice())
                        .map(|(a, b)| a * b)
                        .sum()
                };
                let analytic = act.backward(&x, &w).unwrap();
                let numeric = finite_diff_grad(f, &x, 1e-5);
                assert!(relative_error(&analytic, &numeric) < 1e-4, "{act}");
            }
        }
    }

    #[test]
    fn activation_parsing() {
        assert_eq!("relu".parse::<Activation>().unwrap(), Activation::Relu);
        assert_eq!(
            "leaky_relu(0.1)".parse::<Activation>().unwrap(),
            Activation::LeakyRelu { slope: 0.1 }
        );
        assert!("swish".parse::<Activation>().is_err());
    }

    #[test]
    fn cross_entropy_cases() {
        let logits = Matrix::from_rows(&[[0.0, 0.0]]).unwrap();
        let (loss, _) = cross_entropy(&logits, &[0], &[0]).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);

        let logits = Matrix::from_rows(&[[50.0, -50.0]]).unwrap();
        let (loss, _) = cross_entropy(&logits, &[0], &[0]).unwrap();
        assert!(loss < 1e-12);

        assert!(cross_entropy(&logits, &[0], &[]).is_err());
    }

    #[test]
    fn cross_entropy_gradient_matches_finite_differences() {
        let mut rng = RngStream::new(8);
        for _ in 0..20 {
            let logits = random(5, 3, &mut rng, 3.0);
            let labels: Vec<usize> = (0..5).map(|_| rng.random_range(0..3)).collect();
            let mask = [0, 2, 3];
            let (_, grad) = cross_entropy(&logits, &labels, &mask).unwrap();
            let fd = finite_diff_grad(
                |m| cross_entropy(m, &labels, &mask).unwrap().0,
                &logits,
                1e-5,
            );
            assert!(relative_error(&grad, &fd) < 1e-5);
            assert!(grad.row(1).iter().all(|&g| g == 0.0));
        }
    }

    #[test]
    fn dropout_modes() {
        let mut rng = RngStream::new(1);
        let m = Matrix::filled(3, 3, 2.0);
        assert_eq!(dropout(&m, 0.0, &mut rng, true).unwrap().0, m);
        assert_eq!(dropout(&m, 0.9, &mut rng, false).unwrap().0, m);
        assert!(dropout(&m, 1.0, &mut rng, true).is_err());

        let ones = Matrix::filled(1000, 1000, 1.0);
        let (out, mask) = dropout(&ones, 0.5, &mut rng, true).unwrap();
        let mean = out.as_slice().iter().sum::<f64>() / 1e6;
        assert!((0.99..=1.01).contains(&mean), "mean {mean}");
        assert!(mask
            .unwrap()
            .as_slice()
            .iter()
            .all(|&k| k == 0.0 || k == 2.0));
    }

    #[test]
    fn glorot_bounds_and_variance() {
        let mut rng = RngStream::new(3);
        let m = glorot_init(100, 100, &mut rng);
        let bound = (6.0f64 / 200.0).sqrt();
        assert!(m.as_slice().iter().all(|x| x.abs() <= bound));
        assert_eq!(m, glorot_init(100, 100, &mut RngStream::new(3)));

        let big = glorot_init(256, 256, &mut rng);
        let n = big.as_slice().len() as f64;
        let mean = big.as_slice().iter().sum::<f64>() / n;
        let var = big
            .as_slice()
            .iter()
            .map(|x| (x - mean).powi(2))
            .sum::<f64>()
            / n;
        let expected = 2.0 / 512.0;
        assert!((var - expected).abs() < 0.1 * expected);
    }

    #[test]
    fn finite_differences_of_known_functions() {
        let x = Matrix::from_rows(&[[1.0, -2.0], [0.5, 3.0]]).unwrap();
        let g = finite_diff_grad(|m| m.as_slice().iter().sum(), &x, 1e-5);
        assert!(g.as_slice().iter().all(|v| (v - 1.0).abs() < 1e-9));
        let g = finite_diff_grad(|m| 0.5 * m.frobenius_norm().powi(2), &x, 1e-5);
        assert!(g.max_abs_diff(&x) < 1e-8);

        // cross-entropy composed with softmax on a 3x2 case, against the
        // closed form (softmax - onehot) / n
        let logits = Matrix::from_rows(&[[0.3, -0.1], [1.2, 0.4], [-0.7, 0.9]]).unwrap();
        let labels = [1usize, 0, 1];
        let fd = finite_diff_grad(
            |m| {
                let p = row_softmax(m);
                -(0..3).map(|i| p.get(i, labels[i]).ln()).sum::<f64>() / 3.0
            },
            &logits,
            1e-5,
        );
        let mut closed = row_softmax(&logits);
        for (i, &y) in labels.iter().enumerate() {
            closed.set(i, y, closed.get(i, y) - 1.0);
        }
        closed.scale(1.0 / 3.0);
        assert!(fd.max_abs_diff(&closed) < 1e-5);
    }
}
