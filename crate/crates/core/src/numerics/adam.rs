use super::Matrix;
use crate::error::{Error, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// A trainable tensor with its gradient accumulator and Adam moments.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamTensor {
    pub value: Matrix,
    pub grad: Matrix,
    m: Matrix,
    v: Matrix,
    step: u64,
}

impl ParamTensor {
    pub fn new(value: Matrix) -> Self {
        let (r, c) = value.shape();
        ParamTensor {
            value,
            grad: Matrix::zeros(r, c),
            m: Matrix::zeros(r, c),
            v: Matrix::zeros(r, c),
            step: 0,
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(Matrix::zeros(rows, cols))
    }

    pub fn shape(&self) -> (usize, usize) {
        self.value.shape()
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub fn accumulate(&mut self, g: &Matrix) {
        self.grad.add_assign(g);
    }

    /// Row-vector view of a `1 x n` parameter such as a bias.
    pub fn as_row(&self) -> &[f64] {
        self.value.as_slice()
    }
}

/// One bias-corrected Adam update; zeroes the gradient afterwards.
pub fn adam_step(p: &mut ParamTensor, lr: f64) -> Result<()> {
    if !p.grad.is_finite() {
        return Err(Error::NonFinite("gradient".into()));
    }
    p.step += 1;
    let t = p.step as i32;
    let c1 = 1.0 - ADAM_BETA1.powi(t);
    let c2 = 1.0 - ADAM_BETA2.powi(t);
    let value = p.value.as_mut_slice();
    let grad = p.grad.as_slice();
    let m = p.m.as_mut_slice();
    let v = p.v.as_mut_slice();
    for i in 0..value.len() {
        let g = grad[i];
        m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g;
        v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g * g;
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        value[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
    }
    p.zero_grad();
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_value() {
        let mut p = ParamTensor::new(Matrix::from_rows(&[[1.0, -2.0]]).unwrap());
        let before = p.value.clone();
        adam_step(&mut p, 0.1).unwrap();
        assert_eq!(p.value, before);
        assert_eq!(p.step(), 1);
    }

    #[test]
    fn first_step_closed_form() {
        let g = [0.3, -4.0, 1e-3];
        let mut p = ParamTensor::zeros(1, 3);
        p.grad = Matrix::from_rows(&[g]).unwrap();
        let lr = 0.01;
        adam_step(&mut p, lr).unwrap();
        for (k, &gk) in g.iter().enumerate() {
            // m_hat = g, v_hat = g^2 after bias correction
            let expected = -lr * gk / (gk.abs() + ADAM_EPS);
            assert!((p.value.get(0, k) - expected).abs() < 1e-15);
            assert!((p.value.get(0, k) + lr * gk.signum()).abs() < 1e-7);
        }
        assert!(p.grad.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn identical_inputs_give_identical_trajectories() {
        let run = || {
            let mut p = ParamTensor::new(Matrix::from_rows(&[[0.5, 0.25]]).unwrap());
            for i in 0..50 {
                let gv = p.value.map(|x| x * 2.0 + i as f64 * 1e-3);
                p.accumulate(&gv);
                adam_step(&mut p, 0.003).unwrap();
            }
            p.value
        };
        let a = run();
        let b = run();
        assert_eq!(
            a.as_slice().iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            b.as_slice().iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn non_finite_gradient_rejected() {
        let mut p = ParamTensor::zeros(1, 1);
        p.grad.set(0, 0, f64::NAN);
        assert!(adam_step(&mut p, 0.1).is_err());
    }
}
