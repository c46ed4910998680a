//! Dense matrices, hand-written gradients for the handful of primitives the
//! models need, Adam, and seeded random streams.

mod adam;
mod matrix;
mod ops;
mod rng;

pub use adam::{adam_step, ParamTensor, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use matrix::{matmul, Matrix};
pub(crate) use ops::softmax_in_place;
pub use ops::{
    cross_entropy, dropout, finite_diff_grad, glorot_init, relative_error, row_softmax, Activation,
};
pub use rng::RngStream;
