//! Minimal reverse-mode differentiation for the deepmod graphs.

mod adam;
mod gradcheck;
mod loss;
mod params;
mod tape;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradcheck::{finite_difference_check, GradCheckConfig, GradCheckReport};
pub use loss::{
    binary_cross_entropy, binary_cross_entropy_batch, sigmoid, softmax, softmax_cross_entropy,
    softplus,
};
pub use params::{Param, ParamSet};
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;
