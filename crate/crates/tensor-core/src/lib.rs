//! Dense f64 tensor arithmetic and the differentiable primitives used by the
//! ViT stack: matrix products, softmax, layer norm, GELU, and moment
//! statistics, each with an explicit backward formula.
//!
//! Everything here is pure and single-threaded by construction; tensors own
//! their storage and operations never alias. All scalars are 64-bit floats so
//! gradient checks are not confounded by precision.

mod error;
mod ops;
mod rng;
mod tensor;

pub use error::{Result, TensorError};
pub use ops::{
    gelu, gelu_backward, layer_norm, layer_norm_backward, matmul, matmul_nt, matmul_tn, moments,
    softmax, softmax_backward, LayerNormGrads,
};
pub use rng::Rng;
pub use tensor::Tensor;
