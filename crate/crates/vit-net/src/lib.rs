//! A tiny Vision Transformer with hand-written forward and backward passes.
//!
//! The backward traversal exposes gradient-interception hooks at three
//! component boundaries per block: the post-softmax attention probability
//! map, the input of the fused QKV projection, and the input of the MLP
//! block. A hook's output is what continues to flow upstream, which lets
//! callers rewrite internal gradients without touching the network code.

mod backward;
mod config;
mod error;
mod forward;
mod hooks;
mod model;
mod serialize;

pub use backward::{backward, backward_with_param_grads, cross_entropy, BackwardOutput};
pub use config::{ViTConfig, LN_EPS};
pub use error::{NetError, Result};
pub use forward::{forward, inverse_patchify, patchify, BlockCache, ForwardCache};
pub use hooks::{ComponentKind, HookFn, ModuleGradient};
pub use model::{BlockParams, ViTModel, ViTParams};
pub use serialize::{
    load_model, model_from_bytes, model_to_bytes, save_model, MODEL_MAGIC, MODEL_VERSION,
};
