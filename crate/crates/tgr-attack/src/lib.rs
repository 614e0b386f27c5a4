//! Token-gradient-regularized adversarial attacks.
//!
//! The attack loop is a momentum iterative sign method; when regularization
//! is configured, a gradient hook rewrites the back-propagated gradients at
//! the attention, QKV, and MLP boundaries of every block: scale by a
//! per-component factor, then eliminate the gradients of extreme tokens.
//! PatchOut masking and the L-inf projection complete the loop.

mod attack;
mod config;
mod error;
mod hook;
mod ops;
mod regularize;
mod select;

pub use attack::{attack, attack_traced, AdversarialResult};
pub use config::{
    attack_config_from_kv, attack_config_to_kv, AttackConfig, ComponentSet, EliminationMode,
    PatchOutConfig, SelectionMode, TgrConfig,
};
pub use error::{AttackError, Result};
pub use hook::tgr_hook;
pub use ops::{clip_project, mim_step, patchout_mask, sign};
pub use regularize::{regularize_attention_map, regularize_token_matrix, scaling_for};
pub use select::select_extreme_tokens;
