use vit_net::{ComponentKind, HookFn, ModuleGradient};

use crate::config::TgrConfig;
use crate::regularize::{regularize_attention_map, regularize_token_matrix, scaling_for};

/// Build the gradient hook that applies token gradient regularization during
/// backward: attention-map gradients go through row/column elimination,
/// QKV and MLP gradients through per-token elimination, each with its own
/// scaling factor. Components outside `enabled_components` pass through
/// untouched.
pub fn tgr_hook(cfg: TgrConfig) -> Box<HookFn> {
    Box::new(move |mg: &ModuleGradient| {
        if !cfg.enabled_components.contains(mg.kind) {
            return mg.grad.clone();
        }
        let s = scaling_for(&cfg, mg.kind);
        let result = match mg.kind {
            ComponentKind::Attention => regularize_attention_map(&mg.grad, &cfg, s),
            ComponentKind::Qkv | ComponentKind::Mlp => {
                regularize_token_matrix(&mg.grad, &cfg, s)
            }
        };
        // Config validity (2k < S) is checked before the attack starts, so
        // regularization cannot fail mid-backward.
        result.expect("validated config regularizes without error")
    })
}
