use tensor_core::{Rng, Tensor};
use vit_net::{backward, cross_entropy, forward, HookFn, ModuleGradient, ViTModel};

use crate::config::AttackConfig;
use crate::error::{AttackError, Result};
use crate::hook::tgr_hook;
use crate::ops::{clip_project, mim_step, patchout_mask, sign};

/// Outcome of one adversarial run.
#[derive(Debug, Clone)]
pub struct AdversarialResult {
    /// Perturbed image, same shape as the input, inside the L-inf ball and
    /// the valid pixel range.
    pub x_adv: Tensor,
    /// Loss at the start of each iteration (`steps` entries).
    pub per_step_loss: Vec<f64>,
    /// Whether the source model misclassifies `x_adv`.
    pub success_on_source: bool,
}

/// Untargeted momentum sign attack with optional token gradient
/// regularization and PatchOut masking.
///
/// Per iteration: forward, cross-entropy backward (through the TGR hook when
/// configured) to get the input gradient, PatchOut mask, momentum update,
/// then a sign step projected back into the epsilon ball around `x`. The
/// loss is ascended, so the attack maximizes the classification loss.
pub fn attack(model: &ViTModel, x: &Tensor, label: usize, cfg: &AttackConfig) -> Result<AdversarialResult> {
    run_attack(model, x, label, cfg, false).map(|(result, _)| result)
}

/// Same as [`attack`], also returning the post-hook module gradients recorded
/// during the final iteration's backward pass (empty when `steps == 0`).
pub fn attack_traced(
    model: &ViTModel,
    x: &Tensor,
    label: usize,
    cfg: &AttackConfig,
) -> Result<(AdversarialResult, Vec<ModuleGradient>)> {
    run_attack(model, x, label, cfg, true)
}

fn run_attack(
    model: &ViTModel,
    x: &Tensor,
    label: usize,
    cfg: &AttackConfig,
    trace_final: bool,
) -> Result<(AdversarialResult, Vec<ModuleGradient>)> {
    cfg.validate(&model.config)?;
    if label >= model.config.num_classes {
        return Err(AttackError::invalid(
            "label",
            format!(
                "label {label} out of range for {} classes",
                model.config.num_classes
            ),
        ));
    }
    let eps = cfg.epsilon_normalized();
    let alpha = cfg.alpha_normalized();
    let hook: Option<Box<HookFn>> = cfg.tgr.clone().map(tgr_hook);
    // PatchOut stream: one generator per run, keyed by both the attack seed
    // and the PatchOut seed, drawing a fresh mask every iteration.
    let mut patch_rng = cfg
        .patchout
        .map(|p| Rng::new(p.rng_seed ^ cfg.seed.rotate_left(17)));

    let mut x_adv = x.clone();
    let mut momentum = x.zeros_like();
    let mut per_step_loss = Vec::with_capacity(cfg.steps);
    let mut final_trace = Vec::new();

    for step in 0..cfg.steps {
        let (logits, cache) = forward(model, &x_adv)?;
        let (loss, loss_grad) = cross_entropy(&logits, label)?;
        per_step_loss.push(loss);
        let out = backward(model, &cache, &loss_grad, hook.as_deref())?;
        let mut grad = out.input_grad;
        if trace_final && step + 1 == cfg.steps {
            final_trace = out.module_grads;
        }
        if let (Some(rng), Some(p)) = (patch_rng.as_mut(), cfg.patchout.as_ref()) {
            let mask = patchout_mask(&model.config, p.num_patches, rng)?;
            grad = grad.hadamard(&mask)?;
        }
        momentum = mim_step(&momentum, &grad, cfg.mu)?;
        let stepped = x_adv.add(&sign(&momentum).scale(alpha))?;
        x_adv = clip_project(&stepped, x, eps)?;
    }

    let (logits, _) = forward(model, &x_adv)?;
    let success_on_source = logits.argmax() != label;
    debug_assert!(x_adv.is_all_finite());
    Ok((
        AdversarialResult {
            x_adv,
            per_step_loss,
            success_on_source,
        },
        final_trace,
    ))
}
