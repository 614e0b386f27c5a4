use tensor_core::{
    gelu_backward, layer_norm_backward, matmul, matmul_nt, matmul_tn, softmax_backward, Tensor,
};

use crate::config::LN_EPS;
use crate::error::{NetError, Result};
use crate::forward::{col_sums, inverse_patchify, slice_cols, ForwardCache};
use crate::hooks::{ComponentKind, HookFn, ModuleGradient};
use crate::model::{ViTModel, ViTParams};

/// Result of a reverse-mode traversal.
#[derive(Debug, Clone)]
pub struct BackwardOutput {
    /// Gradient of the loss w.r.t. the input image, `[C, H, W]`.
    pub input_grad: Tensor,
    /// One entry per (component, block) pair in traversal order: blocks in
    /// reverse order, MLP then Attention then QKV within a block. Each entry
    /// holds the gradient AFTER hook application, i.e. the tensor that
    /// actually continued upstream.
    pub module_grads: Vec<ModuleGradient>,
}

/// Reverse-mode traversal from `loss_grad` (gradient w.r.t. the logits) back
/// to the input image.
///
/// At each hook point the interception order is: gradient w.r.t. the MLP
/// block input, then w.r.t. the attention probability map, then w.r.t. the
/// fused QKV projection input, per block in reverse block order. The hook's
/// output is what continues to flow upstream; with no hook the true gradient
/// flows unchanged.
pub fn backward(
    model: &ViTModel,
    cache: &ForwardCache,
    loss_grad: &Tensor,
    hook: Option<&HookFn>,
) -> Result<BackwardOutput> {
    backward_impl(model, cache, loss_grad, hook, None)
}

/// Same traversal as [`backward`], additionally accumulating parameter
/// gradients (used by training).
pub fn backward_with_param_grads(
    model: &ViTModel,
    cache: &ForwardCache,
    loss_grad: &Tensor,
    hook: Option<&HookFn>,
) -> Result<(BackwardOutput, ViTParams)> {
    let mut grads = ViTParams::zeros(&model.config);
    let out = backward_impl(model, cache, loss_grad, hook, Some(&mut grads))?;
    Ok((out, grads))
}

fn apply_hook(
    hook: Option<&HookFn>,
    kind: ComponentKind,
    block_index: usize,
    grad: Tensor,
    sink: &mut Vec<ModuleGradient>,
) -> Result<Tensor> {
    let grad = match hook {
        Some(h) => {
            let mg = ModuleGradient {
                kind,
                block_index,
                grad,
            };
            let out = h(&mg);
            if out.shape() != mg.grad.shape() {
                return Err(NetError::HookShape {
                    kind,
                    block: block_index,
                    expected: mg.grad.shape().to_vec(),
                    actual: out.shape().to_vec(),
                });
            }
            out
        }
        None => grad,
    };
    sink.push(ModuleGradient {
        kind,
        block_index,
        grad: grad.clone(),
    });
    Ok(grad)
}

fn backward_impl(
    model: &ViTModel,
    cache: &ForwardCache,
    loss_grad: &Tensor,
    hook: Option<&HookFn>,
    mut param_grads: Option<&mut ViTParams>,
) -> Result<BackwardOutput> {
    let cfg = &model.config;
    if cache.model_id != model.instance_id() {
        return Err(NetError::StaleCache {
            cache_id: cache.model_id,
            model_id: model.instance_id(),
        });
    }
    if loss_grad.shape() != [cfg.num_classes] {
        return Err(NetError::InputShape {
            expected: vec![cfg.num_classes],
            actual: loss_grad.shape().to_vec(),
        });
    }
    let p = &model.params;
    let d = cfg.embed_dim;
    let s = cfg.seq_len();
    let m = cfg.num_heads;
    let dh = cfg.head_dim();
    let scale = 1.0 / (dh as f64).sqrt();
    let mut module_grads = Vec::with_capacity(3 * cfg.depth);

    // Head: logits = pooled . head_weight + head_bias.
    let mut d_pooled = vec![0.0; d];
    {
        let hw = p.head_weight.data();
        let lg = loss_grad.data();
        for (i, dp) in d_pooled.iter_mut().enumerate() {
            let row = &hw[i * cfg.num_classes..(i + 1) * cfg.num_classes];
            let mut acc = 0.0;
            for (w, &g) in row.iter().zip(lg) {
                acc += w * g;
            }
            *dp = acc;
        }
        if let Some(pg) = param_grads.as_deref_mut() {
            let pooled = cache.pooled.data();
            let hwg = pg.head_weight.data_mut();
            for i in 0..d {
                for j in 0..cfg.num_classes {
                    hwg[i * cfg.num_classes + j] += pooled[i] * lg[j];
                }
            }
            pg.head_bias.accumulate(loss_grad)?;
        }
    }

    // Pooling: class-token row or mean over tokens.
    let mut d_final_ln_out = Tensor::zeros(&[s, d]);
    if cfg.use_class_token {
        d_final_ln_out.data_mut()[..d].copy_from_slice(&d_pooled);
    } else {
        let inv = 1.0 / s as f64;
        for row in d_final_ln_out.data_mut().chunks_exact_mut(d) {
            for (o, &g) in row.iter_mut().zip(&d_pooled) {
                *o = g * inv;
            }
        }
    }

    let ln = layer_norm_backward(&cache.final_ln_in, &p.final_gamma, &d_final_ln_out, LN_EPS)?;
    if let Some(pg) = param_grads.as_deref_mut() {
        pg.final_gamma.accumulate(&ln.dgamma)?;
        pg.final_beta.accumulate(&ln.dbeta)?;
    }
    let mut dx = ln.dx;

    for (b, (blk, bc)) in p.blocks.iter().zip(&cache.blocks).enumerate().rev() {
        // x_out = x_mid + mlp_out
        let d_mlp_out = &dx;
        let d_act = matmul_nt(d_mlp_out, &blk.fc2_weight)?;
        let d_pre = gelu_backward(&bc.mlp_pre, &d_act)?;
        let d_ln2_out = matmul_nt(&d_pre, &blk.fc1_weight)?;
        if let Some(pg) = param_grads.as_deref_mut() {
            let g = &mut pg.blocks[b];
            g.fc2_weight.accumulate(&matmul_tn(&bc.mlp_act, d_mlp_out)?)?;
            g.fc2_bias.accumulate(&col_sums(d_mlp_out))?;
            g.fc1_weight.accumulate(&matmul_tn(&bc.ln2_out, &d_pre)?)?;
            g.fc1_bias.accumulate(&col_sums(&d_pre))?;
        }
        let d_ln2_out = apply_hook(hook, ComponentKind::Mlp, b, d_ln2_out, &mut module_grads)?;

        let ln2 = layer_norm_backward(&bc.x_mid, &blk.ln2_gamma, &d_ln2_out, LN_EPS)?;
        if let Some(pg) = param_grads.as_deref_mut() {
            let g = &mut pg.blocks[b];
            g.ln2_gamma.accumulate(&ln2.dgamma)?;
            g.ln2_beta.accumulate(&ln2.dbeta)?;
        }
        let d_x_mid = dx.add(&ln2.dx)?;

        // x_mid = x_in + attn_out; attn_out = ctx . proj_weight + proj_bias
        let d_attn_out = &d_x_mid;
        let d_ctx = matmul_nt(d_attn_out, &blk.proj_weight)?;
        if let Some(pg) = param_grads.as_deref_mut() {
            let g = &mut pg.blocks[b];
            g.proj_weight.accumulate(&matmul_tn(&bc.ctx, d_attn_out)?)?;
            g.proj_bias.accumulate(&col_sums(d_attn_out))?;
        }

        // Per-head attention gradients; dV does not depend on the hooked dA.
        let mut d_attn = Vec::with_capacity(m * s * s);
        let mut d_v_heads = Vec::with_capacity(m);
        for head in 0..m {
            let a = head_slice(&bc.attn_probs, head, s);
            let v = slice_cols(&bc.qkv, 2 * d + head * dh, 2 * d + (head + 1) * dh);
            let d_ctx_h = slice_cols(&d_ctx, head * dh, (head + 1) * dh);
            let d_a = matmul_nt(&d_ctx_h, &v)?;
            d_attn.extend_from_slice(d_a.data());
            d_v_heads.push(matmul_tn(&a, &d_ctx_h)?);
        }
        let d_attn = Tensor::new(vec![m, s, s], d_attn)?;
        let d_attn = apply_hook(hook, ComponentKind::Attention, b, d_attn, &mut module_grads)?;

        let mut d_qkv = Tensor::zeros(&[s, 3 * d]);
        for head in 0..m {
            let a = head_slice(&bc.attn_probs, head, s);
            let q = slice_cols(&bc.qkv, head * dh, (head + 1) * dh);
            let k = slice_cols(&bc.qkv, d + head * dh, d + (head + 1) * dh);
            let d_a = head_slice(&d_attn, head, s);
            let d_scores = softmax_backward(&a, &d_a)?;
            let d_q = matmul(&d_scores, &k)?.scale(scale);
            let d_k = matmul_tn(&d_scores, &q)?.scale(scale);
            write_cols(&mut d_qkv, head * dh, &d_q);
            write_cols(&mut d_qkv, d + head * dh, &d_k);
            write_cols(&mut d_qkv, 2 * d + head * dh, &d_v_heads[head]);
        }

        let d_ln1_out = matmul_nt(&d_qkv, &blk.qkv_weight)?;
        if let Some(pg) = param_grads.as_deref_mut() {
            let g = &mut pg.blocks[b];
            g.qkv_weight.accumulate(&matmul_tn(&bc.ln1_out, &d_qkv)?)?;
            g.qkv_bias.accumulate(&col_sums(&d_qkv))?;
        }
        let d_ln1_out = apply_hook(hook, ComponentKind::Qkv, b, d_ln1_out, &mut module_grads)?;

        let ln1 = layer_norm_backward(&bc.x_in, &blk.ln1_gamma, &d_ln1_out, LN_EPS)?;
        if let Some(pg) = param_grads.as_deref_mut() {
            let g = &mut pg.blocks[b];
            g.ln1_gamma.accumulate(&ln1.dgamma)?;
            g.ln1_beta.accumulate(&ln1.dbeta)?;
        }
        dx = d_x_mid.add(&ln1.dx)?;
    }

    // Embedding: x = (cls | patches . W + b) + pos_embed.
    if let Some(pg) = param_grads.as_deref_mut() {
        pg.pos_embed.accumulate(&dx)?;
    }
    let d_tok = if cfg.use_class_token {
        if let Some(pg) = param_grads.as_deref_mut() {
            let cls_grad = Tensor::new(vec![d], dx.data()[..d].to_vec())?;
            pg.cls_token
                .as_mut()
                .expect("config has class token")
                .accumulate(&cls_grad)?;
        }
        Tensor::new(vec![s - 1, d], dx.data()[d..].to_vec())?
    } else {
        dx
    };
    if let Some(pg) = param_grads.as_deref_mut() {
        pg.patch_weight
            .accumulate(&matmul_tn(&cache.patches, &d_tok)?)?;
        pg.patch_bias.accumulate(&col_sums(&d_tok))?;
    }
    let d_patches = matmul_nt(&d_tok, &p.patch_weight)?;
    let input_grad = inverse_patchify(
        &d_patches,
        cfg.in_channels,
        cfg.image_size,
        cfg.image_size,
        cfg.patch_size,
    )?;

    Ok(BackwardOutput {
        input_grad,
        module_grads,
    })
}

/// Copy `src` (`[S, w]`) into columns `[lo, lo+w)` of `dst` (`[S, cols]`).
fn write_cols(dst: &mut Tensor, lo: usize, src: &Tensor) {
    let (rows, w) = src.dims2("write_cols").expect("rank-2 source");
    let cols = dst.last_dim();
    let data = dst.data_mut();
    for r in 0..rows {
        data[r * cols + lo..r * cols + lo + w].copy_from_slice(&src.data()[r * w..(r + 1) * w]);
    }
}

/// Extract head `h` of a stacked `[M, S, S]` tensor as an `[S, S]` matrix.
fn head_slice(stacked: &Tensor, head: usize, s: usize) -> Tensor {
    let lo = head * s * s;
    Tensor::new(vec![s, s], stacked.data()[lo..lo + s * s].to_vec()).expect("head slice shape")
}

/// Softmax cross-entropy of `logits` against a class index.
///
/// Returns the scalar loss and its gradient w.r.t. the logits,
/// `softmax(logits) - onehot(label)`.
pub fn cross_entropy(logits: &Tensor, label: usize) -> Result<(f64, Tensor)> {
    let k = logits.len();
    if logits.rank() != 1 {
        return Err(NetError::InputShape {
            expected: vec![k],
            actual: logits.shape().to_vec(),
        });
    }
    if label >= k {
        return Err(NetError::LabelOutOfRange {
            label,
            num_classes: k,
        });
    }
    let data = logits.data();
    let max = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum_exp: f64 = data.iter().map(|&v| (v - max).exp()).sum();
    let lse = max + sum_exp.ln();
    let loss = lse - data[label];
    let mut grad: Vec<f64> = data.iter().map(|&v| (v - max).exp() / sum_exp).collect();
    grad[label] -= 1.0;
    Ok((loss, Tensor::new(vec![k], grad)?))
}
