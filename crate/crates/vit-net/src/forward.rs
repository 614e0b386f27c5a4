use tensor_core::{layer_norm, matmul, matmul_nt, softmax, Tensor};

use crate::config::{ViTConfig, LN_EPS};
use crate::error::{NetError, Result};
use crate::model::ViTModel;

/// Per-block activations kept for backward.
#[derive(Debug, Clone)]
pub struct BlockCache {
    /// Block input, `[S, D]`.
    pub x_in: Tensor,
    /// First layer-norm output (input of the fused QKV projection), `[S, D]`.
    pub ln1_out: Tensor,
    /// Fused QKV activations, `[S, 3D]`, laid out `[Q | K | V]`.
    pub qkv: Tensor,
    /// Post-softmax attention probabilities, `[M, S, S]`.
    pub attn_probs: Tensor,
    /// Concatenated per-head contexts, `[S, D]`.
    pub ctx: Tensor,
    /// Residual state after attention, `[S, D]`.
    pub x_mid: Tensor,
    /// Second layer-norm output (input of the MLP block), `[S, D]`.
    pub ln2_out: Tensor,
    /// MLP pre-activation, `[S, hidden]`.
    pub mlp_pre: Tensor,
    /// MLP activation (GELU output), `[S, hidden]`.
    pub mlp_act: Tensor,
}

/// Every intermediate activation backward needs, tied to the model instance
/// that produced it.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub(crate) model_id: u64,
    /// Flattened input patches, `[N, P*P*C]`.
    pub patches: Tensor,
    pub blocks: Vec<BlockCache>,
    /// Input of the final layer norm, `[S, D]`.
    pub final_ln_in: Tensor,
    /// Output of the final layer norm, `[S, D]`.
    pub final_ln_out: Tensor,
    /// Head input: class token row or mean-pooled tokens, `[D]`.
    pub pooled: Tensor,
}

/// Split an image `[C, H, W]` into flattened patches `[N, P*P*C]`.
///
/// Patches are ordered row-major over the patch grid; within a patch, pixels
/// are ordered row-major with channels last, i.e. entry `(py*P + px)*C + c`.
pub fn patchify(image: &Tensor, patch_size: usize) -> Result<Tensor> {
    let (c, h, w) = image.dims3("patchify")?;
    if h % patch_size != 0 || w % patch_size != 0 {
        return Err(NetError::InvalidConfig(format!(
            "patch size {patch_size} does not divide image {h}x{w}"
        )));
    }
    let gh = h / patch_size;
    let gw = w / patch_size;
    let n = gh * gw;
    let pd = patch_size * patch_size * c;
    let data = image.data();
    let mut out = Vec::with_capacity(n * pd);
    for gy in 0..gh {
        for gx in 0..gw {
            for py in 0..patch_size {
                for px in 0..patch_size {
                    let y = gy * patch_size + py;
                    let x = gx * patch_size + px;
                    for ch in 0..c {
                        out.push(data[(ch * h + y) * w + x]);
                    }
                }
            }
        }
    }
    Tensor::new(vec![n, pd], out).map_err(Into::into)
}

/// Inverse of [`patchify`]: reassemble `[N, P*P*C]` into `[C, H, W]`.
pub fn inverse_patchify(
    patches: &Tensor,
    channels: usize,
    height: usize,
    width: usize,
    patch_size: usize,
) -> Result<Tensor> {
    let (n, pd) = patches.dims2("inverse_patchify")?;
    let gh = height / patch_size;
    let gw = width / patch_size;
    if n != gh * gw || pd != patch_size * patch_size * channels {
        return Err(NetError::InputShape {
            expected: vec![gh * gw, patch_size * patch_size * channels],
            actual: vec![n, pd],
        });
    }
    let mut out = vec![0.0; channels * height * width];
    let data = patches.data();
    for gy in 0..gh {
        for gx in 0..gw {
            let row = &data[(gy * gw + gx) * pd..(gy * gw + gx + 1) * pd];
            for py in 0..patch_size {
                for px in 0..patch_size {
                    let y = gy * patch_size + py;
                    let x = gx * patch_size + px;
                    for ch in 0..channels {
                        out[(ch * height + y) * width + x] =
                            row[(py * patch_size + px) * channels + ch];
                    }
                }
            }
        }
    }
    Tensor::new(vec![channels, height, width], out).map_err(Into::into)
}

/// Copy columns `[lo, hi)` of a `[rows, cols]` tensor into a new tensor.
pub(crate) fn slice_cols(x: &Tensor, lo: usize, hi: usize) -> Tensor {
    let (rows, cols) = x.dims2("slice_cols").expect("rank-2 input");
    debug_assert!(lo < hi && hi <= cols);
    let w = hi - lo;
    let mut out = Vec::with_capacity(rows * w);
    for r in 0..rows {
        out.extend_from_slice(&x.data()[r * cols + lo..r * cols + hi]);
    }
    Tensor::new(vec![rows, w], out).expect("slice shape is consistent")
}

/// Add a `[cols]` bias to every row of a `[rows, cols]` tensor, in place.
pub(crate) fn add_row_bias(x: &mut Tensor, bias: &Tensor) {
    let cols = bias.len();
    debug_assert_eq!(x.last_dim(), cols);
    for row in x.data_mut().chunks_exact_mut(cols) {
        for (v, &b) in row.iter_mut().zip(bias.data()) {
            *v += b;
        }
    }
}

/// Column sums of a `[rows, cols]` tensor.
pub(crate) fn col_sums(x: &Tensor) -> Tensor {
    let cols = x.last_dim();
    let mut out = vec![0.0; cols];
    for row in x.rows() {
        for (o, &v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
    Tensor::new(vec![cols], out).expect("column sums shape")
}

/// Run the network on one image and return class logits plus the cache that
/// backward consumes.
///
/// Layout: patch embedding + positional embedding (+ class token), then
/// `depth` pre-norm blocks (`LN -> attention -> residual; LN -> MLP ->
/// residual`), a final layer norm, and a linear head over the class token
/// (or mean-pooled tokens when no class token is configured).
pub fn forward(model: &ViTModel, image: &Tensor) -> Result<(Tensor, ForwardCache)> {
    let cfg = &model.config;
    if image.shape() != cfg.image_shape().as_slice() {
        return Err(NetError::InputShape {
            expected: cfg.image_shape(),
            actual: image.shape().to_vec(),
        });
    }
    let p = &model.params;
    let d = cfg.embed_dim;
    let s = cfg.seq_len();

    let patches = patchify(image, cfg.patch_size)?;
    let mut tok = matmul(&patches, &p.patch_weight)?;
    add_row_bias(&mut tok, &p.patch_bias);

    let mut x = if let Some(cls) = &p.cls_token {
        let mut data = Vec::with_capacity(s * d);
        data.extend_from_slice(cls.data());
        data.extend_from_slice(tok.data());
        Tensor::new(vec![s, d], data)?
    } else {
        tok
    };
    x = x.add(&p.pos_embed)?;

    let mut blocks = Vec::with_capacity(cfg.depth);
    for blk in &p.blocks {
        let x_in = x;
        let ln1_out = layer_norm(&x_in, &blk.ln1_gamma, &blk.ln1_beta, LN_EPS)?;
        let mut qkv = matmul(&ln1_out, &blk.qkv_weight)?;
        add_row_bias(&mut qkv, &blk.qkv_bias);

        let (attn_probs, ctx) = attention_heads(cfg, &qkv)?;

        let mut attn_out = matmul(&ctx, &blk.proj_weight)?;
        add_row_bias(&mut attn_out, &blk.proj_bias);
        let x_mid = x_in.add(&attn_out)?;

        let ln2_out = layer_norm(&x_mid, &blk.ln2_gamma, &blk.ln2_beta, LN_EPS)?;
        let mut mlp_pre = matmul(&ln2_out, &blk.fc1_weight)?;
        add_row_bias(&mut mlp_pre, &blk.fc1_bias);
        let mlp_act = tensor_core::gelu(&mlp_pre);
        let mut mlp_out = matmul(&mlp_act, &blk.fc2_weight)?;
        add_row_bias(&mut mlp_out, &blk.fc2_bias);
        x = x_mid.add(&mlp_out)?;

        blocks.push(BlockCache {
            x_in,
            ln1_out,
            qkv,
            attn_probs,
            ctx,
            x_mid,
            ln2_out,
            mlp_pre,
            mlp_act,
        });
    }

    let final_ln_in = x;
    let final_ln_out = layer_norm(&final_ln_in, &p.final_gamma, &p.final_beta, LN_EPS)?;
    let pooled = if cfg.use_class_token {
        Tensor::new(vec![d], final_ln_out.data()[..d].to_vec())?
    } else {
        let mut acc = vec![0.0; d];
        for row in final_ln_out.rows() {
            for (a, &v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
        let inv = 1.0 / s as f64;
        Tensor::new(vec![d], acc.into_iter().map(|v| v * inv).collect())?
    };

    let pooled_row = pooled.clone().reshape(vec![1, d])?;
    let mut logits = matmul(&pooled_row, &p.head_weight)?;
    add_row_bias(&mut logits, &p.head_bias);
    let logits = logits.reshape(vec![cfg.num_classes])?;

    let cache = ForwardCache {
        model_id: model.instance_id(),
        patches,
        blocks,
        final_ln_in,
        final_ln_out,
        pooled,
    };
    Ok((logits, cache))
}

/// Multi-head scaled dot-product attention over fused QKV activations.
/// Returns the stacked probability maps `[M, S, S]` and the concatenated
/// per-head contexts `[S, D]`.
fn attention_heads(cfg: &ViTConfig, qkv: &Tensor) -> Result<(Tensor, Tensor)> {
    let s = cfg.seq_len();
    let d = cfg.embed_dim;
    let m = cfg.num_heads;
    let dh = cfg.head_dim();
    let scale = 1.0 / (dh as f64).sqrt();

    let mut probs = Vec::with_capacity(m * s * s);
    let mut ctx = Tensor::zeros(&[s, d]);
    for head in 0..m {
        let q = slice_cols(qkv, head * dh, (head + 1) * dh);
        let k = slice_cols(qkv, d + head * dh, d + (head + 1) * dh);
        let v = slice_cols(qkv, 2 * d + head * dh, 2 * d + (head + 1) * dh);
        let scores = matmul_nt(&q, &k)?.scale(scale);
        let a = softmax(&scores);
        let ctx_h = matmul(&a, &v)?;
        probs.extend_from_slice(a.data());
        let ctx_data = ctx.data_mut();
        for r in 0..s {
            let src = &ctx_h.data()[r * dh..(r + 1) * dh];
            let dst = &mut ctx_data[r * d + head * dh..r * d + (head + 1) * dh];
            dst.copy_from_slice(src);
        }
    }
    Ok((Tensor::new(vec![m, s, s], probs)?, ctx))
}
