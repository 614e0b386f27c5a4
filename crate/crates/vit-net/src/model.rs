use std::sync::atomic::{AtomicU64, Ordering};

use tensor_core::{Rng, Tensor};

use crate::config::ViTConfig;
use crate::error::Result;

static NEXT_MODEL_ID: AtomicU64 = AtomicU64::new(1);

/// Weights of one transformer block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockParams {
    pub ln1_gamma: Tensor,
    pub ln1_beta: Tensor,
    /// Fused QKV projection, `[D, 3D]`.
    pub qkv_weight: Tensor,
    pub qkv_bias: Tensor,
    /// Attention output projection, `[D, D]`.
    pub proj_weight: Tensor,
    pub proj_bias: Tensor,
    pub ln2_gamma: Tensor,
    pub ln2_beta: Tensor,
    /// First MLP layer, `[D, hidden]`.
    pub fc1_weight: Tensor,
    pub fc1_bias: Tensor,
    /// Second MLP layer, `[hidden, D]`.
    pub fc2_weight: Tensor,
    pub fc2_bias: Tensor,
}

/// All model weights in canonical order (the order used by serialization,
/// initialization draws, and flat parameter traversal).
#[derive(Debug, Clone, PartialEq)]
pub struct ViTParams {
    /// Patch embedding projection, `[P*P*C, D]`.
    pub patch_weight: Tensor,
    pub patch_bias: Tensor,
    /// Positional embedding, `[S, D]`.
    pub pos_embed: Tensor,
    /// Learned classification token, `[D]`, present iff the config uses one.
    pub cls_token: Option<Tensor>,
    pub blocks: Vec<BlockParams>,
    pub final_gamma: Tensor,
    pub final_beta: Tensor,
    /// Classification head, `[D, num_classes]`.
    pub head_weight: Tensor,
    pub head_bias: Tensor,
}

impl ViTParams {
    /// Zero-valued parameter set with the shapes implied by `config`.
    pub fn zeros(config: &ViTConfig) -> Self {
        let d = config.embed_dim;
        let hidden = config.mlp_hidden();
        let blocks = (0..config.depth)
            .map(|_| BlockParams {
                ln1_gamma: Tensor::zeros(&[d]),
                ln1_beta: Tensor::zeros(&[d]),
                qkv_weight: Tensor::zeros(&[d, 3 * d]),
                qkv_bias: Tensor::zeros(&[3 * d]),
                proj_weight: Tensor::zeros(&[d, d]),
                proj_bias: Tensor::zeros(&[d]),
                ln2_gamma: Tensor::zeros(&[d]),
                ln2_beta: Tensor::zeros(&[d]),
                fc1_weight: Tensor::zeros(&[d, hidden]),
                fc1_bias: Tensor::zeros(&[hidden]),
                fc2_weight: Tensor::zeros(&[hidden, d]),
                fc2_bias: Tensor::zeros(&[d]),
            })
            .collect();
        Self {
            patch_weight: Tensor::zeros(&[config.patch_dim(), d]),
            patch_bias: Tensor::zeros(&[d]),
            pos_embed: Tensor::zeros(&[config.seq_len(), d]),
            cls_token: config.use_class_token.then(|| Tensor::zeros(&[d])),
            blocks,
            final_gamma: Tensor::zeros(&[d]),
            final_beta: Tensor::zeros(&[d]),
            head_weight: Tensor::zeros(&[d, config.num_classes]),
            head_bias: Tensor::zeros(&[config.num_classes]),
        }
    }

    /// Visit every parameter with its canonical name, in canonical order.
    pub fn for_each<'a>(&'a self, mut f: impl FnMut(String, &'a Tensor)) {
        f("patch_embed.weight".into(), &self.patch_weight);
        f("patch_embed.bias".into(), &self.patch_bias);
        f("pos_embed".into(), &self.pos_embed);
        if let Some(cls) = &self.cls_token {
            f("cls_token".into(), cls);
        }
        for (b, blk) in self.blocks.iter().enumerate() {
            f(format!("block{b}.ln1.gamma"), &blk.ln1_gamma);
            f(format!("block{b}.ln1.beta"), &blk.ln1_beta);
            f(format!("block{b}.qkv.weight"), &blk.qkv_weight);
            f(format!("block{b}.qkv.bias"), &blk.qkv_bias);
            f(format!("block{b}.proj.weight"), &blk.proj_weight);
            f(format!("block{b}.proj.bias"), &blk.proj_bias);
            f(format!("block{b}.ln2.gamma"), &blk.ln2_gamma);
            f(format!("block{b}.ln2.beta"), &blk.ln2_beta);
            f(format!("block{b}.mlp.fc1.weight"), &blk.fc1_weight);
            f(format!("block{b}.mlp.fc1.bias"), &blk.fc1_bias);
            f(format!("block{b}.mlp.fc2.weight"), &blk.fc2_weight);
            f(format!("block{b}.mlp.fc2.bias"), &blk.fc2_bias);
        }
        f("final_norm.gamma".into(), &self.final_gamma);
        f("final_norm.beta".into(), &self.final_beta);
        f("head.weight".into(), &self.head_weight);
        f("head.bias".into(), &self.head_bias);
    }

    /// Mutable references to every parameter, in canonical order.
    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out: Vec<&mut Tensor> = vec![
            &mut self.patch_weight,
            &mut self.patch_bias,
            &mut self.pos_embed,
        ];
        if let Some(cls) = &mut self.cls_token {
            out.push(cls);
        }
        for blk in &mut self.blocks {
            out.push(&mut blk.ln1_gamma);
            out.push(&mut blk.ln1_beta);
            out.push(&mut blk.qkv_weight);
            out.push(&mut blk.qkv_bias);
            out.push(&mut blk.proj_weight);
            out.push(&mut blk.proj_bias);
            out.push(&mut blk.ln2_gamma);
            out.push(&mut blk.ln2_beta);
            out.push(&mut blk.fc1_weight);
            out.push(&mut blk.fc1_bias);
            out.push(&mut blk.fc2_weight);
            out.push(&mut blk.fc2_bias);
        }
        out.push(&mut self.final_gamma);
        out.push(&mut self.final_beta);
        out.push(&mut self.head_weight);
        out.push(&mut self.head_bias);
        out
    }

    /// Shared references to every parameter, in canonical order.
    pub fn tensors(&self) -> Vec<&Tensor> {
        let mut out = Vec::new();
        self.for_each(|_, t| out.push(t));
        out
    }

    pub fn total_elements(&self) -> usize {
        let mut n = 0;
        self.for_each(|_, t| n += t.len());
        n
    }
}

/// A parameterized tiny Vision Transformer.
///
/// Models are immutable after construction or loading; forward and backward
/// are pure functions of `(model, input)` and safe to call concurrently.
#[derive(Debug, Clone)]
pub struct ViTModel {
    pub config: ViTConfig,
    pub params: ViTParams,
    instance_id: u64,
}

impl ViTModel {
    pub fn new(config: ViTConfig, params: ViTParams) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            params,
            instance_id: NEXT_MODEL_ID.fetch_add(1, Ordering::Relaxed),
        })
    }

    /// Fresh model with all parameters zero.
    pub fn zeros(config: ViTConfig) -> Result<Self> {
        let params = ViTParams::zeros(&config);
        Self::new(config, params)
    }

    /// Random initialization. Weight matrices and the class token draw from
    /// `0.02 * normal` in canonical parameter order, so a given seed pins
    /// every weight; biases and norm betas are zero, norm gammas one. The
    /// positional embedding starts at a fixed sinusoid (amplitude 0.1) over
    /// token index, handing attention usable position information from the
    /// first step; it remains an ordinary trainable parameter.
    pub fn init_random(config: ViTConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut params = ViTParams::zeros(&config);
        let mut rng = Rng::new(seed);
        for t in params.tensors_mut() {
            let rank = t.rank();
            // Matrices and embeddings get noise; rank-1 vectors stay zero.
            if rank >= 2 {
                for v in t.data_mut() {
                    *v = 0.02 * rng.normal();
                }
            }
        }
        if let Some(cls) = &mut params.cls_token {
            for v in cls.data_mut() {
                *v = 0.02 * rng.normal();
            }
        }
        for blk in &mut params.blocks {
            blk.ln1_gamma.data_mut().fill(1.0);
            blk.ln2_gamma.data_mut().fill(1.0);
        }
        params.final_gamma.data_mut().fill(1.0);
        let d = config.embed_dim;
        let pos = params.pos_embed.data_mut();
        for t in 0..config.seq_len() {
            for i in 0..d / 2 {
                let rate = (t as f64) / 10000f64.powf(2.0 * i as f64 / d as f64);
                pos[t * d + 2 * i] = 0.1 * rate.sin();
                pos[t * d + 2 * i + 1] = 0.1 * rate.cos();
            }
        }
        Self::new(config, params)
    }

    /// Process-local identity used to detect stale forward caches.
    pub fn instance_id(&self) -> u64 {
        self.instance_id
    }

    /// Re-tag this model with a fresh instance id. Call after mutating
    /// parameters so caches minted before the change are rejected.
    pub fn refresh_instance_id(&mut self) {
        self.instance_id = NEXT_MODEL_ID.fetch_add(1, Ordering::Relaxed);
    }
}
