//! Forward-pass oracle: an independently coded straight-line evaluation of a
//! single-block, single-head model, written with bare loops over flat slices
//! so it shares no code path with the library implementation.

use tensor_core::{Rng, Tensor};
use vit_net::{forward, ViTConfig, ViTModel};

const EPS: f64 = 1e-5;

fn ln_row(row: &[f64], gamma: &[f64], beta: &[f64]) -> Vec<f64> {
    let d = row.len() as f64;
    let mean = row.iter().sum::<f64>() / d;
    let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / d;
    let rstd = 1.0 / (var + EPS).sqrt();
    row.iter()
        .enumerate()
        .map(|(i, &v)| (v - mean) * rstd * gamma[i] + beta[i])
        .collect()
}

fn gelu_scalar(x: f64) -> f64 {
    let c = (2.0 / std::f64::consts::PI).sqrt();
    0.5 * x * (1.0 + (c * (x + 0.044715 * x * x * x)).tanh())
}

#[test]
fn forward_matches_straight_line_oracle() {
    let cfg = ViTConfig {
        image_size: 4,
        patch_size: 2,
        in_channels: 1,
        embed_dim: 4,
        num_heads: 1,
        depth: 1,
        mlp_ratio: 2.0,
        num_classes: 3,
        use_class_token: true,
    };
    let model = ViTModel::init_random(cfg, 2024).unwrap();
    let mut rng = Rng::new(7);
    let image = Tensor::new(vec![1, 4, 4], (0..16).map(|_| rng.next_f64()).collect()).unwrap();
    let (logits, _) = forward(&model, &image).unwrap();

    // Straight-line oracle. N = 4 patches of 4 pixels, S = 5, D = 4, H = 8.
    let d = 4usize;
    let s = 5usize;
    let hid = 8usize;
    let img = image.data();
    let p = &model.params;
    let blk = &p.blocks[0];

    // Patchify: patch (gy, gx), pixel (py, px), one channel.
    let mut patches = [[0.0f64; 4]; 4];
    for gy in 0..2 {
        for gx in 0..2 {
            for py in 0..2 {
                for px in 0..2 {
                    patches[gy * 2 + gx][py * 2 + px] = img[(gy * 2 + py) * 4 + (gx * 2 + px)];
                }
            }
        }
    }

    // Embedding: x[0] = cls token, x[1..] = patch . W + b; then + pos.
    let pw = p.patch_weight.data(); // [4, 4]
    let pb = p.patch_bias.data();
    let cls = p.cls_token.as_ref().unwrap().data();
    let pos = p.pos_embed.data(); // [5, 4]
    let mut x = vec![vec![0.0f64; d]; s];
    x[0][..d].copy_from_slice(&cls[..d]);
    for n in 0..4 {
        for j in 0..d {
            let mut acc = pb[j];
            for i in 0..4 {
                acc += patches[n][i] * pw[i * d + j];
            }
            x[n + 1][j] = acc;
        }
    }
    for (r, row) in x.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v += pos[r * d + j];
        }
    }

    // Block: pre-norm attention.
    let ln1: Vec<Vec<f64>> = x
        .iter()
        .map(|row| ln_row(row, blk.ln1_gamma.data(), blk.ln1_beta.data()))
        .collect();
    let qkvw = blk.qkv_weight.data(); // [4, 12]
    let qkvb = blk.qkv_bias.data();
    let mut q = vec![vec![0.0f64; d]; s];
    let mut k = vec![vec![0.0f64; d]; s];
    let mut v = vec![vec![0.0f64; d]; s];
    for r in 0..s {
        for j in 0..3 * d {
            let mut acc = qkvb[j];
            for i in 0..d {
                acc += ln1[r][i] * qkvw[i * 3 * d + j];
            }
            match j / d {
                0 => q[r][j % d] = acc,
                1 => k[r][j % d] = acc,
                _ => v[r][j % d] = acc,
            }
        }
    }
    let scale = 1.0 / (d as f64).sqrt(); // single head: dh = D
    let mut attn = vec![vec![0.0f64; s]; s];
    for r in 0..s {
        let scores: Vec<f64> = (0..s)
            .map(|c| (0..d).map(|i| q[r][i] * k[c][i]).sum::<f64>() * scale)
            .collect();
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = scores.iter().map(|&v| (v - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        for c in 0..s {
            attn[r][c] = exps[c] / sum;
        }
    }
    let projw = blk.proj_weight.data();
    let projb = blk.proj_bias.data();
    let mut x_mid = vec![vec![0.0f64; d]; s];
    for r in 0..s {
        let ctx: Vec<f64> = (0..d)
            .map(|i| (0..s).map(|c| attn[r][c] * v[c][i]).sum())
            .collect();
        for j in 0..d {
            let mut acc = projb[j];
            for i in 0..d {
                acc += ctx[i] * projw[i * d + j];
            }
            x_mid[r][j] = x[r][j] + acc;
        }
    }

    // MLP half of the block.
    let fc1w = blk.fc1_weight.data(); // [4, 8]
    let fc1b = blk.fc1_bias.data();
    let fc2w = blk.fc2_weight.data(); // [8, 4]
    let fc2b = blk.fc2_bias.data();
    let mut x_out = vec![vec![0.0f64; d]; s];
    for r in 0..s {
        let h2 = ln_row(&x_mid[r], blk.ln2_gamma.data(), blk.ln2_beta.data());
        let mut act = vec![0.0f64; hid];
        for (j, a) in act.iter_mut().enumerate() {
            let mut acc = fc1b[j];
            for i in 0..d {
                acc += h2[i] * fc1w[i * hid + j];
            }
            *a = gelu_scalar(acc);
        }
        for j in 0..d {
            let mut acc = fc2b[j];
            for (i, &a) in act.iter().enumerate() {
                acc += a * fc2w[i * d + j];
            }
            x_out[r][j] = x_mid[r][j] + acc;
        }
    }

    // Final norm, class-token head.
    let yr = ln_row(&x_out[0], p.final_gamma.data(), p.final_beta.data());
    let hw = p.head_weight.data(); // [4, 3]
    let hb = p.head_bias.data();
    let oracle: Vec<f64> = (0..3)
        .map(|j| {
            let mut acc = hb[j];
            for i in 0..d {
                acc += yr[i] * hw[i * 3 + j];
            }
            acc
        })
        .collect();

    for (got, want) in logits.data().iter().zip(&oracle) {
        assert!(
            (got - want).abs() < 1e-10,
            "logits {got} vs oracle {want}"
        );
    }
}
