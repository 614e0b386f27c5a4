use tensor_core::Tensor;
use vit_net::ComponentKind;

use crate::config::{EliminationMode, TgrConfig};
use crate::error::Result;
use crate::select::select_extreme_tokens;

/// Regularize a token-by-channel gradient (QKV or MLP payload, `[S, C]`):
/// scale everything by `s`, then eliminate extreme gradients.
///
/// `PerChannelEntry` ranks each channel independently and zeroes the `2k`
/// extreme entries of that channel. `GlobalTokenRow` scores each token by its
/// L1 norm across channels, selects `2k` extreme tokens on that score, and
/// zeroes their entire rows.
pub fn regularize_token_matrix(grad: &Tensor, cfg: &TgrConfig, s: f64) -> Result<Tensor> {
    let (tokens, channels) = grad.dims2("regularize_token_matrix")?;
    let mut out = grad.scale(s);
    if cfg.k == 0 {
        return Ok(out);
    }
    match cfg.elimination_mode {
        EliminationMode::PerChannelEntry => {
            let mut column = vec![0.0; tokens];
            for c in 0..channels {
                for t in 0..tokens {
                    column[t] = grad.data()[t * channels + c];
                }
                for t in select_extreme_tokens(&column, cfg.k, cfg.selection_mode)? {
                    out.data_mut()[t * channels + c] = 0.0;
                }
            }
        }
        EliminationMode::GlobalTokenRow => {
            let scores: Vec<f64> = grad
                .rows()
                .map(|row| row.iter().map(|v| v.abs()).sum())
                .collect();
            for t in select_extreme_tokens(&scores, cfg.k, cfg.selection_mode)? {
                out.data_mut()[t * channels..(t + 1) * channels].fill(0.0);
            }
        }
    }
    Ok(out)
}

/// Regularize an attention-map gradient (`[M, S, S]`): scale everything by
/// `s`, then for every extreme entry at `(row, col)` zero that row and that
/// column.
///
/// `PerChannelEntry` locates `2k` extreme entries per head and zeroes within
/// that head only. `GlobalTokenRow` locates the `2k` extreme entries over the
/// whole map and zeroes the rows and columns across all heads.
pub fn regularize_attention_map(grad: &Tensor, cfg: &TgrConfig, s: f64) -> Result<Tensor> {
    let (heads, rows, cols) = grad.dims3("regularize_attention_map")?;
    let mut out = grad.scale(s);
    if cfg.k == 0 {
        return Ok(out);
    }
    let plane = rows * cols;
    match cfg.elimination_mode {
        EliminationMode::PerChannelEntry => {
            for h in 0..heads {
                let slice = &grad.data()[h * plane..(h + 1) * plane];
                let picks = select_extreme_tokens(slice, cfg.k, cfg.selection_mode)?;
                let out_slice = &mut out.data_mut()[h * plane..(h + 1) * plane];
                for flat in picks {
                    zero_row_col(out_slice, rows, cols, flat / cols, flat % cols);
                }
            }
        }
        EliminationMode::GlobalTokenRow => {
            let picks = select_extreme_tokens(grad.data(), cfg.k, cfg.selection_mode)?;
            for flat in picks {
                let within = flat % plane;
                let (r, c) = (within / cols, within % cols);
                for h in 0..heads {
                    let out_slice = &mut out.data_mut()[h * plane..(h + 1) * plane];
                    zero_row_col(out_slice, rows, cols, r, c);
                }
            }
        }
    }
    Ok(out)
}

fn zero_row_col(plane: &mut [f64], rows: usize, cols: usize, r: usize, c: usize) {
    plane[r * cols..(r + 1) * cols].fill(0.0);
    for row in 0..rows {
        plane[row * cols + c] = 0.0;
    }
}

/// The scaling factor configured for a component kind.
pub fn scaling_for(cfg: &TgrConfig, kind: ComponentKind) -> f64 {
    match kind {
        ComponentKind::Attention => cfg.s_attention,
        ComponentKind::Qkv => cfg.s_qkv,
        ComponentKind::Mlp => cfg.s_mlp,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ComponentSet, SelectionMode};
    use tensor_core::Rng;

    fn cfg(k: usize, elimination: EliminationMode) -> TgrConfig {
        TgrConfig {
            k,
            elimination_mode: elimination,
            ..Default::default()
        }
    }

    #[test]
    fn identity_when_k_zero_and_unit_scale() {
        let grad = Tensor::new(vec![3, 2], vec![1.0, -2.0, 3.0, 0.5, -0.1, 4.0]).unwrap();
        let out =
            regularize_token_matrix(&grad, &cfg(0, EliminationMode::PerChannelEntry), 1.0).unwrap();
        assert_eq!(out.data(), grad.data());
    }

    #[test]
    fn hand_checkable_single_column() {
        let grad = Tensor::new(vec![3, 1], vec![1.0, -5.0, 2.0]).unwrap();
        let out =
            regularize_token_matrix(&grad, &cfg(1, EliminationMode::PerChannelEntry), 0.5).unwrap();
        assert_eq!(out.data(), &[0.5, 0.0, 0.0]);
    }

    #[test]
    fn per_channel_zeroes_two_entries_per_channel() {
        let mut rng = Rng::new(11);
        let grad = Tensor::new(vec![8, 5], (0..40).map(|_| rng.uniform(-1.0, 1.0)).collect())
            .unwrap();
        let c = cfg(1, EliminationMode::PerChannelEntry);
        let out = regularize_token_matrix(&grad, &c, 1.0).unwrap();
        let zeroed = out
            .data()
            .iter()
            .zip(grad.data())
            .filter(|(&o, &g)| o == 0.0 && g != 0.0)
            .count();
        assert_eq!(zeroed, 2 * 5);
        // Second moment strictly decreases when nonzero entries were hit.
        assert!(out.sum_squares() < grad.sum_squares());
    }

    #[test]
    fn token_row_mode_zeroes_whole_rows() {
        let grad = Tensor::new(
            vec![4, 2],
            vec![10.0, 10.0, 0.1, 0.1, -9.0, -9.0, 1.0, 1.0],
        )
        .unwrap();
        let c = cfg(1, EliminationMode::GlobalTokenRow);
        let out = regularize_token_matrix(&grad, &c, 1.0).unwrap();
        // L1 scores: 20, 0.2, 18, 2 -> extremes are rows 0 (max) and 1 (min).
        assert_eq!(out.data(), &[0.0, 0.0, 0.0, 0.0, -9.0, -9.0, 1.0, 1.0]);
    }

    #[test]
    fn attention_hand_checkable_rows_and_columns() {
        // Unique max at (0, 2), unique min at (1, 1).
        let grad = Tensor::new(
            vec![1, 3, 3],
            vec![0.1, 0.2, 9.0, 0.3, -9.0, 0.4, 0.5, 0.6, 0.7],
        )
        .unwrap();
        let c = cfg(1, EliminationMode::PerChannelEntry);
        let out = regularize_attention_map(&grad, &c, 1.0).unwrap();
        let expect = [
            0.0, 0.0, 0.0, // row 0 zeroed
            0.0, 0.0, 0.0, // row 1 zeroed
            0.5, 0.0, 0.0, // columns 1 and 2 zeroed; (2,0) survives
        ];
        assert_eq!(out.data(), &expect);
    }

    #[test]
    fn attention_identity_when_k_zero() {
        let mut rng = Rng::new(3);
        let grad = Tensor::new(vec![2, 4, 4], (0..32).map(|_| rng.normal()).collect()).unwrap();
        let out =
            regularize_attention_map(&grad, &cfg(0, EliminationMode::PerChannelEntry), 1.0)
                .unwrap();
        assert_eq!(out.data(), grad.data());
    }

    // Brute-force mask oracle: recompute which entries must survive.
    fn attention_mask_oracle(
        grad: &Tensor,
        k: usize,
        mode: EliminationMode,
    ) -> Vec<bool> {
        let (heads, rows, cols) = (grad.shape()[0], grad.shape()[1], grad.shape()[2]);
        let plane = rows * cols;
        let mut keep = vec![true; grad.len()];
        match mode {
            EliminationMode::PerChannelEntry => {
                for h in 0..heads {
                    let slice = &grad.data()[h * plane..(h + 1) * plane];
                    let picks =
                        select_extreme_tokens(slice, k, SelectionMode::SignedExtremes).unwrap();
                    for flat in picks {
                        let (r, c) = (flat / cols, flat % cols);
                        for j in 0..cols {
                            keep[h * plane + r * cols + j] = false;
                        }
                        for i in 0..rows {
                            keep[h * plane + i * cols + c] = false;
                        }
                    }
                }
            }
            EliminationMode::GlobalTokenRow => {
                let picks =
                    select_extreme_tokens(grad.data(), k, SelectionMode::SignedExtremes).unwrap();
                for flat in picks {
                    let within = flat % plane;
                    let (r, c) = (within / cols, within % cols);
                    for h in 0..heads {
                        for j in 0..cols {
                            keep[h * plane + r * cols + j] = false;
                        }
                        for i in 0..rows {
                            keep[h * plane + i * cols + c] = false;
                        }
                    }
                }
            }
        }
        keep
    }

    #[test]
    fn attention_matches_brute_force_mask() {
        let mut rng = Rng::new(2024);
        for _ in 0..50 {
            let grad =
                Tensor::new(vec![2, 8, 8], (0..128).map(|_| rng.normal()).collect()).unwrap();
            for mode in [EliminationMode::PerChannelEntry, EliminationMode::GlobalTokenRow] {
                let c = cfg(1, mode);
                let out = regularize_attention_map(&grad, &c, 0.25).unwrap();
                let keep = attention_mask_oracle(&grad, 1, mode);
                for i in 0..grad.len() {
                    let expect = if keep[i] { 0.25 * grad.data()[i] } else { 0.0 };
                    assert_eq!(out.data()[i], expect);
                }
            }
        }
    }

    #[test]
    fn second_moment_reduction_holds() {
        let mut rng = Rng::new(5);
        let c = TgrConfig {
            k: 2,
            enabled_components: ComponentSet::ALL,
            ..Default::default()
        };
        for _ in 0..20 {
            let grad =
                Tensor::new(vec![10, 6], (0..60).map(|_| rng.normal()).collect()).unwrap();
            for s in [0.25, 0.75, 1.0] {
                let out = regularize_token_matrix(&grad, &c, s).unwrap();
                assert!(out.sum_squares() <= s * s * grad.sum_squares() + 1e-15);
            }
        }
    }
}
