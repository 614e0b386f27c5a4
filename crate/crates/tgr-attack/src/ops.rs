use tensor_core::{Rng, Tensor};
use vit_net::ViTConfig;

use crate::error::{AttackError, Result};

/// One momentum accumulation step:
/// `new = mu * momentum + grad / ||grad||_1` (L1 over all entries).
/// A zero gradient contributes nothing.
pub fn mim_step(momentum: &Tensor, grad: &Tensor, mu: f64) -> Result<Tensor> {
    let l1 = grad.l1_norm();
    if l1 == 0.0 {
        return Ok(momentum.scale(mu));
    }
    let inv = 1.0 / l1;
    Ok(momentum.zip_map(grad, "mim_step", |m, g| mu * m + g * inv)?)
}

/// `{0, 1}` pixel mask covering `num_patches` patches sampled uniformly
/// without replacement. The mask has the full `[C, H, W]` image shape; a
/// selected patch exposes its pixels across every channel. Patch indices
/// follow the same row-major grid order as patch extraction.
pub fn patchout_mask(vit: &ViTConfig, num_patches: usize, rng: &mut Rng) -> Result<Tensor> {
    let n = vit.num_patches();
    if num_patches == 0 || num_patches > n {
        return Err(AttackError::invalid(
            "patchout.num_patches",
            format!("{num_patches} outside 1..={n}"),
        ));
    }
    let grid = vit.grid_size();
    let p = vit.patch_size;
    let h = vit.image_size;
    let mut mask = Tensor::zeros(&vit.image_shape());
    let picks = rng.sample_indices(n, num_patches);
    let data = mask.data_mut();
    for patch in picks {
        let gy = patch / grid;
        let gx = patch % grid;
        for ch in 0..vit.in_channels {
            for py in 0..p {
                let y = gy * p + py;
                let row = &mut data[(ch * h + y) * h + gx * p..(ch * h + y) * h + gx * p + p];
                row.fill(1.0);
            }
        }
    }
    Ok(mask)
}

/// Entry-wise projection of `x_adv` into the L-inf ball of radius `epsilon`
/// around `x`, intersected with the valid pixel range `[0, 1]`.
pub fn clip_project(x_adv: &Tensor, x: &Tensor, epsilon: f64) -> Result<Tensor> {
    Ok(x_adv.zip_map(x, "clip_project", |adv, clean| {
        adv.clamp(clean - epsilon, clean + epsilon).clamp(0.0, 1.0)
    })?)
}

/// Entry-wise sign with `sign(0) = 0`.
pub fn sign(x: &Tensor) -> Tensor {
    x.map(|v| {
        if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else {
            0.0
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mim_first_step_has_unit_l1() {
        let momentum = Tensor::zeros(&[4]);
        let grad = Tensor::new(vec![4], vec![3.0, -1.0, 0.0, 4.0]).unwrap();
        let m = mim_step(&momentum, &grad, 1.0).unwrap();
        assert!((m.l1_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mim_mu_zero_is_pure_normalized_gradient() {
        let momentum = Tensor::new(vec![3], vec![5.0, 5.0, 5.0]).unwrap();
        let grad = Tensor::new(vec![3], vec![2.0, 0.0, -2.0]).unwrap();
        let m = mim_step(&momentum, &grad, 0.0).unwrap();
        assert_eq!(m.data(), &[0.5, 0.0, -0.5]);
    }

    #[test]
    fn mim_zero_gradient_decays_only() {
        let momentum = Tensor::new(vec![2], vec![1.0, -2.0]).unwrap();
        let grad = Tensor::zeros(&[2]);
        let m = mim_step(&momentum, &grad, 0.5).unwrap();
        assert_eq!(m.data(), &[0.5, -1.0]);
    }

    #[test]
    fn mim_two_steps_match_hand_accumulation() {
        let g1 = Tensor::new(vec![2], vec![1.0, 3.0]).unwrap();
        let g2 = Tensor::new(vec![2], vec![-2.0, 2.0]).unwrap();
        let m1 = mim_step(&Tensor::zeros(&[2]), &g1, 1.0).unwrap();
        let m2 = mim_step(&m1, &g2, 1.0).unwrap();
        // Hand accumulation: g1 / 4 = [0.25, 0.75]; plus g2 / 4 = [-0.5, 0.5].
        assert!((m2.data()[0] - (0.25 - 0.5)).abs() < 1e-15);
        assert!((m2.data()[1] - (0.75 + 0.5)).abs() < 1e-15);
    }

    fn vit_cfg() -> ViTConfig {
        ViTConfig {
            image_size: 8,
            patch_size: 2,
            in_channels: 3,
            ..Default::default()
        }
    }

    #[test]
    fn patchout_full_budget_is_all_ones() {
        let vit = vit_cfg();
        let mut rng = Rng::new(1);
        let mask = patchout_mask(&vit, vit.num_patches(), &mut rng).unwrap();
        assert!(mask.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn patchout_mask_pixel_count_is_exact() {
        let vit = vit_cfg();
        let mut rng = Rng::new(2);
        for num in [1, 5, 9, 16] {
            let mask = patchout_mask(&vit, num, &mut rng).unwrap();
            let sum: f64 = mask.data().iter().sum();
            let expect = (num * vit.patch_size * vit.patch_size * vit.in_channels) as f64;
            assert_eq!(sum, expect);
        }
    }

    #[test]
    fn patchout_same_seed_reproduces() {
        let vit = vit_cfg();
        let masks_a: Vec<Tensor> = {
            let mut rng = Rng::new(77);
            (0..5).map(|_| patchout_mask(&vit, 7, &mut rng).unwrap()).collect()
        };
        let mut rng = Rng::new(77);
        for a in &masks_a {
            let b = patchout_mask(&vit, 7, &mut rng).unwrap();
            assert_eq!(a.data(), b.data());
        }
    }

    #[test]
    fn patchout_rejects_out_of_range() {
        let vit = vit_cfg();
        let mut rng = Rng::new(0);
        assert!(patchout_mask(&vit, 0, &mut rng).is_err());
        assert!(patchout_mask(&vit, vit.num_patches() + 1, &mut rng).is_err());
    }

    #[test]
    fn clip_project_identity_inside_ball() {
        let x = Tensor::new(vec![3], vec![0.2, 0.5, 0.8]).unwrap();
        let out = clip_project(&x, &x, 16.0 / 255.0).unwrap();
        assert_eq!(out.data(), x.data());
    }

    #[test]
    fn clip_project_clamps_to_epsilon() {
        let eps = 16.0 / 255.0;
        let x = Tensor::zeros(&[1]);
        let adv = Tensor::new(vec![1], vec![1.0]).unwrap();
        let out = clip_project(&adv, &x, eps).unwrap();
        assert_eq!(out.data()[0], eps);
    }

    #[test]
    fn clip_project_satisfies_both_boxes_entrywise() {
        let mut rng = Rng::new(9);
        let eps = 0.1;
        for _ in 0..20 {
            let x = Tensor::new(vec![16], (0..16).map(|_| rng.next_f64()).collect()).unwrap();
            let adv =
                Tensor::new(vec![16], (0..16).map(|_| rng.uniform(-0.5, 1.5)).collect()).unwrap();
            let out = clip_project(&adv, &x, eps).unwrap();
            for ((&o, &c), &a) in out.data().iter().zip(x.data()).zip(adv.data()) {
                assert!(o >= (c - eps).max(0.0) - 1e-15);
                assert!(o <= (c + eps).min(1.0) + 1e-15);
                // Projection: if adv was already feasible it is unchanged.
                if a >= (c - eps).max(0.0) && a <= (c + eps).min(1.0) {
                    assert_eq!(o, a);
                }
            }
        }
    }

    #[test]
    fn sign_maps_zero_to_zero() {
        let x = Tensor::new(vec![3], vec![-3.5, 0.0, 0.2]).unwrap();
        assert_eq!(sign(&x).data(), &[-1.0, 0.0, 1.0]);
    }
}
