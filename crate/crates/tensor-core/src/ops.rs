//! Differentiable primitives with explicit backward formulas.
//!
//! All functions are pure and deterministic: summations run in a fixed
//! sequential order, so identical inputs give bit-identical outputs.

use crate::error::{Result, TensorError};
use crate::tensor::Tensor;

/// Standard matrix product `a (m x k) * b (k x n)`, accumulating over `k`
/// in ascending order for every output entry.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (m, k) = a.dims2("matmul")?;
    let (k2, n) = b.dims2("matmul")?;
    if k != k2 {
        return Err(TensorError::DimensionMismatch {
            op: "matmul",
            lhs: a.shape().to_vec(),
            rhs: b.shape().to_vec(),
        });
    }
    let mut out = vec![0.0; m * n];
    let ad = a.data();
    let bd = b.data();
    for i in 0..m {
        let arow = &ad[i * k..(i + 1) * k];
        let orow = &mut out[i * n..(i + 1) * n];
        for (kk, &aik) in arow.iter().enumerate() {
            let brow = &bd[kk * n..(kk + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += aik * bv;
            }
        }
    }
    Tensor::new(vec![m, n], out)
}

/// `a^T * b` for `a (k x m)`, `b (k x n)`, without materializing `a^T`.
pub fn matmul_tn(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (k, m) = a.dims2("matmul_tn")?;
    let (k2, n) = b.dims2("matmul_tn")?;
    if k != k2 {
        return Err(TensorError::DimensionMismatch {
            op: "matmul_tn",
            lhs: a.shape().to_vec(),
            rhs: b.shape().to_vec(),
        });
    }
    let mut out = vec![0.0; m * n];
    let ad = a.data();
    let bd = b.data();
    for kk in 0..k {
        let arow = &ad[kk * m..(kk + 1) * m];
        let brow = &bd[kk * n..(kk + 1) * n];
        for (i, &aki) in arow.iter().enumerate() {
            let orow = &mut out[i * n..(i + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += aki * bv;
            }
        }
    }
    Tensor::new(vec![m, n], out)
}

/// `a * b^T` for `a (m x k)`, `b (n x k)`, without materializing `b^T`.
pub fn matmul_nt(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (m, k) = a.dims2("matmul_nt")?;
    let (n, k2) = b.dims2("matmul_nt")?;
    if k != k2 {
        return Err(TensorError::DimensionMismatch {
            op: "matmul_nt",
            lhs: a.shape().to_vec(),
            rhs: b.shape().to_vec(),
        });
    }
    let mut out = vec![0.0; m * n];
    let ad = a.data();
    let bd = b.data();
    for i in 0..m {
        let arow = &ad[i * k..(i + 1) * k];
        for j in 0..n {
            let brow = &bd[j * k..(j + 1) * k];
            let mut acc = 0.0;
            for (&av, &bv) in arow.iter().zip(brow) {
                acc += av * bv;
            }
            out[i * n + j] = acc;
        }
    }
    Tensor::new(vec![m, n], out)
}

/// Row-wise softmax over the last axis, max-subtracted for stability.
pub fn softmax(x: &Tensor) -> Tensor {
    let n = x.last_dim();
    let mut out = Vec::with_capacity(x.len());
    for row in x.rows() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        let start = out.len();
        for &v in row {
            let e = (v - max).exp();
            sum += e;
            out.push(e);
        }
        for v in &mut out[start..start + n] {
            *v /= sum;
        }
    }
    Tensor::new(x.shape().to_vec(), out).expect("softmax preserves shape")
}

/// Backward of `softmax`: given output `y` and upstream `dy`, returns
/// `y * (dy - sum(dy * y))` per row.
pub fn softmax_backward(y: &Tensor, dy: &Tensor) -> Result<Tensor> {
    if y.shape() != dy.shape() {
        return Err(TensorError::DimensionMismatch {
            op: "softmax_backward",
            lhs: y.shape().to_vec(),
            rhs: dy.shape().to_vec(),
        });
    }
    let n = y.last_dim();
    let mut out = Vec::with_capacity(y.len());
    for (yrow, dyrow) in y.rows().zip(dy.rows()) {
        let mut dot = 0.0;
        for i in 0..n {
            dot += yrow[i] * dyrow[i];
        }
        for i in 0..n {
            out.push(yrow[i] * (dyrow[i] - dot));
        }
    }
    Tensor::new(y.shape().to_vec(), out)
}

/// Row-wise layer normalization over the last axis with affine parameters.
pub fn layer_norm(x: &Tensor, gamma: &Tensor, beta: &Tensor, eps: f64) -> Result<Tensor> {
    let d = x.last_dim();
    check_affine_params(x, gamma, beta, d, "layer_norm")?;
    let g = gamma.data();
    let b = beta.data();
    let mut out = Vec::with_capacity(x.len());
    for row in x.rows() {
        let (mean, rstd) = row_stats(row, eps);
        for i in 0..d {
            out.push((row[i] - mean) * rstd * g[i] + b[i]);
        }
    }
    Tensor::new(x.shape().to_vec(), out)
}

/// Gradients of `layer_norm` with respect to its input and parameters.
pub struct LayerNormGrads {
    pub dx: Tensor,
    pub dgamma: Tensor,
    pub dbeta: Tensor,
}

/// Closed-form layer-norm backward.
///
/// With `xhat = (x - mean) * rstd` per row:
/// `dx = rstd * (dxhat - mean(dxhat) - xhat * mean(dxhat * xhat))`
/// where `dxhat = dy * gamma` and the means run over the last axis.
pub fn layer_norm_backward(
    x: &Tensor,
    gamma: &Tensor,
    dy: &Tensor,
    eps: f64,
) -> Result<LayerNormGrads> {
    if x.shape() != dy.shape() {
        return Err(TensorError::DimensionMismatch {
            op: "layer_norm_backward",
            lhs: x.shape().to_vec(),
            rhs: dy.shape().to_vec(),
        });
    }
    let d = x.last_dim();
    check_affine_params(x, gamma, gamma, d, "layer_norm_backward")?;
    let g = gamma.data();
    let mut dx = Vec::with_capacity(x.len());
    let mut dgamma = vec![0.0; d];
    let mut dbeta = vec![0.0; d];
    for (row, dyrow) in x.rows().zip(dy.rows()) {
        let (mean, rstd) = row_stats(row, eps);
        let mut mean_dxhat = 0.0;
        let mut mean_dxhat_xhat = 0.0;
        for i in 0..d {
            let xhat = (row[i] - mean) * rstd;
            let dxhat = dyrow[i] * g[i];
            mean_dxhat += dxhat;
            mean_dxhat_xhat += dxhat * xhat;
            dgamma[i] += dyrow[i] * xhat;
            dbeta[i] += dyrow[i];
        }
        mean_dxhat /= d as f64;
        mean_dxhat_xhat /= d as f64;
        for i in 0..d {
            let xhat = (row[i] - mean) * rstd;
            let dxhat = dyrow[i] * g[i];
            dx.push(rstd * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat));
        }
    }
    Ok(LayerNormGrads {
        dx: Tensor::new(x.shape().to_vec(), dx)?,
        dgamma: Tensor::new(vec![d], dgamma)?,
        dbeta: Tensor::new(vec![d], dbeta)?,
    })
}

const GELU_SCALE: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)
const GELU_CUBIC: f64 = 0.044_715;

/// Tanh-approximation GELU:
/// `0.5 * x * (1 + tanh(sqrt(2/pi) * (x + 0.044715 * x^3)))`.
pub fn gelu(x: &Tensor) -> Tensor {
    x.map(gelu_scalar)
}

fn gelu_scalar(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_SCALE * (x + GELU_CUBIC * x * x * x)).tanh())
}

/// Analytic derivative of the tanh-approximation GELU, times `dy`.
pub fn gelu_backward(x: &Tensor, dy: &Tensor) -> Result<Tensor> {
    x.zip_map(dy, "gelu_backward", |x, dy| {
        let inner = GELU_SCALE * (x + GELU_CUBIC * x * x * x);
        let t = inner.tanh();
        let dinner = GELU_SCALE * (1.0 + 3.0 * GELU_CUBIC * x * x);
        dy * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner)
    })
}

/// Mean and population variance (divide by element count) over all entries,
/// computed with two passes.
pub fn moments(x: &Tensor) -> Result<(f64, f64)> {
    if x.is_empty() {
        return Err(TensorError::EmptyInput { op: "moments" });
    }
    let n = x.len() as f64;
    let mean = x.data().iter().sum::<f64>() / n;
    let var = x
        .data()
        .iter()
        .map(|&v| {
            let d = v - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    Ok((mean, var))
}

fn row_stats(row: &[f64], eps: f64) -> (f64, f64) {
    let d = row.len() as f64;
    let mean = row.iter().sum::<f64>() / d;
    let var = row
        .iter()
        .map(|&v| {
            let c = v - mean;
            c * c
        })
        .sum::<f64>()
        / d;
    (mean, 1.0 / (var + eps).sqrt())
}

fn check_affine_params(
    x: &Tensor,
    gamma: &Tensor,
    beta: &Tensor,
    d: usize,
    op: &'static str,
) -> Result<()> {
    if gamma.shape() != [d] || beta.shape() != [d] {
        return Err(TensorError::DimensionMismatch {
            op,
            lhs: x.shape().to_vec(),
            rhs: gamma.shape().to_vec(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn random_tensor(shape: &[usize], rng: &mut Rng) -> Tensor {
        let len = shape.iter().product();
        let data = (0..len).map(|_| rng.uniform(-2.0, 2.0)).collect();
        Tensor::new(shape.to_vec(), data).unwrap()
    }

    #[test]
    fn matmul_identity() {
        let mut eye = Tensor::zeros(&[3, 3]);
        for i in 0..3 {
            eye.data_mut()[i * 3 + i] = 1.0;
        }
        let b = Tensor::new(vec![3, 2], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(matmul(&eye, &b).unwrap(), b);
    }

    #[test]
    fn matmul_hand_computed() {
        let a = Tensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = Tensor::new(vec![2, 1], vec![0.0, 1.0]).unwrap();
        let c = matmul(&a, &b).unwrap();
        assert_eq!(c.data(), &[2.0, 4.0]);
    }

    #[test]
    fn matmul_matches_triple_loop_oracle() {
        let mut rng = Rng::new(42);
        let a = random_tensor(&[5, 7], &mut rng);
        let b = random_tensor(&[7, 3], &mut rng);
        let c = matmul(&a, &b).unwrap();
        for i in 0..5 {
            for j in 0..3 {
                let mut acc = 0.0;
                for k in 0..7 {
                    acc += a.data()[i * 7 + k] * b.data()[k * 3 + j];
                }
                assert!((c.data()[i * 3 + j] - acc).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn matmul_rejects_inner_mismatch() {
        let a = Tensor::zeros(&[2, 3]);
        let b = Tensor::zeros(&[4, 2]);
        assert!(matmul(&a, &b).is_err());
    }

    #[test]
    fn transposed_matmuls_match_plain() {
        let mut rng = Rng::new(9);
        let a = random_tensor(&[6, 4], &mut rng);
        let b = random_tensor(&[6, 5], &mut rng);
        let via_tn = matmul_tn(&a, &b).unwrap();
        let via_plain = matmul(&a.transpose2().unwrap(), &b).unwrap();
        assert!(via_tn.max_abs_diff(&via_plain) < 1e-12);

        let c = random_tensor(&[3, 4], &mut rng);
        let d = random_tensor(&[5, 4], &mut rng);
        let via_nt = matmul_nt(&c, &d).unwrap();
        let via_plain = matmul(&c, &d.transpose2().unwrap()).unwrap();
        assert!(via_nt.max_abs_diff(&via_plain) < 1e-12);
    }

    #[test]
    fn softmax_uniform_on_equal_inputs() {
        let x = Tensor::new(vec![3], vec![0.0, 0.0, 0.0]).unwrap();
        let y = softmax(&x);
        for &v in y.data() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_survives_large_inputs() {
        let x = Tensor::new(vec![3], vec![1000.0, 0.0, 0.0]).unwrap();
        let y = softmax(&x);
        assert!((y.data()[0] - 1.0).abs() < 1e-12);
        assert!(y.data()[1].abs() < 1e-12);
        assert!(y.data()[2].abs() < 1e-12);
        assert!(y.is_all_finite());
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut rng = Rng::new(3);
        let x = random_tensor(&[4, 6], &mut rng);
        let y = softmax(&x);
        for row in y.rows() {
            let s: f64 = row.iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn layer_norm_constant_row_is_zero() {
        let x = Tensor::full(&[2, 5], 3.7);
        let gamma = Tensor::full(&[5], 1.0);
        let beta = Tensor::zeros(&[5]);
        let y = layer_norm(&x, &gamma, &beta, 1e-5).unwrap();
        for &v in y.data() {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn layer_norm_zero_gamma_gives_beta() {
        let mut rng = Rng::new(17);
        let x = random_tensor(&[3, 4], &mut rng);
        let gamma = Tensor::zeros(&[4]);
        let beta = Tensor::new(vec![4], vec![0.5, -1.0, 2.0, 0.0]).unwrap();
        let y = layer_norm(&x, &gamma, &beta, 1e-5).unwrap();
        for row in y.rows() {
            assert_eq!(row, beta.data());
        }
    }

    #[test]
    fn gelu_fixed_points_and_asymptotes() {
        assert_eq!(gelu_scalar(0.0), 0.0);
        assert!((gelu_scalar(10.0) - 10.0).abs() < 1e-9);
        assert!(gelu_scalar(-10.0).abs() < 1e-9);
    }

    #[test]
    fn moments_hand_cases() {
        let a = Tensor::full(&[4], 1.0);
        assert_eq!(moments(&a).unwrap(), (1.0, 0.0));
        let b = Tensor::new(vec![2], vec![0.0, 2.0]).unwrap();
        assert_eq!(moments(&b).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn moments_matches_two_pass_oracle() {
        let mut rng = Rng::new(100);
        let x = random_tensor(&[100], &mut rng);
        let (mean, var) = moments(&x).unwrap();
        let n = x.len() as f64;
        let oracle_mean: f64 = x.data().iter().sum::<f64>() / n;
        let oracle_var: f64 =
            x.data().iter().map(|&v| (v - oracle_mean).powi(2)).sum::<f64>() / n;
        assert!((mean - oracle_mean).abs() < 1e-12);
        assert!((var - oracle_var).abs() < 1e-12);
    }

    // Central finite differences on scalar reductions of each primitive.
    fn central_diff(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
        let mut plus = x.to_vec();
        plus[i] += h;
        let mut minus = x.to_vec();
        minus[i] -= h;
        (f(&plus) - f(&minus)) / (2.0 * h)
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        let scale = a.abs().max(b.abs());
        if scale < 1e-8 {
            (a - b).abs()
        } else {
            (a - b).abs() / scale
        }
    }

    #[test]
    fn softmax_backward_matches_finite_differences() {
        let mut rng = Rng::new(21);
        for _ in 0..5 {
            let x = random_tensor(&[4], &mut rng);
            let w = random_tensor(&[4], &mut rng); // fixed projection to a scalar
            let y = softmax(&x);
            let grad = softmax_backward(&y, &w).unwrap();
            for i in 0..4 {
                let num = central_diff(
                    |v| {
                        let t = Tensor::new(vec![4], v.to_vec()).unwrap();
                        softmax(&t)
                            .data()
                            .iter()
                            .zip(w.data())
                            .map(|(&a, &b)| a * b)
                            .sum()
                    },
                    x.data(),
                    i,
                    1e-5,
                );
                assert!(
                    rel_err(grad.data()[i], num) < 1e-6,
                    "analytic {} vs numeric {}",
                    grad.data()[i],
                    num
                );
            }
        }
    }

    #[test]
    fn layer_norm_backward_matches_finite_differences() {
        let mut rng = Rng::new(77);
        let d = 6;
        let x = random_tensor(&[2, d], &mut rng);
        let gamma = random_tensor(&[d], &mut rng);
        let beta = random_tensor(&[d], &mut rng);
        let w = random_tensor(&[2, d], &mut rng);
        let eps = 1e-5;
        let scalar = |xs: &[f64], gs: &[f64], bs: &[f64]| {
            let xt = Tensor::new(vec![2, d], xs.to_vec()).unwrap();
            let gt = Tensor::new(vec![d], gs.to_vec()).unwrap();
            let bt = Tensor::new(vec![d], bs.to_vec()).unwrap();
            layer_norm(&xt, &gt, &bt, eps)
                .unwrap()
                .data()
                .iter()
                .zip(w.data())
                .map(|(&a, &b)| a * b)
                .sum::<f64>()
        };
        let grads = layer_norm_backward(&x, &gamma, &w, eps).unwrap();
        for i in 0..x.len() {
            let num = central_diff(|v| scalar(v, gamma.data(), beta.data()), x.data(), i, 1e-5);
            assert!(rel_err(grads.dx.data()[i], num) < 1e-6);
        }
        for i in 0..d {
            let num = central_diff(|v| scalar(x.data(), v, beta.data()), gamma.data(), i, 1e-5);
            assert!(rel_err(grads.dgamma.data()[i], num) < 1e-6);
            let num = central_diff(|v| scalar(x.data(), gamma.data(), v), beta.data(), i, 1e-5);
            assert!(rel_err(grads.dbeta.data()[i], num) < 1e-6);
        }
    }

    #[test]
    fn gelu_backward_matches_finite_differences() {
        let mut rng = Rng::new(55);
        let x = random_tensor(&[8], &mut rng);
        let dy = Tensor::full(&[8], 1.0);
        let grad = gelu_backward(&x, &dy).unwrap();
        for i in 0..8 {
            let num = central_diff(
                |v| {
                    let t = Tensor::new(vec![8], v.to_vec()).unwrap();
                    gelu(&t).data().iter().sum()
                },
                x.data(),
                i,
                1e-5,
            );
            assert!(rel_err(grad.data()[i], num) < 1e-6);
        }
    }
}
