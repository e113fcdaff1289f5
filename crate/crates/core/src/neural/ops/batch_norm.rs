use crate::neural::{NeuralError, Tensor};

pub const BN_MOMENTUM: f64 = 0.1;
pub const BN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnMode {
    /// Normalize with batch statistics and update the running estimates.
    Train,
    /// Normalize with batch statistics, leave running estimates untouched.
    BatchStats,
    /// Normalize with the running estimates.
    Eval,
}

#[derive(Debug, Clone)]
pub struct BatchNormCache {
    normalized: Vec<f64>,
    inv_std: Vec<f64>,
    shape: [usize; 4],
    batch_stats: bool,
}

/// Per-channel normalization over `N, H, W`. Running statistics are updated
/// with the unbiased batch variance in [`BnMode::Train`].
#[allow(clippy::too_many_arguments)]
pub fn batch_norm_forward(
    input: &Tensor,
    gamma: &[f64],
    beta: &[f64],
    running_mean: &mut [f64],
    running_var: &mut [f64],
    mode: BnMode,
    momentum: f64,
    eps: f64,
) -> Result<(Tensor, BatchNormCache), NeuralError> {
    let [n, c, h, w] = input.shape();
    if gamma.len() != c || beta.len() != c || running_mean.len() != c || running_var.len() != c {
        return Err(NeuralError::Shape(format!(
            "batch norm over {c} channels with {} parameters",
            gamma.len()
        )));
    }
    let hw = h * w;
    let m = (n * hw) as f64;
    let plane = |b: usize, ch: usize| &input.item(b)[ch * hw..(ch + 1) * hw];

    let mut mean = vec![0.0; c];
    let mut var = vec![0.0; c];
    let batch_stats = mode != BnMode::Eval;
    if batch_stats {
        for ch in 0..c {
            let sum: f64 = (0..n).map(|b| plane(b, ch).iter().sum::<f64>()).sum();
            mean[ch] = sum / m;
            let sq: f64 = (0..n)
                .map(|b| plane(b, ch).iter().map(|v| (v - mean[ch]).powi(2)).sum::<f64>())
                .sum();
            var[ch] = sq / m;
        }
        if mode == BnMode::Train {
            let unbias = if m > 1.0 { m / (m - 1.0) } else { 1.0 };
            for ch in 0..c {
                running_mean[ch] = (1.0 - momentum) * running_mean[ch] + momentum * mean[ch];
                running_var[ch] =
                    (1.0 - momentum) * running_var[ch] + momentum * var[ch] * unbias;
            }
        }
    } else {
        mean.copy_from_slice(running_mean);
        var.copy_from_slice(running_var);
    }

    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();
    let mut normalized = vec![0.0; input.len()];
    let mut out = Tensor::zeros(input.shape());
    for b in 0..n {
        for ch in 0..c {
            let off = (b * c + ch) * hw;
            for (i, v) in plane(b, ch).iter().enumerate() {
                let xh = (v - mean[ch]) * inv_std[ch];
                normalized[off + i] = xh;
                out.data_mut()[off + i] = gamma[ch] * xh + beta[ch];
            }
        }
    }
    out.ensure_finite("batch_norm forward")?;
    Ok((
        out,
        BatchNormCache {
            normalized,
            inv_std,
            shape: input.shape(),
            batch_stats,
        },
    ))
}

pub struct BatchNormGrads {
    pub input: Tensor,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

pub fn batch_norm_backward(
    cache: &BatchNormCache,
    gamma: &[f64],
    grad_out: &Tensor,
) -> Result<BatchNormGrads, NeuralError> {
    if grad_out.shape() != cache.shape {
        return Err(NeuralError::Shape("batch norm gradient shape".into()));
    }
    let [n, c, h, w] = cache.shape;
    let hw = h * w;
    let m = (n * hw) as f64;
    let mut g_gamma = vec![0.0; c];
    let mut g_beta = vec![0.0; c];
    for b in 0..n {
        for ch in 0..c {
            let off = (b * c + ch) * hw;
            let dy = &grad_out.data()[off..off + hw];
            let xh = &cache.normalized[off..off + hw];
            g_beta[ch] += dy.iter().sum::<f64>();
            g_gamma[ch] += dy.iter().zip(xh).map(|(d, x)| d * x).sum::<f64>();
        }
    }
    let mut gi = Tensor::zeros(cache.shape);
    for b in 0..n {
        for ch in 0..c {
            let off = (b * c + ch) * hw;
            let scale = gamma[ch] * cache.inv_std[ch];
            for i in off..off + hw {
                let dy = grad_out.data()[i];
                gi.data_mut()[i] = if cache.batch_stats {
                    scale / m * (m * dy - g_beta[ch] - cache.normalized[i] * g_gamma[ch])
                } else {
                    scale * dy
                };
            }
        }
    }
    gi.ensure_finite("batch_norm backward")?;
    Ok(BatchNormGrads {
        input: gi,
        gamma: g_gamma,
        beta: g_beta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(input: &Tensor, mode: BnMode, rm: &mut [f64], rv: &mut [f64]) -> Tensor {
        let c = input.c();
        let gamma = vec![1.0; c];
        let beta = vec![0.0; c];
        batch_norm_forward(input, &gamma, &beta, rm, rv, mode, BN_MOMENTUM, BN_EPS)
            .unwrap()
            .0
    }

    #[test]
    fn constant_channel_maps_to_beta() {
        let x = Tensor::filled([2, 1, 3, 3], 4.2);
        let (out, _) = batch_norm_forward(
            &x,
            &[2.0],
            &[0.7],
            &mut [0.0],
            &mut [1.0],
            BnMode::Train,
            BN_MOMENTUM,
            BN_EPS,
        )
        .unwrap();
        assert!(out.data().iter().all(|&v| (v - 0.7).abs() < 1e-12));
    }

    #[test]
    fn train_output_is_standardized() {
        let x = Tensor::from_vec([3, 2, 4, 5], (0..120).map(|i| ((i * 7919) % 31) as f64 * 0.3 - 2.0).collect())
            .unwrap();
        let (mut rm, mut rv) = (vec![0.0; 2], vec![1.0; 2]);
        let out = run(&x, BnMode::Train, &mut rm, &mut rv);
        for ch in 0..2 {
            let vals: Vec<f64> = (0..3)
                .flat_map(|b| out.item(b)[ch * 20..(ch + 1) * 20].to_vec())
                .collect();
            let mean = vals.iter().sum::<f64>() / 60.0;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 60.0;
            assert!(mean.abs() < 1e-9);
            // eps shrinks the variance slightly below 1
            assert!((var - 1.0).abs() < 1e-6 * 10.0);
        }
        assert!(rm.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn eval_uses_running_stats_and_batch_stats_leaves_them() {
        let x = Tensor::from_vec([1, 1, 1, 2], vec![1.0, 3.0]).unwrap();
        let (mut rm, mut rv) = (vec![1.0], vec![4.0 - BN_EPS]);
        let out = run(&x, BnMode::Eval, &mut rm, &mut rv);
        assert!((out.data()[0]).abs() < 1e-12 && (out.data()[1] - 1.0).abs() < 1e-12);
        run(&x, BnMode::BatchStats, &mut rm, &mut rv);
        assert_eq!((rm[0], rv[0]), (1.0, 4.0 - BN_EPS));
    }

    #[test]
    fn channel_mismatch() {
        let x = Tensor::zeros([1, 2, 2, 2]);
        assert!(batch_norm_forward(&x, &[1.0], &[0.0], &mut [0.0], &mut [1.0], BnMode::Train, 0.1, 1e-5).is_err());
    }
}
