use rand::Rng;

use crate::neural::{NeuralError, Tensor};

/// `x` for `x > 0`, `slope * x` otherwise. `slope = 0` is a plain ReLU.
pub fn leaky_relu_forward(input: &Tensor, slope: f64) -> Tensor {
    let mut out = input.clone();
    out.data_mut()
        .iter_mut()
        .for_each(|v| if *v <= 0.0 { *v *= slope });
    out
}

pub fn leaky_relu_backward(input: &Tensor, grad_out: &Tensor, slope: f64) -> Tensor {
    let mut g = grad_out.clone();
    g.data_mut()
        .iter_mut()
        .zip(input.data())
        .for_each(|(d, &x)| if x <= 0.0 { *d *= slope });
    g
}

pub fn tanh_forward(input: &Tensor) -> Tensor {
    let mut out = input.clone();
    out.data_mut().iter_mut().for_each(|v| *v = v.tanh());
    out
}

/// Backward through `tanh` given its forward output.
pub fn tanh_backward(output: &Tensor, grad_out: &Tensor) -> Tensor {
    let mut g = grad_out.clone();
    g.data_mut()
        .iter_mut()
        .zip(output.data())
        .for_each(|(d, y)| *d *= 1.0 - y * y);
    g
}

/// Inverted dropout: kept units are scaled by `1 / (1 - rate)`. Returns the
/// output and the multiplicative mask (which doubles as the backward op).
/// `rate = 0` draws nothing from `rng`.
pub fn dropout_forward<R: Rng + ?Sized>(
    input: &Tensor,
    rate: f64,
    rng: &mut R,
) -> Result<(Tensor, Vec<f64>), NeuralError> {
    if !(0.0..1.0).contains(&rate) {
        return Err(NeuralError::Config(format!("dropout rate {rate} outside [0, 1)")));
    }
    if rate == 0.0 {
        return Ok((input.clone(), vec![1.0; input.len()]));
    }
    let keep = 1.0 / (1.0 - rate);
    let mask: Vec<f64> = (0..input.len())
        .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
        .collect();
    let mut out = input.clone();
    out.data_mut().iter_mut().zip(&mask).for_each(|(v, m)| *v *= m);
    Ok((out, mask))
}

pub fn dropout_backward(mask: &[f64], grad_out: &Tensor) -> Tensor {
    let mut g = grad_out.clone();
    g.data_mut().iter_mut().zip(mask).for_each(|(d, m)| *d *= m);
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t(v: &[f64]) -> Tensor {
        Tensor::from_vec([1, 1, 1, v.len()], v.to_vec()).unwrap()
    }

    #[test]
    fn leaky_values() {
        let out = leaky_relu_forward(&t(&[-1.0, 2.0]), 0.2);
        assert_eq!(out.data(), &[-0.2, 2.0]);
        let g = leaky_relu_backward(&t(&[-1.0, 2.0]), &t(&[1.0, 1.0]), 0.2);
        assert_eq!(g.data(), &[0.2, 1.0]);
        assert_eq!(leaky_relu_forward(&t(&[-3.0]), 0.0).data(), &[0.0]);
    }

    #[test]
    fn tanh_at_zero() {
        let y = tanh_forward(&t(&[0.0]));
        assert_eq!(y.data(), &[0.0]);
        assert_eq!(tanh_backward(&y, &t(&[1.0])).data(), &[1.0]);
    }

    #[test]
    fn dropout_identity_and_determinism() {
        let x = t(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(dropout_forward(&x, 0.0, &mut rng).unwrap().0, x);
        let a = dropout_forward(&x, 0.5, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = dropout_forward(&x, 0.5, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a.0, b.0);
        assert!(a.1.iter().all(|&m| m == 0.0 || m == 2.0));
        assert!(dropout_forward(&x, 1.0, &mut rng).is_err());
    }
}
