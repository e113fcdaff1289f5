//! Scalar losses returning `(value, d value / d pred)`.

use super::{NeuralError, Tensor};

/// Guard for normalizing near-zero vectors.
pub const COSINE_EPS: f64 = 1e-8;

fn same_shape(a: &Tensor, b: &Tensor, what: &str) -> Result<(), NeuralError> {
    if a.shape() != b.shape() {
        return Err(NeuralError::Shape(format!(
            "{what}: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

/// Mean of squared differences.
pub fn mse_loss(pred: &Tensor, target: &Tensor) -> Result<(f64, Tensor), NeuralError> {
    same_shape(pred, target, "mse")?;
    let m = pred.len() as f64;
    let mut grad = Tensor::zeros(pred.shape());
    let mut sum = 0.0;
    for ((g, p), t) in grad.data_mut().iter_mut().zip(pred.data()).zip(target.data()) {
        let d = p - t;
        sum += d * d;
        *g = 2.0 * d / m;
    }
    let loss = sum / m;
    if !loss.is_finite() {
        return Err(NeuralError::NonFinite("mse loss"));
    }
    Ok((loss, grad))
}

/// MSE against a constant label (1 for real, 0 for fake).
pub fn mse_to_label(pred: &Tensor, label: f64) -> Result<(f64, Tensor), NeuralError> {
    mse_loss(pred, &Tensor::filled(pred.shape(), label))
}

/// Mean over pixels of `1 - cos(angle)` between the 3-vectors stored along
/// the channel axis of `pred` and `target`. Range `[0, 2]`.
pub fn cosine_loss(pred: &Tensor, target: &Tensor) -> Result<(f64, Tensor), NeuralError> {
    same_shape(pred, target, "cosine")?;
    let [n, c, h, w] = pred.shape();
    if c != 3 {
        return Err(NeuralError::Shape(format!("cosine loss needs 3 channels, got {c}")));
    }
    let hw = h * w;
    let m = (n * hw) as f64;
    let mut grad = Tensor::zeros(pred.shape());
    let mut sum = 0.0;
    for b in 0..n {
        let p = pred.item(b);
        let t = target.item(b);
        let base = b * 3 * hw;
        for i in 0..hw {
            let pv = [p[i], p[hw + i], p[2 * hw + i]];
            let tv = [t[i], t[hw + i], t[2 * hw + i]];
            let pn = norm(pv).max(COSINE_EPS);
            let tn = norm(tv).max(COSINE_EPS);
            let th = [tv[0] / tn, tv[1] / tn, tv[2] / tn];
            let cos = (pv[0] * th[0] + pv[1] * th[1] + pv[2] * th[2]) / pn;
            sum += 1.0 - cos;
            for k in 0..3 {
                let ph = pv[k] / pn;
                grad.data_mut()[base + k * hw + i] = -(th[k] - cos * ph) / pn / m;
            }
        }
    }
    let loss = sum / m;
    if !loss.is_finite() {
        return Err(NeuralError::NonFinite("cosine loss"));
    }
    Ok((loss, grad))
}

#[inline]
fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(v: [f64; 3], hw: usize) -> Tensor {
        let mut data = Vec::new();
        for k in 0..3 {
            data.extend(std::iter::repeat_n(v[k], hw));
        }
        Tensor::from_vec([1, 3, 1, hw], data).unwrap()
    }

    #[test]
    fn cosine_cases() {
        let t = field([0.6, 0.0, 0.8], 4);
        assert_eq!(cosine_loss(&t, &t).unwrap().0, 0.0);
        let neg = field([-0.6, 0.0, -0.8], 4);
        assert!((cosine_loss(&neg, &t).unwrap().0 - 2.0).abs() < 1e-15);
        let ortho = field([0.8, 0.0, -0.6], 4);
        assert!((cosine_loss(&ortho, &t).unwrap().0 - 1.0).abs() < 1e-15);
        // scale invariance in pred
        let scaled = field([0.3, 0.0, 0.4], 4);
        assert!(cosine_loss(&scaled, &t).unwrap().0.abs() < 1e-15);
    }

    #[test]
    fn cosine_gradient_matches_finite_differences() {
        let p = Tensor::from_vec([1, 3, 1, 2], vec![0.3, -0.2, 0.5, 0.1, 0.7, 0.4]).unwrap();
        let t = Tensor::from_vec([1, 3, 1, 2], vec![0.0, 0.6, 0.0, 0.0, 0.8, 1.0]).unwrap();
        let (_, g) = cosine_loss(&p, &t).unwrap();
        let h = 1e-6;
        for i in 0..p.len() {
            let mut a = p.clone();
            a.data_mut()[i] += h;
            let mut b = p.clone();
            b.data_mut()[i] -= h;
            let fd = (cosine_loss(&a, &t).unwrap().0 - cosine_loss(&b, &t).unwrap().0) / (2.0 * h);
            assert!((fd - g.data()[i]).abs() < 1e-8, "{i}: {fd} vs {}", g.data()[i]);
        }
    }

    #[test]
    fn mse_cases() {
        let a = Tensor::filled([1, 1, 2, 2], 1.0);
        assert_eq!(mse_loss(&a, &a).unwrap().0, 0.0);
        assert_eq!(mse_to_label(&a, 1.0).unwrap().0, 0.0);
        let z = Tensor::filled([1, 1, 1, 1], 0.0);
        assert_eq!(mse_to_label(&z, 1.0).unwrap().0, 1.0);
        assert!(mse_loss(&a, &z).is_err());
    }
}
