use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::EvalError;

/// Dual coordinate-descent sweep limit.
pub const SVM_MAX_SWEEPS: usize = 5000;
/// Stop once the projected-gradient spread falls below this.
pub const SVM_TOLERANCE: f64 = 1e-8;

/// One-vs-rest linear classifier: one `(w, b)` per class label.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub labels: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub c: f64,
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.weights[0].len()
    }

    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        if x.len() != self.dim() {
            return Err(EvalError::DimensionMismatch(format!(
                "feature of length {} for a {}-dimensional model",
                x.len(),
                self.dim()
            )));
        }
        Ok(self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| dot(w, x) + b)
            .collect())
    }

    /// Label with the highest score; ties go to the smallest label.
    pub fn predict(&self, x: &[f64]) -> Result<usize, EvalError> {
        let scores = self.scores(x)?;
        let mut best = 0;
        for (i, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = i;
            }
        }
        Ok(self.labels[best])
    }
}

pub fn svm_predict(model: &SvmModel, x: &[f64]) -> Result<usize, EvalError> {
    model.predict(x)
}

/// `1/2 |w|^2 + C sum max(0, 1 - y (w.x + b))` for one binary problem.
pub fn hinge_objective(w: &[f64], b: f64, xs: &[Vec<f64>], ys: &[f64], c: f64) -> f64 {
    let hinge: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (1.0 - y * (dot(w, x) + b)).max(0.0))
        .sum();
    0.5 * dot(w, w) + c * hinge
}

/// Trains one binary classifier per label by dual coordinate descent over
/// seeded sweep orders. The bias rides along as an augmented feature, then is
/// replaced by its exact minimizer for the final `w` when that lowers
/// [`hinge_objective`].
pub fn svm_train(
    features: &[Vec<f64>],
    labels: &[usize],
    c: f64,
    seed: u64,
) -> Result<SvmModel, EvalError> {
    if features.len() != labels.len() || features.is_empty() {
        return Err(EvalError::DimensionMismatch(format!(
            "{} features for {} labels",
            features.len(),
            labels.len()
        )));
    }
    if !(c > 0.0) {
        return Err(EvalError::InvalidArgument(format!("C must be positive, got {c}")));
    }
    let dim = features[0].len();
    if features.iter().any(|f| f.len() != dim) {
        return Err(EvalError::DimensionMismatch("features differ in length".into()));
    }
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(EvalError::InvalidArgument("SVM needs at least two classes".into()));
    }
    let mut weights = Vec::with_capacity(classes.len());
    let mut biases = Vec::with_capacity(classes.len());
    for (ci, &class) in classes.iter().enumerate() {
        let ys: Vec<f64> = labels.iter().map(|&l| if l == class { 1.0 } else { -1.0 }).collect();
        let (w, b) = train_binary(features, &ys, c, seed.wrapping_add(ci as u64));
        weights.push(w);
        biases.push(b);
    }
    Ok(SvmModel {
        labels: classes,
        weights,
        biases,
        c,
    })
}

fn train_binary(xs: &[Vec<f64>], ys: &[f64], c: f64, seed: u64) -> (Vec<f64>, f64) {
    let n = xs.len();
    let dim = xs[0].len();
    // bias as an extra feature of this size; refined exactly afterwards
    let aug = xs.iter().map(|x| dot(x, x).sqrt()).fold(1.0, f64::max);
    let q: Vec<f64> = xs.iter().map(|x| dot(x, x) + aug * aug).collect();
    let mut alpha = vec![0.0; n];
    let (mut w, mut wb) = (vec![0.0; dim], 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..SVM_MAX_SWEEPS {
        order.shuffle(&mut rng);
        let (mut pg_max, mut pg_min) = (f64::NEG_INFINITY, f64::INFINITY);
        for &i in &order {
            let g = ys[i] * (dot(&w, &xs[i]) + wb * aug) - 1.0;
            let pg = if alpha[i] <= 0.0 {
                g.min(0.0)
            } else if alpha[i] >= c {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg != 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / q[i]).clamp(0.0, c);
                let step = (alpha[i] - old) * ys[i];
                w.iter_mut().zip(&xs[i]).for_each(|(v, x)| *v += step * x);
                wb += step * aug;
            }
        }
        if pg_max - pg_min < SVM_TOLERANCE {
            break;
        }
    }
    let b_reg = wb * aug;
    let b_exact = best_bias(&w, xs, ys);
    if hinge_objective(&w, b_exact, xs, ys, c) <= hinge_objective(&w, b_reg, xs, ys, c) {
        (w, b_exact)
    } else {
        (w, b_reg)
    }
}

/// Exact minimizer of the summed hinge over the bias for fixed `w`. The
/// objective is convex and piecewise linear with kinks at `y_i - w.x_i`, so
/// the smallest kink with the lowest value is returned.
fn best_bias(w: &[f64], xs: &[Vec<f64>], ys: &[f64]) -> f64 {
    let s: Vec<f64> = xs.iter().map(|x| dot(w, x)).collect();
    let mut kinks: Vec<f64> = s.iter().zip(ys).map(|(s, y)| y - s).collect();
    kinks.sort_by(f64::total_cmp);
    let cost = |b: f64| -> f64 {
        s.iter()
            .zip(ys)
            .map(|(s, y)| (1.0 - y * (s + b)).max(0.0))
            .sum()
    };
    let mut best = (f64::INFINITY, 0.0);
    for &k in &kinks {
        let v = cost(k);
        if v < best.0 {
            best = (v, k);
        }
    }
    best.1
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_pair() {
        let xs = vec![vec![-1.0], vec![1.0]];
        let m = svm_train(&xs, &[0, 1], 1.0, 0).unwrap();
        assert_eq!(m.predict(&[-1.0]).unwrap(), 0);
        assert_eq!(m.predict(&[1.0]).unwrap(), 1);
        assert!(m.predict(&[1.0, 2.0]).is_err());
        assert!(svm_train(&xs, &[1, 1], 1.0, 0).is_err());
    }
}
