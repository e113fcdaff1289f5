use super::EvalError;

/// Mean, orthonormal principal directions (rows) and their variances.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    pub total_variance: f64,
}

impl PcaModel {
    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        self.explained_variance
            .iter()
            .map(|v| v / self.total_variance)
            .collect()
    }

    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>, EvalError> {
        if v.len() != self.mean.len() {
            return Err(EvalError::DimensionMismatch(format!(
                "vector of length {} for a {}-dimensional model",
                v.len(),
                self.mean.len()
            )));
        }
        Ok(self
            .components
            .iter()
            .map(|c| c.iter().zip(v).zip(&self.mean).map(|((c, x), m)| c * (x - m)).sum())
            .collect())
    }
}

pub fn pca_project(model: &PcaModel, v: &[f64]) -> Result<Vec<f64>, EvalError> {
    model.project(v)
}

/// Principal components of the sample covariance (divided by `n - 1`). When
/// there are fewer samples than dimensions the `n x n` Gram matrix is
/// decomposed instead. Each component's largest-magnitude entry is positive.
pub fn pca_fit(vectors: &[Vec<f64>], k: usize) -> Result<PcaModel, EvalError> {
    let n = vectors.len();
    if n < 2 {
        return Err(EvalError::InvalidArgument("PCA needs at least two vectors".into()));
    }
    let dim = vectors[0].len();
    if vectors.iter().any(|v| v.len() != dim) {
        return Err(EvalError::DimensionMismatch("PCA vectors differ in length".into()));
    }
    if k == 0 || k > (n - 1).min(dim) {
        return Err(EvalError::InvalidArgument(format!(
            "k = {k} must lie in 1..={}",
            (n - 1).min(dim)
        )));
    }
    let mut mean = vec![0.0; dim];
    for v in vectors {
        mean.iter_mut().zip(v).for_each(|(m, x)| *m += x);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| v.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();
    let denom = (n - 1) as f64;

    let (values, mut components) = if n < dim {
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let d = dot(&centered[i], &centered[j]) / denom;
                gram[i * n + j] = d;
                gram[j * n + i] = d;
            }
        }
        let (vals, vecs) = symmetric_eigen(&mut gram, n);
        let mut comps = Vec::with_capacity(n);
        for (j, &lambda) in vals.iter().enumerate() {
            // v = X^T u / sqrt((n - 1) lambda)
            let mut c = vec![0.0; dim];
            for (i, row) in centered.iter().enumerate() {
                let u = vecs[i * n + j];
                c.iter_mut().zip(row).for_each(|(c, x)| *c += u * x);
            }
            let scale = (denom * lambda.max(0.0)).sqrt();
            c.iter_mut().for_each(|x| *x /= scale.max(f64::MIN_POSITIVE));
            comps.push(c);
        }
        (vals, comps)
    } else {
        let mut cov = vec![0.0; dim * dim];
        for row in &centered {
            for i in 0..dim {
                for j in i..dim {
                    cov[i * dim + j] += row[i] * row[j];
                }
            }
        }
        for i in 0..dim {
            for j in i..dim {
                cov[i * dim + j] /= denom;
                cov[j * dim + i] = cov[i * dim + j];
            }
        }
        let (vals, vecs) = symmetric_eigen(&mut cov, dim);
        let comps = (0..dim)
            .map(|j| (0..dim).map(|i| vecs[i * dim + j]).collect())
            .collect();
        (vals, comps)
    };

    let total: f64 = values.iter().map(|v| v.max(0.0)).sum();
    if !(total > 0.0) {
        return Err(EvalError::InvalidArgument("data has zero variance".into()));
    }
    if values[k - 1] <= total * 1e-12 {
        return Err(EvalError::InvalidArgument(format!(
            "data has fewer than {k} directions of non-zero variance"
        )));
    }
    components.truncate(k);
    for c in &mut components {
        let lead = c
            .iter()
            .copied()
            .fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
        if lead < 0.0 {
            c.iter_mut().for_each(|x| *x = -*x);
        }
    }
    Ok(PcaModel {
        mean,
        components,
        explained_variance: values[..k].to_vec(),
        total_variance: total,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cyclic Jacobi eigendecomposition of the symmetric row-major `m`
/// (destroyed). Returns eigenvalues in descending order and the matching
/// eigenvectors as columns of a row-major `n x n` matrix.
pub(crate) fn symmetric_eigen(m: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = m.iter().map(|x| x * x).sum::<f64>();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum();
        if off <= scale * 1e-30 || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (m[p * n + p], m[q * n + q]);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (m[k * n + p], m[k * n + q]);
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (m[p * n + k], m[q * n + k]);
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| m[b * n + b].total_cmp(&m[a * n + a]));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vecs = vec![0.0; n * n];
    for (new, &old) in order.iter().enumerate() {
        for r in 0..n {
            vecs[r * n + new] = v[r * n + old];
        }
    }
    (values, vecs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_points() {
        let pts: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let m = pca_fit(&pts, 1).unwrap();
        let s5 = 5f64.sqrt();
        assert!((m.components[0][0] - 1.0 / s5).abs() < 1e-12);
        assert!((m.components[0][1] - 2.0 / s5).abs() < 1e-12);
        assert!((m.explained_variance_ratio()[0] - 1.0).abs() < 1e-12);
        assert!(pca_fit(&pts, 2).is_err());
    }

    #[test]
    fn jacobi_diagonalizes() {
        let mut m = vec![2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 5.0];
        let (vals, _) = symmetric_eigen(&mut m, 3);
        let expected = [5.0, 3.0, 1.0];
        for (v, e) in vals.iter().zip(expected) {
            assert!((v - e).abs() < 1e-12);
        }
    }

    #[test]
    fn argument_checks() {
        assert!(pca_fit(&[vec![1.0, 2.0]], 1).is_err());
        assert!(pca_fit(&[vec![1.0, 2.0], vec![1.0, 2.0]], 1).is_err());
        assert!(pca_fit(&[vec![1.0, 2.0], vec![1.0]], 1).is_err());
    }
}
