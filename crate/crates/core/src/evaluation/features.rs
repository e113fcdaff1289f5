use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::imaging::{to_grayscale, Image};
use crate::neural::{Checkpoint, Predictor};

/// Maps an image to a fixed-length feature vector.
pub trait FeatureExtractor {
    fn extract(&mut self, img: &Image) -> Result<Vec<f64>, EvalError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractorKind {
    /// Generator bottleneck activations.
    Encoder,
    /// Gradient-orientation histograms.
    GradHist,
}

/// Scales `v` to unit L2 norm; the zero vector is returned unchanged.
pub fn l2_normalize(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

/// Per-dimension z-scoring fitted on a training set. Dimensions that are
/// constant over the training set are zeroed.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    mean: Vec<f64>,
    inv_std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(xs: &[Vec<f64>]) -> Result<Self, EvalError> {
        let Some(first) = xs.first() else {
            return Err(EvalError::InvalidArgument("cannot standardize an empty set".into()));
        };
        let dim = first.len();
        if xs.iter().any(|x| x.len() != dim) {
            return Err(EvalError::DimensionMismatch("features differ in length".into()));
        }
        let n = xs.len() as f64;
        let mut mean = vec![0.0; dim];
        for x in xs {
            mean.iter_mut().zip(x).for_each(|(m, v)| *m += v / n);
        }
        let mut var = vec![0.0; dim];
        for x in xs {
            var.iter_mut()
                .zip(x.iter().zip(&mean))
                .for_each(|(s, (v, m))| *s += (v - m) * (v - m) / n);
        }
        let inv_std = var
            .iter()
            .map(|&v| if v.sqrt() > 1e-12 { 1.0 / v.sqrt() } else { 0.0 })
            .collect();
        Ok(Self { mean, inv_std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        if x.len() != self.dim() {
            return Err(EvalError::DimensionMismatch(format!(
                "feature of length {} for a {}-dimensional standardizer",
                x.len(),
                self.dim()
            )));
        }
        Ok(x.iter()
            .zip(self.mean.iter().zip(&self.inv_std))
            .map(|(v, (m, s))| (v - m) * s)
            .collect())
    }
}

/// Spatially averaged generator bottleneck, L2-normalized.
#[derive(Debug, Clone)]
pub struct EncoderFeatures {
    predictor: Predictor,
}

impl EncoderFeatures {
    pub fn new(ckpt: &Checkpoint) -> Result<Self, EvalError> {
        Ok(Self {
            predictor: Predictor::from_checkpoint(ckpt)?,
        })
    }
}

impl FeatureExtractor for EncoderFeatures {
    fn extract(&mut self, img: &Image) -> Result<Vec<f64>, EvalError> {
        Ok(l2_normalize(self.predictor.bottleneck_features(img)?))
    }
}

/// Magnitude-weighted gradient-orientation histograms over a `grid x grid`
/// partition of the luminance image, L2-normalized. Orientations cover the
/// full circle in `bins` sectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GradHistFeatures {
    pub grid: usize,
    pub bins: usize,
}

impl Default for GradHistFeatures {
    fn default() -> Self {
        Self { grid: 8, bins: 8 }
    }
}

impl FeatureExtractor for GradHistFeatures {
    fn extract(&mut self, img: &Image) -> Result<Vec<f64>, EvalError> {
        let g = to_grayscale(img);
        let (w, h) = (g.width(), g.height());
        if w < self.grid || h < self.grid {
            return Err(EvalError::InvalidArgument(format!(
                "{w}x{h} image is smaller than the {0}x{0} grid",
                self.grid
            )));
        }
        let at = |x: isize, y: isize| {
            g.get(x.clamp(0, w as isize - 1) as usize, y.clamp(0, h as isize - 1) as usize, 0)
        };
        let mut hist = vec![0.0; self.grid * self.grid * self.bins];
        let sector = std::f64::consts::TAU / self.bins as f64;
        for y in 0..h {
            for x in 0..w {
                let (xi, yi) = (x as isize, y as isize);
                let gx = 0.5 * (at(xi + 1, yi) - at(xi - 1, yi));
                let gy = 0.5 * (at(xi, yi + 1) - at(xi, yi - 1));
                let mag = (gx * gx + gy * gy).sqrt();
                if mag == 0.0 {
                    continue;
                }
                let angle = gy.atan2(gx).rem_euclid(std::f64::consts::TAU);
                let bin = ((angle / sector) as usize).min(self.bins - 1);
                let cell = (y * self.grid / h) * self.grid + x * self.grid / w;
                hist[cell * self.bins + bin] += mag;
            }
        }
        Ok(l2_normalize(hist))
    }
}

/// Builds the extractor named by `kind`; the encoder needs a checkpoint.
pub fn make_extractor(
    kind: ExtractorKind,
    ckpt: Option<&Checkpoint>,
) -> Result<Box<dyn FeatureExtractor>, EvalError> {
    match kind {
        ExtractorKind::GradHist => Ok(Box::new(GradHistFeatures::default())),
        ExtractorKind::Encoder => {
            let ckpt = ckpt.ok_or_else(|| {
                EvalError::InvalidArgument("the encoder extractor needs a checkpoint".into())
            })?;
            Ok(Box::new(EncoderFeatures::new(ckpt)?))
        }
    }
}

pub fn extract_features(
    img: &Image,
    extractor: &mut dyn FeatureExtractor,
) -> Result<Vec<f64>, EvalError> {
    extractor.extract(img)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grad_hist_properties() {
        let mut fx = GradHistFeatures::default();
        let img = Image::from_fn(32, 32, 3, |x, y, c| ((x * y + c) % 7) as f64 / 6.0).unwrap();
        let f = fx.extract(&img).unwrap();
        assert_eq!(f.len(), 512);
        assert!((f.iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs() < 1e-12);
        assert_eq!(fx.extract(&img).unwrap(), f);
        let flat = fx.extract(&Image::filled(32, 32, 1, 0.4).unwrap()).unwrap();
        assert!(flat.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn horizontal_ramp_fills_one_bin() {
        let ramp = Image::from_fn(16, 16, 1, |x, _, _| x as f64 / 15.0).unwrap();
        let f = GradHistFeatures::default().extract(&ramp).unwrap();
        // every cell votes only in the 0-radian sector
        assert!(f.iter().enumerate().all(|(i, &v)| (i % 8 == 0) == (v > 0.0)));
    }
}

#[cfg(test)]
mod standardizer_tests {
    use super::*;

    #[test]
    fn zero_mean_unit_variance() {
        let xs = vec![vec![1.0, 5.0], vec![3.0, 5.0]];
        let st = Standardizer::fit(&xs).unwrap();
        assert_eq!(st.apply(&xs[0]).unwrap(), vec![-1.0, 0.0]);
        assert_eq!(st.apply(&xs[1]).unwrap(), vec![1.0, 0.0]);
        assert!(st.apply(&[1.0]).is_err());
        assert!(Standardizer::fit(&[]).is_err());
    }
}
