//! Lighting-ambiguity and recognition experiments comparing color images
//! with predicted normal images: SSIM, PCA, degradations, feature
//! extraction, a linear SVM, and macro F-scores.

mod ambiguity;
mod degrade;
mod features;
mod fscore;
mod pca;
mod predictor;
mod recognition;
mod ssim;
mod svm;

pub use ambiguity::{
    run_ambiguity_eval, AmbiguityReport, ScatterRow, SsimRow, SsimSummary, SCATTER_CSV, SSIM_CSV,
    SSIM_SUMMARY_CSV,
};
pub use degrade::{degrade, DegradeKind, DegradeSpec};
pub use features::{
    extract_features, l2_normalize, make_extractor, EncoderFeatures, ExtractorKind,
    FeatureExtractor, GradHistFeatures, Standardizer,
};
pub use fscore::f_score;
pub use pca::{pca_fit, pca_project, PcaModel};
pub use predictor::{
    image_seed, CheckpointPredictor, FoldPredictor, IdentityPredictor, NormalPredictor,
};
pub use recognition::{
    run_recognition_eval, RecognitionOptions, RecognitionReport, RecognitionRow, RECOGNITION_CSV,
};
pub use ssim::{ssim, SSIM_K1, SSIM_K2, SSIM_SIGMA, SSIM_WINDOW};
pub use svm::{hinge_objective, svm_predict, svm_train, SvmModel, SVM_MAX_SWEEPS, SVM_TOLERANCE};

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::imaging::ImagingError;
use crate::neural::NeuralError;
use crate::photometric::PhotometricError;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Photometric(#[from] PhotometricError),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}

/// Which image an experiment row describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Color,
    Combined,
    Normal,
}

impl Representation {
    pub fn name(self) -> &'static str {
        match self {
            Representation::Color => "color",
            Representation::Combined => "combined",
            Representation::Normal => "normal",
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), EvalError> {
    std::fs::write(path, text).map_err(|source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Linear-interpolation quantile of sorted data (`q` in `[0, 1]`).
pub(crate) fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        let d = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&d, 0.0), 1.0);
        assert_eq!(quantile(&d, 0.5), 2.5);
        assert_eq!(quantile(&d, 0.25), 1.75);
        assert_eq!(quantile(&d, 1.0), 4.0);
    }
}
