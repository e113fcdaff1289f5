//! Small reverse-mode network engine (64-bit, NCHW, single-threaded) and the
//! conditional GAN built on it: U-Net generator, PatchGAN discriminator,
//! MSE adversarial plus cosine losses, Adam, checkpoints, and prediction.

mod adam;
mod checkpoint;
pub(crate) mod gemm;
mod gradcheck;
mod loss;
mod network;
pub mod ops;
mod predict;
mod spec;
mod tensor;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{
    load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use gradcheck::{
    check_model, grad_check, grad_check_with, Differentiable, GradCheckOptions, GradCheckReport,
    GroupResult, NetworkProbe,
};
pub use loss::{cosine_loss, mse_loss, mse_to_label, COSINE_EPS};
pub use network::{Network, Phase};
pub use predict::{
    image_to_tensor, predict_normal, predict_normal_with, tensor_to_normal_map, Predictor,
};
pub use spec::{
    build_discriminator, build_generator, Activation, LayerKind, LayerSpec, NetworkKind,
    NetworkSpec, Skip, TrainConfig, KERNEL, LEAKY_SLOPE,
};
pub use tensor::Tensor;
pub use train::{
    load_training_samples, loss_log_csv, train_cgan, train_cgan_objects, train_on_samples,
    LossRecord, TrainOutcome, TrainSample, CHECKPOINT_FILE, LOSS_LOG_FILE, LOSS_LOG_HEADER,
};

use crate::imaging::ImagingError;
use crate::photometric::PhotometricError;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum NeuralError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("object {0} has no ground-truth normal map")]
    MissingGroundTruth(String),
    #[error("checkpoint does not start with the NGCK magic")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    BadVersion(u32),
    #[error("checkpoint is truncated ({0})")]
    Truncated(&'static str),
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
    #[error("checkpoint does not match the network architecture: {0}")]
    Architecture(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Photometric(#[from] PhotometricError),
}
