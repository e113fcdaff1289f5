use std::collections::HashMap;

use super::EvalError;
use crate::imaging::{encode_normal_rgb, Image};
use crate::neural::{Checkpoint, Predictor};

/// Produces the normal-image representation of one lit photograph.
pub trait NormalPredictor {
    fn predict_image(&mut self, object_id: &str, img: &Image, seed: u64)
        -> Result<Image, EvalError>;
}

/// Deterministic per-image seed derived from a run seed.
pub fn image_seed(seed: u64, object: usize, light: usize) -> u64 {
    seed.wrapping_add(((object as u64) << 20) | light as u64)
}

/// One generator for every object.
#[derive(Debug, Clone)]
pub struct CheckpointPredictor {
    predictor: Predictor,
}

impl CheckpointPredictor {
    pub fn new(ckpt: &Checkpoint) -> Result<Self, EvalError> {
        Ok(Self {
            predictor: Predictor::from_checkpoint(ckpt)?,
        })
    }
}

impl NormalPredictor for CheckpointPredictor {
    fn predict_image(&mut self, _: &str, img: &Image, seed: u64) -> Result<Image, EvalError> {
        Ok(encode_normal_rgb(&self.predictor.predict(img, seed)?))
    }
}

/// Null control: the "normal image" is the color image itself.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityPredictor;

impl NormalPredictor for IdentityPredictor {
    fn predict_image(&mut self, _: &str, img: &Image, _: u64) -> Result<Image, EvalError> {
        Ok(img.clone())
    }
}

/// Cross-fold prediction: each object is served by the model of the fold
/// that did not train on it.
#[derive(Debug, Clone)]
pub struct FoldPredictor {
    models: Vec<Predictor>,
    assignment: HashMap<String, usize>,
}

impl FoldPredictor {
    /// `assignment` maps object ids to indices into `checkpoints`.
    pub fn new(
        checkpoints: &[Checkpoint],
        assignment: HashMap<String, usize>,
    ) -> Result<Self, EvalError> {
        if let Some((id, &i)) = assignment.iter().find(|(_, &i)| i >= checkpoints.len()) {
            return Err(EvalError::InvalidArgument(format!(
                "object {id} assigned to missing fold {i}"
            )));
        }
        Ok(Self {
            models: checkpoints
                .iter()
                .map(Predictor::from_checkpoint)
                .collect::<Result<_, _>>()?,
            assignment,
        })
    }
}

impl NormalPredictor for FoldPredictor {
    fn predict_image(&mut self, object_id: &str, img: &Image, seed: u64) -> Result<Image, EvalError> {
        let &fold = self.assignment.get(object_id).ok_or_else(|| {
            EvalError::InvalidArgument(format!("object {object_id} has no fold assignment"))
        })?;
        Ok(encode_normal_rgb(&self.models[fold].predict(img, seed)?))
    }
}
