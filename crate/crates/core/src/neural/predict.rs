use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Checkpoint, Network, NeuralError, Phase, Tensor, TrainConfig};
use crate::imaging::{
    camera_facing_unit, decode_normal_rgb, encode_normal_rgb, resize_bilinear, Image, NormalMap,
    NEUTRAL_NORMAL,
};

/// RGB image resized to `size x size` and mapped from `[0, 1]` to `[-1, 1]`,
/// as a `1 x 3 x size x size` tensor.
pub fn image_to_tensor(img: &Image, size: usize) -> Result<Tensor, NeuralError> {
    let img = resize_bilinear(&img.to_rgb(), size, size)?;
    let hw = size * size;
    let mut data = vec![0.0; 3 * hw];
    for (i, px) in img.data().chunks_exact(3).enumerate() {
        for c in 0..3 {
            data[c * hw + i] = 2.0 * px[c] - 1.0;
        }
    }
    Tensor::from_vec([1, 3, size, size], data)
}

/// Raw normal components as a `1 x 3 x size x size` tensor. Maps of another
/// size are resampled through their RGB encoding.
pub(crate) fn normal_map_to_tensor(nm: &NormalMap, size: usize) -> Result<Tensor, NeuralError> {
    let resized;
    let nm = if nm.width() == size && nm.height() == size {
        nm
    } else {
        resized = decode_normal_rgb(&resize_bilinear(&encode_normal_rgb(nm), size, size)?)?;
        &resized
    };
    let hw = size * size;
    let mut data = vec![0.0; 3 * hw];
    for (i, n) in nm.normals().iter().enumerate() {
        for c in 0..3 {
            data[c * hw + i] = n[c];
        }
    }
    Tensor::from_vec([1, 3, size, size], data)
}

/// First batch item of a 3-channel tensor as a fully valid normal map: each
/// vector is renormalized with `z >= 0`; degenerate vectors become `(0, 0, 1)`.
pub fn tensor_to_normal_map(t: &Tensor) -> Result<NormalMap, NeuralError> {
    if t.c() != 3 {
        return Err(NeuralError::Shape(format!("expected 3 channels, got {}", t.c())));
    }
    let (h, w) = (t.h(), t.w());
    let hw = h * w;
    let d = t.item(0);
    let normals = (0..hw)
        .map(|i| camera_facing_unit([d[i], d[hw + i], d[2 * hw + i]]).unwrap_or(NEUTRAL_NORMAL))
        .collect();
    Ok(NormalMap::from_parts(w, h, normals, vec![true; hw])?)
}

/// Generator restored from a checkpoint, ready for inference.
#[derive(Debug, Clone)]
pub struct Predictor {
    generator: Network,
    config: TrainConfig,
}

impl Predictor {
    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self, NeuralError> {
        Ok(Self {
            generator: ckpt.generator()?,
            config: ckpt.config().clone(),
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    /// Predicted normals at `image_size` resolution. Decoder dropout stays
    /// active and is driven by `seed`.
    pub fn predict(&mut self, img: &Image, seed: u64) -> Result<NormalMap, NeuralError> {
        let x = image_to_tensor(img, self.config.image_size)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = self.generator.forward(&x, Phase::Predict, &mut rng)?;
        tensor_to_normal_map(&y)
    }

    /// Bottleneck activations averaged over space, one value per channel.
    /// Batch norm uses running statistics so the embedding is per-image
    /// deterministic and keeps per-channel means.
    pub fn bottleneck_features(&mut self, img: &Image) -> Result<Vec<f64>, NeuralError> {
        let x = image_to_tensor(img, self.config.image_size)?;
        // the encoder has no dropout, so the stream is never drawn from
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let z = self.generator.encode(&x, Phase::Eval, &mut rng)?;
        let hw = z.h() * z.w();
        Ok(z
            .item(0)
            .chunks_exact(hw)
            .map(|plane| plane.iter().sum::<f64>() / hw as f64)
            .collect())
    }
}

pub fn predict_normal(ckpt: &Checkpoint, img: &Image) -> Result<NormalMap, NeuralError> {
    predict_normal_with(ckpt, img, 0)
}

pub fn predict_normal_with(
    ckpt: &Checkpoint,
    img: &Image,
    seed: u64,
) -> Result<NormalMap, NeuralError> {
    Predictor::from_checkpoint(ckpt)?.predict(img, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_mapping() {
        let img = Image::from_vec(1, 1, 3, vec![0.0, 0.5, 1.0]).unwrap();
        let t = image_to_tensor(&img, 1).unwrap();
        assert_eq!(t.data(), &[-1.0, 0.0, 1.0]);
        let z = Tensor::zeros([1, 3, 2, 2]);
        let nm = tensor_to_normal_map(&z).unwrap();
        assert_eq!(nm.valid_count(), 4);
        assert_eq!(nm.normal(1, 1), NEUTRAL_NORMAL);
        let back = Tensor::from_vec([1, 3, 1, 1], vec![0.3, -0.4, -0.5]).unwrap();
        let n = tensor_to_normal_map(&back).unwrap().normal(0, 0);
        assert!((n[0] - 0.6).abs() < 1e-12 && (n[1] + 0.8).abs() < 1e-12 && n[2] == 0.0);
    }
}
