//! Declarative network descriptions and training hyperparameters.

use serde::{Deserialize, Serialize};

use super::NeuralError;

/// Training hyperparameters. The defaults follow the published setup
/// (Adam 2e-4 / 0.5 / 0.999, batch 1, cosine weight 100, decoder dropout 0.5)
/// at desk scale: 64x64 images, depth 4, 16 base channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub lambda_cos: f64,
    pub image_size: usize,
    pub base_channels: usize,
    pub depth: usize,
    pub seed: u64,
    pub dropout: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 2e-4,
            beta1: 0.5,
            beta2: 0.999,
            batch_size: 1,
            epochs: 200,
            lambda_cos: 100.0,
            image_size: 64,
            base_channels: 16,
            depth: 4,
            seed: 0,
            dropout: 0.5,
        }
    }
}

impl TrainConfig {
    /// Full-size architecture: 512x512 input, eight encoder levels, 64 base
    /// channels (C64-C128-C256-C512-C512-C512-C512-C512).
    pub fn full_scale() -> Self {
        Self {
            image_size: 512,
            base_channels: 64,
            depth: 8,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        let bad = |m: String| Err(NeuralError::Config(m));
        if !(self.lr > 0.0 && self.lambda_cos > 0.0) {
            return bad("lr and lambda_cos must be positive".into());
        }
        if !(self.beta1 > 0.0 && self.beta1 < 1.0 && self.beta2 > 0.0 && self.beta2 < 1.0) {
            return bad("betas must lie in (0, 1)".into());
        }
        if self.batch_size == 0 || self.epochs == 0 || self.base_channels == 0 || self.depth == 0 {
            return bad("batch_size, epochs, base_channels and depth must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if !self.image_size.is_power_of_two() || self.image_size < (1 << self.depth) {
            return bad(format!(
                "image_size {} must be a power of two >= 2^depth = {}",
                self.image_size,
                1usize << self.depth.min(63)
            ));
        }
        Ok(())
    }

    /// Encoder width at level `i`: `base * min(2^i, 8)`.
    pub fn channels_at(&self, level: usize) -> usize {
        self.base_channels * (1usize << level.min(3))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Conv,
    ConvTranspose,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    LeakyRelu(f64),
    Relu,
    Tanh,
    Linear,
}

pub const LEAKY_SLOPE: f64 = 0.2;
pub const KERNEL: usize = 4;

/// One `conv -> [batch norm] -> [dropout] -> activation` block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
    pub batch_norm: bool,
    pub activation: Activation,
    pub dropout: f64,
}

/// The output of layer `from` is concatenated after the regular input of
/// layer `to` along the channel axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skip {
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkKind {
    Generator,
    Discriminator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub kind: NetworkKind,
    pub input_channels: usize,
    pub layers: Vec<LayerSpec>,
    pub skips: Vec<Skip>,
    /// Index of the innermost encoder layer, for generators.
    pub bottleneck: Option<usize>,
}

impl NetworkSpec {
    /// Side length of the input window seen by one output element.
    pub fn receptive_field(&self) -> usize {
        self.layers
            .iter()
            .rev()
            .fold(1, |r, l| (r - 1) * l.stride + l.kernel)
    }

    /// Output spatial size for a square input of side `size`.
    pub fn output_size(&self, size: usize) -> Option<usize> {
        self.layers.iter().try_fold(size, |s, l| match l.kind {
            LayerKind::Conv => (s + 2 * l.pad)
                .checked_sub(l.kernel)
                .map(|v| v / l.stride + 1),
            LayerKind::ConvTranspose => ((s - 1) * l.stride + l.kernel).checked_sub(2 * l.pad),
        })
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        for (i, l) in self.layers.iter().enumerate() {
            let mut expected = if i == 0 {
                self.input_channels
            } else {
                self.layers[i - 1].out_channels
            };
            for s in self.skips.iter().filter(|s| s.to == i) {
                if s.from >= i {
                    return Err(NeuralError::Config(format!("skip {s:?} points backwards")));
                }
                expected += self.layers[s.from].out_channels;
            }
            if l.in_channels != expected {
                return Err(NeuralError::Config(format!(
                    "layer {i} expects {} input channels, receives {expected}",
                    l.in_channels
                )));
            }
        }
        Ok(())
    }
}

/// U-Net: `depth` stride-2 encoder blocks (no norm on the first, leaky ReLU),
/// a mirrored stride-2 transposed-conv decoder with ReLU and skip
/// concatenations, dropout in the three innermost decoder blocks, and a
/// 3-channel tanh output.
pub fn build_generator(cfg: &TrainConfig) -> Result<NetworkSpec, NeuralError> {
    cfg.validate()?;
    let d = cfg.depth;
    let mut layers = Vec::with_capacity(2 * d);
    for i in 0..d {
        layers.push(LayerSpec {
            kind: LayerKind::Conv,
            in_channels: if i == 0 { 3 } else { cfg.channels_at(i - 1) },
            out_channels: cfg.channels_at(i),
            kernel: KERNEL,
            stride: 2,
            pad: 1,
            batch_norm: i > 0,
            activation: Activation::LeakyRelu(LEAKY_SLOPE),
            dropout: 0.0,
        });
    }
    let dropout_blocks = 3.min(d - 1);
    let mut skips = Vec::new();
    for j in 0..d {
        let last = j == d - 1;
        let in_channels = if j == 0 {
            cfg.channels_at(d - 1)
        } else {
            skips.push(Skip {
                from: d - 1 - j,
                to: d + j,
            });
            2 * cfg.channels_at(d - 1 - j)
        };
        layers.push(LayerSpec {
            kind: LayerKind::ConvTranspose,
            in_channels,
            out_channels: if last { 3 } else { cfg.channels_at(d - 2 - j) },
            kernel: KERNEL,
            stride: 2,
            pad: 1,
            batch_norm: !last,
            activation: if last { Activation::Tanh } else { Activation::Relu },
            dropout: if j < dropout_blocks { cfg.dropout } else { 0.0 },
        });
    }
    let spec = NetworkSpec {
        kind: NetworkKind::Generator,
        input_channels: 3,
        layers,
        skips,
        bottleneck: Some(d - 1),
    };
    spec.validate()?;
    Ok(spec)
}

/// PatchGAN: C(b)-C(2b)-C(4b)-C(8b) with strides 2, 2, 2, 1 (no norm on the
/// first block, leaky ReLU), then a stride-1 convolution to one linear
/// channel. Input is the condition image concatenated with a normal image.
pub fn build_discriminator(cfg: &TrainConfig) -> Result<NetworkSpec, NeuralError> {
    cfg.validate()?;
    let b = cfg.base_channels;
    let widths = [b, 2 * b, 4 * b, 8 * b];
    let strides = [2, 2, 2, 1];
    let mut layers = Vec::new();
    let mut in_channels = 6;
    for (i, (&w, &s)) in widths.iter().zip(&strides).enumerate() {
        layers.push(LayerSpec {
            kind: LayerKind::Conv,
            in_channels,
            out_channels: w,
            kernel: KERNEL,
            stride: s,
            pad: 1,
            batch_norm: i > 0,
            activation: Activation::LeakyRelu(LEAKY_SLOPE),
            dropout: 0.0,
        });
        in_channels = w;
    }
    layers.push(LayerSpec {
        kind: LayerKind::Conv,
        in_channels,
        out_channels: 1,
        kernel: KERNEL,
        stride: 1,
        pad: 1,
        batch_norm: false,
        activation: Activation::Linear,
        dropout: 0.0,
    });
    let spec = NetworkSpec {
        kind: NetworkKind::Discriminator,
        input_channels: 6,
        layers,
        skips: Vec::new(),
        bottleneck: None,
    };
    match spec.output_size(cfg.image_size) {
        Some(s) if s >= 1 => Ok(spec),
        _ => Err(NeuralError::Config(format!(
            "image_size {} is too small for the discriminator (minimum 24)",
            cfg.image_size
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_generator_shapes() {
        let cfg = TrainConfig::default();
        let g = build_generator(&cfg).unwrap();
        assert_eq!(g.layers.len(), 8);
        assert_eq!(g.output_size(64), Some(64));
        let outs: Vec<usize> = g.layers.iter().map(|l| l.out_channels).collect();
        assert_eq!(outs, vec![16, 32, 64, 128, 64, 32, 16, 3]);
        assert_eq!(g.layers.iter().filter(|l| l.dropout > 0.0).count(), 3);
        assert!(!g.layers[0].batch_norm && g.layers[1].batch_norm);
        assert_eq!(g.layers[7].activation, Activation::Tanh);
    }

    #[test]
    fn full_scale_generator_widths() {
        let g = build_generator(&TrainConfig::full_scale()).unwrap();
        let enc: Vec<usize> = g.layers[..8].iter().map(|l| l.out_channels).collect();
        assert_eq!(enc, vec![64, 128, 256, 512, 512, 512, 512, 512]);
        assert_eq!(g.output_size(512), Some(512));
        let d = build_discriminator(&TrainConfig::full_scale()).unwrap();
        let w: Vec<usize> = d.layers.iter().map(|l| l.out_channels).collect();
        assert_eq!(w, vec![64, 128, 256, 512, 1]);
    }

    #[test]
    fn discriminator_patch_geometry() {
        let d = build_discriminator(&TrainConfig::default()).unwrap();
        assert_eq!(d.receptive_field(), 70);
        assert_eq!(d.output_size(64), Some(6));
        let small = TrainConfig {
            image_size: 16,
            ..TrainConfig::default()
        };
        assert!(build_discriminator(&small).is_err());
    }

    #[test]
    fn config_validation() {
        let bad = TrainConfig {
            image_size: 8,
            ..TrainConfig::default()
        };
        assert!(build_generator(&bad).is_err());
        let bad = TrainConfig {
            image_size: 48,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(TrainConfig {
            lr: 0.0,
            ..TrainConfig::default()
        }
        .validate()
        .is_err());
    }
}
