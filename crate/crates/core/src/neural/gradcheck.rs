//! Central finite-difference verification of analytic gradients.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Network, NetworkSpec, NeuralError, Phase, Tensor};

/// A scalar function of several parameter groups with an analytic gradient.
pub trait Differentiable {
    fn group_names(&self) -> Vec<String>;
    fn group_len(&self, group: usize) -> usize;
    fn value(&mut self) -> Result<f64, NeuralError>;
    /// Analytic gradient of [`Differentiable::value`] for every group.
    fn gradients(&mut self) -> Result<Vec<Vec<f64>>, NeuralError>;
    fn param_mut(&mut self, group: usize, index: usize) -> &mut f64;
    /// Sign pattern of non-smooth points after the last evaluation; probes
    /// that change it are discarded.
    fn kink_pattern(&self) -> Vec<bool> {
        Vec::new()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckOptions {
    pub step: f64,
    pub tolerance: f64,
    /// Denominator floor of the relative error, so entries with vanishing
    /// gradients are judged on absolute error.
    pub floor: f64,
    pub samples_per_group: usize,
    /// Probe attempts per group before giving up on kink-free entries.
    pub max_attempts: usize,
    pub batch: usize,
    /// Spatial input size; `None` picks the smallest size giving every
    /// normalized layer at least 2x2 activations.
    pub input_size: Option<usize>,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            step: 1e-5,
            tolerance: 1e-5,
            floor: 1e-4,
            samples_per_group: 6,
            max_attempts: 40,
            batch: 2,
            input_size: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupResult {
    pub name: String,
    pub checked: usize,
    pub skipped_kinks: usize,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub groups: Vec<GroupResult>,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.groups.iter().map(|g| g.max_rel_error).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.groups
            .iter()
            .all(|g| g.checked > 0 && g.max_rel_error < self.tolerance)
    }

    pub fn failures(&self) -> Vec<&GroupResult> {
        self.groups
            .iter()
            .filter(|g| g.checked == 0 || !(g.max_rel_error < self.tolerance))
            .collect()
    }
}

/// Step divisors tried in turn when a probe crosses a non-smooth point.
const STEP_SHRINKS: [f64; 3] = [1.0, 10.0, 100.0];

/// Checks sampled entries of every group of `model`.
pub fn check_model(
    model: &mut dyn Differentiable,
    opts: &GradCheckOptions,
    seed: u64,
) -> Result<GradCheckReport, NeuralError> {
    let analytic = model.gradients()?;
    model.value()?;
    let base_pattern = model.kink_pattern();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut groups = Vec::new();
    for (g, name) in model.group_names().into_iter().enumerate() {
        let len = model.group_len(g);
        let attempts = opts.max_attempts.min(len);
        let candidates = sample(&mut rng, len, attempts);
        let mut res = GroupResult {
            name,
            checked: 0,
            skipped_kinks: 0,
            max_rel_error: 0.0,
        };
        for idx in candidates.iter() {
            if res.checked == opts.samples_per_group {
                break;
            }
            let orig = *model.param_mut(g, idx);
            let mut numeric = None;
            for shrink in STEP_SHRINKS {
                let h = opts.step / shrink;
                *model.param_mut(g, idx) = orig + h;
                let plus = model.value()?;
                let kink = model.kink_pattern() != base_pattern;
                *model.param_mut(g, idx) = orig - h;
                let minus = model.value()?;
                let kink = kink || model.kink_pattern() != base_pattern;
                *model.param_mut(g, idx) = orig;
                if !kink {
                    numeric = Some((plus - minus) / (2.0 * h));
                    break;
                }
            }
            let Some(numeric) = numeric else {
                res.skipped_kinks += 1;
                continue;
            };
            let a = analytic[g][idx];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(opts.floor);
            res.max_rel_error = res.max_rel_error.max(rel);
            res.checked += 1;
        }
        groups.push(res);
    }
    Ok(GradCheckReport {
        groups,
        tolerance: opts.tolerance,
    })
}

/// `sum(r * net(x))` for fixed random `x` and `r`, evaluated in the training
/// phase with a dropout stream reset before every pass.
pub struct NetworkProbe {
    net: Network,
    input: Tensor,
    weights: Tensor,
    seed: u64,
}

impl NetworkProbe {
    pub fn new(spec: NetworkSpec, seed: u64, opts: &GradCheckOptions) -> Result<Self, NeuralError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let size = opts.input_size.unwrap_or_else(|| default_input_size(&spec));
        let mut net = Network::new(spec, &mut rng)?;
        let shape = [opts.batch, net.spec().input_channels, size, size];
        let input = random_tensor(shape, &mut rng);
        let out = net.forward(&input, Phase::Train, &mut rng)?;
        let weights = random_tensor(out.shape(), &mut rng);
        Ok(Self {
            net,
            input,
            weights,
            seed,
        })
    }

    fn dropout_rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(1))
    }
}

fn random_tensor(shape: [usize; 4], rng: &mut ChaCha8Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .expect("sized")
}

fn default_input_size(spec: &NetworkSpec) -> usize {
    (4..=512)
        .map(|s| 1usize << s)
        .find(|&s| {
            let mut size = s;
            spec.layers.iter().all(|l| {
                let next = spec_layer_size(l, size);
                size = next.unwrap_or(0);
                size > 0 && (!l.batch_norm || size >= 2)
            })
        })
        .unwrap_or(32)
}

fn spec_layer_size(l: &super::LayerSpec, s: usize) -> Option<usize> {
    let one = NetworkSpec {
        kind: super::NetworkKind::Discriminator,
        input_channels: l.in_channels,
        layers: vec![l.clone()],
        skips: Vec::new(),
        bottleneck: None,
    };
    one.output_size(s)
}

impl Differentiable for NetworkProbe {
    fn group_names(&self) -> Vec<String> {
        let mut names = self.net.param_names();
        names.push("input".into());
        names
    }

    fn group_len(&self, group: usize) -> usize {
        let names = self.net.named_tensors();
        let params: Vec<_> = names.iter().filter(|(n, _)| !n.contains("running")).collect();
        params.get(group).map_or(self.input.len(), |(_, t)| t.len())
    }

    fn value(&mut self) -> Result<f64, NeuralError> {
        let mut rng = self.dropout_rng();
        let out = self.net.forward(&self.input, Phase::Train, &mut rng)?;
        Ok(out.dot(&self.weights))
    }

    fn gradients(&mut self) -> Result<Vec<Vec<f64>>, NeuralError> {
        self.net.zero_grad();
        self.value()?;
        let gi = self.net.backward(&self.weights, true)?.expect("input gradient");
        let mut out: Vec<Vec<f64>> = self
            .net
            .params_mut()
            .into_iter()
            .map(|p| p.grad_mut().to_vec())
            .collect();
        out.push(gi.into_data());
        Ok(out)
    }

    fn param_mut(&mut self, group: usize, index: usize) -> &mut f64 {
        let mut params = self.net.params_mut();
        if group < params.len() {
            &mut params.swap_remove(group).data_mut()[index]
        } else {
            &mut self.input.data_mut()[index]
        }
    }

    fn kink_pattern(&self) -> Vec<bool> {
        self.net.kink_pattern()
    }
}

pub fn grad_check(spec: &NetworkSpec, seed: u64) -> Result<GradCheckReport, NeuralError> {
    grad_check_with(spec, seed, &GradCheckOptions::default())
}

pub fn grad_check_with(
    spec: &NetworkSpec,
    seed: u64,
    opts: &GradCheckOptions,
) -> Result<GradCheckReport, NeuralError> {
    let mut probe = NetworkProbe::new(spec.clone(), seed, opts)?;
    check_model(&mut probe, opts, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{build_discriminator, Activation, LayerKind, LayerSpec, NetworkKind, TrainConfig};

    fn single_conv() -> NetworkSpec {
        NetworkSpec {
            kind: NetworkKind::Discriminator,
            input_channels: 2,
            layers: vec![LayerSpec {
                kind: LayerKind::Conv,
                in_channels: 2,
                out_channels: 3,
                kernel: 4,
                stride: 2,
                pad: 1,
                batch_norm: false,
                activation: Activation::Linear,
                dropout: 0.0,
            }],
            skips: Vec::new(),
            bottleneck: None,
        }
    }

    #[test]
    fn single_conv_passes() {
        let r = grad_check(&single_conv(), 1).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.groups.len(), 3);
    }

    #[test]
    fn small_discriminator_passes() {
        let cfg = TrainConfig {
            image_size: 32,
            base_channels: 2,
            ..TrainConfig::default()
        };
        let r = grad_check(&build_discriminator(&cfg).unwrap(), 2).unwrap();
        assert!(r.passed(), "{r:?}");
    }
}
