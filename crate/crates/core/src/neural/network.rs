use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::ops::{
    batch_norm_backward, batch_norm_forward, conv2d_backward, conv2d_forward,
    conv_transpose2d_backward, conv_transpose2d_forward, dropout_backward, dropout_forward,
    leaky_relu_backward, leaky_relu_forward, tanh_backward, tanh_forward, BatchNormCache, BnMode,
    Conv2dCache, ConvGrads, ConvTranspose2dCache, BN_EPS, BN_MOMENTUM,
};
use super::{Activation, LayerKind, LayerSpec, NetworkKind, NetworkSpec, NeuralError, Tensor};

/// Execution mode of a forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Batch statistics (running estimates updated), dropout on.
    Train,
    /// Batch statistics without touching running estimates, dropout on.
    /// With batch size 1 this matches the normalization seen in training.
    Predict,
    /// Running estimates, dropout off.
    Eval,
}

impl Phase {
    fn bn_mode(self) -> BnMode {
        match self {
            Phase::Train => BnMode::Train,
            Phase::Predict => BnMode::BatchStats,
            Phase::Eval => BnMode::Eval,
        }
    }

    fn dropout(self) -> bool {
        self != Phase::Eval
    }
}

#[derive(Debug, Clone)]
struct BnParams {
    gamma: Tensor,
    beta: Tensor,
    running_mean: Tensor,
    running_var: Tensor,
}

#[derive(Debug, Clone)]
struct Layer {
    spec: LayerSpec,
    weight: Tensor,
    bias: Option<Tensor>,
    bn: Option<BnParams>,
}

#[derive(Debug, Clone)]
enum ConvCache {
    Conv(Conv2dCache),
    Transpose(ConvTranspose2dCache),
}

#[derive(Debug, Clone)]
struct LayerCache {
    conv: ConvCache,
    bn: Option<BatchNormCache>,
    dropout: Option<Vec<f64>>,
    /// Activation input (after dropout).
    pre_act: Tensor,
    output: Tensor,
}

/// Trainable network executing a [`NetworkSpec`]. The most recent forward
/// pass is cached for [`Network::backward`]; gradients accumulate into the
/// parameter buffers until [`Network::zero_grad`].
#[derive(Debug, Clone)]
pub struct Network {
    spec: NetworkSpec,
    layers: Vec<Layer>,
    cache: Vec<LayerCache>,
}

fn column(c: usize, v: f64) -> Tensor {
    Tensor::filled([1, c, 1, 1], v)
}

impl Network {
    /// Weights ~ N(0, 0.02), batch-norm scales ~ N(1, 0.02), zero biases.
    pub fn new<R: Rng + ?Sized>(spec: NetworkSpec, rng: &mut R) -> Result<Self, NeuralError> {
        spec.validate()?;
        let normal = Normal::new(0.0, 0.02).expect("valid std");
        let layers = spec
            .layers
            .iter()
            .map(|l| {
                let shape = match l.kind {
                    LayerKind::Conv => [l.out_channels, l.in_channels, l.kernel, l.kernel],
                    LayerKind::ConvTranspose => [l.in_channels, l.out_channels, l.kernel, l.kernel],
                };
                let n: usize = shape.iter().product();
                let w: Vec<f64> = (0..n).map(|_| normal.sample(rng)).collect();
                let weight = Tensor::from_vec(shape, w).expect("sized").with_grad();
                let bn = l.batch_norm.then(|| {
                    let g: Vec<f64> = (0..l.out_channels).map(|_| 1.0 + normal.sample(rng)).collect();
                    BnParams {
                        gamma: Tensor::from_vec([1, l.out_channels, 1, 1], g)
                            .expect("sized")
                            .with_grad(),
                        beta: column(l.out_channels, 0.0).with_grad(),
                        running_mean: column(l.out_channels, 0.0),
                        running_var: column(l.out_channels, 1.0),
                    }
                });
                Layer {
                    spec: l.clone(),
                    weight,
                    bias: (!l.batch_norm).then(|| column(l.out_channels, 0.0).with_grad()),
                    bn,
                }
            })
            .collect();
        Ok(Self {
            spec,
            layers,
            cache: Vec::new(),
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    fn prefix(&self) -> &'static str {
        match self.spec.kind {
            NetworkKind::Generator => "generator",
            NetworkKind::Discriminator => "discriminator",
        }
    }

    pub fn forward<R: Rng + ?Sized>(
        &mut self,
        input: &Tensor,
        phase: Phase,
        rng: &mut R,
    ) -> Result<Tensor, NeuralError> {
        self.forward_until(input, phase, rng, self.layers.len())
    }

    /// Runs layers `0..end` and returns the output of layer `end - 1`.
    fn forward_until<R: Rng + ?Sized>(
        &mut self,
        input: &Tensor,
        phase: Phase,
        rng: &mut R,
        end: usize,
    ) -> Result<Tensor, NeuralError> {
        if input.c() != self.spec.input_channels {
            return Err(NeuralError::Shape(format!(
                "network expects {} input channels, got {}",
                self.spec.input_channels,
                input.c()
            )));
        }
        self.cache.clear();
        let mut x = input.clone();
        for i in 0..end {
            for s in self.spec.skips.iter().filter(|s| s.to == i) {
                x = Tensor::concat_channels(&x, &self.cache[s.from].output)?;
            }
            let layer = &mut self.layers[i];
            let l = &layer.spec;
            let bias = layer.bias.as_ref();
            let (mut y, conv) = match l.kind {
                LayerKind::Conv => {
                    let (y, c) = conv2d_forward(&x, &layer.weight, bias, l.stride, l.pad)?;
                    (y, ConvCache::Conv(c))
                }
                LayerKind::ConvTranspose => {
                    let (y, c) = conv_transpose2d_forward(&x, &layer.weight, bias, l.stride, l.pad)?;
                    (y, ConvCache::Transpose(c))
                }
            };
            let mut bn_cache = None;
            if let Some(bn) = layer.bn.as_mut() {
                let (out, c) = batch_norm_forward(
                    &y,
                    bn.gamma.data(),
                    bn.beta.data(),
                    bn.running_mean.data_mut(),
                    bn.running_var.data_mut(),
                    phase.bn_mode(),
                    BN_MOMENTUM,
                    BN_EPS,
                )?;
                y = out;
                bn_cache = Some(c);
            }
            let mut mask = None;
            if l.dropout > 0.0 && phase.dropout() {
                let (out, m) = dropout_forward(&y, l.dropout, rng)?;
                y = out;
                mask = Some(m);
            }
            let output = match l.activation {
                Activation::LeakyRelu(s) => leaky_relu_forward(&y, s),
                Activation::Relu => leaky_relu_forward(&y, 0.0),
                Activation::Tanh => tanh_forward(&y),
                Activation::Linear => y.clone(),
            };
            output.ensure_finite("network forward")?;
            x = output.clone();
            self.cache.push(LayerCache {
                conv,
                bn: bn_cache,
                dropout: mask,
                pre_act: y,
                output,
            });
        }
        Ok(x)
    }

    /// Bottleneck activations of a generator (output of the innermost
    /// encoder block), computed without running the decoder.
    pub fn encode<R: Rng + ?Sized>(
        &mut self,
        input: &Tensor,
        phase: Phase,
        rng: &mut R,
    ) -> Result<Tensor, NeuralError> {
        let b = self
            .spec
            .bottleneck
            .ok_or_else(|| NeuralError::Config("network has no bottleneck".into()))?;
        self.forward_until(input, phase, rng, b + 1)
    }

    /// Back-propagates `grad_out` (gradient of a scalar loss with respect to
    /// the last forward output), accumulating parameter gradients. Returns the
    /// input gradient when `need_input_grad` is set.
    pub fn backward(
        &mut self,
        grad_out: &Tensor,
        need_input_grad: bool,
    ) -> Result<Option<Tensor>, NeuralError> {
        let n = self.cache.len();
        if n != self.layers.len() {
            return Err(NeuralError::Shape(
                "backward requires a complete forward pass".into(),
            ));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; n];
        grads[n - 1] = Some(grad_out.clone());
        let mut input_grad = None;
        for i in (0..n).rev() {
            let g = grads[i]
                .take()
                .ok_or_else(|| NeuralError::Shape(format!("layer {i} received no gradient")))?;
            let cache = &self.cache[i];
            let layer = &mut self.layers[i];
            if g.shape() != cache.output.shape() {
                return Err(NeuralError::Shape(format!(
                    "gradient {:?} for layer {i} output {:?}",
                    g.shape(),
                    cache.output.shape()
                )));
            }
            let mut g = match layer.spec.activation {
                Activation::LeakyRelu(s) => leaky_relu_backward(&cache.pre_act, &g, s),
                Activation::Relu => leaky_relu_backward(&cache.pre_act, &g, 0.0),
                Activation::Tanh => tanh_backward(&cache.output, &g),
                Activation::Linear => g,
            };
            if let Some(mask) = &cache.dropout {
                g = dropout_backward(mask, &g);
            }
            if let (Some(bn), Some(bc)) = (layer.bn.as_mut(), cache.bn.as_ref()) {
                let bg = batch_norm_backward(bc, bn.gamma.data(), &g)?;
                add_into(bn.gamma.grad_mut(), &bg.gamma);
                add_into(bn.beta.grad_mut(), &bg.beta);
                g = bg.input;
            }
            let need_input = i > 0 || need_input_grad;
            let cg: ConvGrads = match &cache.conv {
                ConvCache::Conv(c) => conv2d_backward(c, &layer.weight, &g, need_input)?,
                ConvCache::Transpose(c) => {
                    conv_transpose2d_backward(c, &layer.weight, &g, need_input)?
                }
            };
            add_into(layer.weight.grad_mut(), &cg.weight);
            if let Some(b) = layer.bias.as_mut() {
                add_into(b.grad_mut(), &cg.bias);
            }
            let Some(mut gi) = cg.input else { continue };
            // peel skip inputs off the end, in reverse concatenation order
            let skips: Vec<usize> = self
                .spec
                .skips
                .iter()
                .filter(|s| s.to == i)
                .map(|s| s.from)
                .collect();
            for &from in skips.iter().rev() {
                let keep = gi.c() - self.cache[from].output.c();
                let (head, tail) = gi.split_channels(keep)?;
                accumulate(&mut grads[from], tail)?;
                gi = head;
            }
            if i == 0 {
                input_grad = Some(gi);
            } else {
                accumulate(&mut grads[i - 1], gi)?;
            }
        }
        Ok(input_grad)
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    /// Trainable tensors in a fixed order: per layer weight, bias, gamma, beta.
    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            out.push(&mut l.weight);
            if let Some(b) = l.bias.as_mut() {
                out.push(b);
            }
            if let Some(bn) = l.bn.as_mut() {
                out.push(&mut bn.gamma);
                out.push(&mut bn.beta);
            }
        }
        out
    }

    /// Names of the trainable tensors, aligned with [`Network::params_mut`].
    pub fn param_names(&self) -> Vec<String> {
        self.named_tensors()
            .into_iter()
            .filter(|(n, _)| !n.contains("running"))
            .map(|(n, _)| n)
            .collect()
    }

    /// Every persistent tensor, including batch-norm running statistics.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let p = self.prefix();
        let mut out = Vec::new();
        for (i, l) in self.layers.iter().enumerate() {
            out.push((format!("{p}.layer{i}.weight"), &l.weight));
            if let Some(b) = &l.bias {
                out.push((format!("{p}.layer{i}.bias"), b));
            }
            if let Some(bn) = &l.bn {
                out.push((format!("{p}.layer{i}.bn.gamma"), &bn.gamma));
                out.push((format!("{p}.layer{i}.bn.beta"), &bn.beta));
                out.push((format!("{p}.layer{i}.bn.running_mean"), &bn.running_mean));
                out.push((format!("{p}.layer{i}.bn.running_var"), &bn.running_var));
            }
        }
        out
    }

    /// Mutable view of every persistent tensor, aligned with
    /// [`Network::named_tensors`].
    pub(crate) fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            out.push(&mut l.weight);
            if let Some(b) = l.bias.as_mut() {
                out.push(b);
            }
            if let Some(bn) = l.bn.as_mut() {
                out.push(&mut bn.gamma);
                out.push(&mut bn.beta);
                out.push(&mut bn.running_mean);
                out.push(&mut bn.running_var);
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.named_tensors()
            .iter()
            .filter(|(n, _)| !n.contains("running"))
            .map(|(_, t)| t.len())
            .sum()
    }

    /// Sign pattern of every rectifier input in the cached forward pass.
    /// Finite-difference probes that flip any entry straddle a kink.
    pub(crate) fn kink_pattern(&self) -> Vec<bool> {
        self.cache
            .iter()
            .zip(&self.layers)
            .filter(|(_, l)| {
                matches!(l.spec.activation, Activation::LeakyRelu(_) | Activation::Relu)
            })
            .flat_map(|(c, _)| c.pre_act.data().iter().map(|v| *v > 0.0))
            .collect()
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
}

fn accumulate(slot: &mut Option<Tensor>, g: Tensor) -> Result<(), NeuralError> {
    match slot {
        Some(acc) => acc.add_assign(&g),
        None => {
            *slot = Some(g);
            Ok(())
        }
    }
}
