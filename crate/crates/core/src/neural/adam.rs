use super::{NeuralError, Tensor, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl From<&TrainConfig> for AdamConfig {
    fn from(cfg: &TrainConfig) -> Self {
        Self {
            lr: cfg.lr,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            eps: 1e-8,
        }
    }
}

/// First/second moment buffers per parameter plus the shared step counter.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdamState {
    moments: Vec<(Vec<f64>, Vec<f64>)>,
    step: u64,
}

impl AdamState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update using each tensor's gradient buffer.
pub fn adam_step(
    params: &mut [&mut Tensor],
    state: &mut AdamState,
    cfg: &AdamConfig,
) -> Result<(), NeuralError> {
    if state.moments.is_empty() {
        state.moments = params
            .iter()
            .map(|p| (vec![0.0; p.len()], vec![0.0; p.len()]))
            .collect();
    }
    if state.moments.len() != params.len()
        || state.moments.iter().zip(params.iter()).any(|(m, p)| m.0.len() != p.len())
    {
        return Err(NeuralError::Shape("adam state does not match parameters".into()));
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for (p, (m, v)) in params.iter_mut().zip(state.moments.iter_mut()) {
        let (values, grads) = p.data_and_grad_mut();
        for i in 0..values.len() {
            let g = grads[i];
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
            let mh = m[i] / c1;
            let vh = v[i] / c2;
            values[i] -= cfg.lr * mh / (vh.sqrt() + cfg.eps);
        }
    }
    Ok(())
}
