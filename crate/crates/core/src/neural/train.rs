use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::predict::{image_to_tensor, normal_map_to_tensor};
use super::{
    adam_step, build_discriminator, build_generator, cosine_loss, mse_to_label, save_checkpoint,
    AdamConfig, AdamState, Checkpoint, Network, NeuralError, Phase, Tensor, TrainConfig,
};
use crate::photometric::DatasetManifest;

pub const LOSS_LOG_HEADER: &str = "epoch,step,d_loss,g_adv,g_cos";
pub const CHECKPOINT_FILE: &str = "checkpoint.ngck";
pub const LOSS_LOG_FILE: &str = "losses.csv";

// Independent streams derived from the run seed.
const SHUFFLE_STREAM: u64 = 0x5348_5546;
const DROPOUT_STREAM: u64 = 0x4452_4f50;

/// Losses of one optimization step; `epoch` and `step` are 1-based and
/// `step` counts within the epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub epoch: usize,
    pub step: usize,
    pub d_loss: f64,
    pub g_adv: f64,
    pub g_cos: f64,
}

/// Condition image in `[-1, 1]` paired with its raw target normals.
#[derive(Debug, Clone)]
pub struct TrainSample {
    pub input: Tensor,
    pub target: Tensor,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub log: Vec<LossRecord>,
}

impl TrainOutcome {
    /// Mean generator cosine loss per epoch.
    pub fn epoch_cosine_means(&self) -> Vec<f64> {
        epoch_means(&self.log, |r| r.g_cos)
    }

    pub fn loss_log_csv(&self) -> String {
        loss_log_csv(&self.log)
    }
}

fn epoch_means(log: &[LossRecord], f: impl Fn(&LossRecord) -> f64) -> Vec<f64> {
    let epochs = log.iter().map(|r| r.epoch).max().unwrap_or(0);
    let mut sums = vec![(0.0, 0usize); epochs];
    for r in log {
        sums[r.epoch - 1].0 += f(r);
        sums[r.epoch - 1].1 += 1;
    }
    sums.into_iter().map(|(s, n)| s / n as f64).collect()
}

pub fn loss_log_csv(log: &[LossRecord]) -> String {
    let mut s = String::from(LOSS_LOG_HEADER);
    s.push('\n');
    for r in log {
        let _ = writeln!(s, "{},{},{},{},{}", r.epoch, r.step, r.d_loss, r.g_adv, r.g_cos);
    }
    s
}

/// One sample per lit image of each selected object (all objects when
/// `objects` is `None`); every view of an object shares its normal target.
pub fn load_training_samples(
    manifest: &DatasetManifest,
    objects: Option<&[usize]>,
    image_size: usize,
) -> Result<Vec<TrainSample>, NeuralError> {
    let all: Vec<usize> = (0..manifest.objects.len()).collect();
    let mut samples = Vec::new();
    for &o in objects.unwrap_or(&all) {
        let entry = manifest
            .objects
            .get(o)
            .ok_or_else(|| NeuralError::Config(format!("object index {o} out of range")))?;
        let normal = manifest
            .load_normal(o)?
            .ok_or_else(|| NeuralError::MissingGroundTruth(entry.id.clone()))?;
        let target = normal_map_to_tensor(&normal, image_size)?;
        for img in manifest.load_images(o)? {
            samples.push(TrainSample {
                input: image_to_tensor(&img, image_size)?,
                target: target.clone(),
            });
        }
    }
    if samples.is_empty() {
        return Err(NeuralError::Config("no training samples".into()));
    }
    Ok(samples)
}

/// Trains on every object of `manifest`; writes the checkpoint and loss log
/// into `out_dir` when given.
pub fn train_cgan(
    manifest: &DatasetManifest,
    cfg: &TrainConfig,
    out_dir: Option<&Path>,
) -> Result<TrainOutcome, NeuralError> {
    train_cgan_objects(manifest, None, cfg, out_dir, |_, _| {})
}

/// Like [`train_cgan`] restricted to `objects`, reporting each finished
/// epoch's mean cosine loss to `on_epoch`.
pub fn train_cgan_objects(
    manifest: &DatasetManifest,
    objects: Option<&[usize]>,
    cfg: &TrainConfig,
    out_dir: Option<&Path>,
    on_epoch: impl FnMut(usize, f64),
) -> Result<TrainOutcome, NeuralError> {
    cfg.validate()?;
    let samples = load_training_samples(manifest, objects, cfg.image_size)?;
    let outcome = train_on_samples(&samples, cfg, on_epoch)?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|source| NeuralError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        save_checkpoint(&outcome.checkpoint, &dir.join(CHECKPOINT_FILE))?;
        let log = dir.join(LOSS_LOG_FILE);
        std::fs::write(&log, outcome.loss_log_csv())
            .map_err(|source| NeuralError::Io { path: log, source })?;
    }
    Ok(outcome)
}

fn stack_batch(items: &[&Tensor]) -> Tensor {
    let [_, c, h, w] = items[0].shape();
    let data = items.iter().flat_map(|t| t.data().iter().copied()).collect();
    Tensor::from_vec([items.len(), c, h, w], data).expect("uniform sample shapes")
}

pub fn train_on_samples(
    samples: &[TrainSample],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<TrainOutcome, NeuralError> {
    cfg.validate()?;
    let mut init = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut gen = Network::new(build_generator(cfg)?, &mut init)?;
    let mut disc = Network::new(build_discriminator(cfg)?, &mut init)?;
    let mut shuffle = ChaCha8Rng::seed_from_u64(cfg.seed ^ SHUFFLE_STREAM);
    let mut dropout = ChaCha8Rng::seed_from_u64(cfg.seed ^ DROPOUT_STREAM);
    let adam = AdamConfig::from(cfg);
    let (mut g_state, mut d_state) = (AdamState::new(), AdamState::new());

    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut log = Vec::with_capacity(cfg.epochs * samples.len().div_ceil(cfg.batch_size));
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle);
        for (i, batch) in order.chunks(cfg.batch_size).enumerate() {
            let x = stack_batch(&batch.iter().map(|&j| &samples[j].input).collect::<Vec<_>>());
            let y = stack_batch(&batch.iter().map(|&j| &samples[j].target).collect::<Vec<_>>());
            let record = train_step(
                &mut gen,
                &mut disc,
                &x,
                &y,
                cfg.lambda_cos,
                &adam,
                (&mut g_state, &mut d_state),
                &mut dropout,
            )
            .map_err(|e| match e {
                NeuralError::NonFinite(op) => NeuralError::Config(format!(
                    "training diverged at epoch {epoch}, step {}: non-finite value in {op}",
                    i + 1
                )),
                other => other,
            })?;
            log.push(LossRecord {
                epoch,
                step: i + 1,
                ..record
            });
        }
        let done = &log[log.len() - order.len().div_ceil(cfg.batch_size)..];
        on_epoch(epoch, done.iter().map(|r| r.g_cos).sum::<f64>() / done.len() as f64);
    }
    Ok(TrainOutcome {
        checkpoint: Checkpoint::from_networks(cfg, &[&gen, &disc])?,
        log,
    })
}

/// Discriminator update followed by a generator update on one batch.
#[allow(clippy::too_many_arguments)]
fn train_step(
    gen: &mut Network,
    disc: &mut Network,
    x: &Tensor,
    y: &Tensor,
    lambda: f64,
    adam: &AdamConfig,
    (g_state, d_state): (&mut AdamState, &mut AdamState),
    rng: &mut ChaCha8Rng,
) -> Result<LossRecord, NeuralError> {
    let fake = gen.forward(x, Phase::Train, rng)?;
    let real_pair = Tensor::concat_channels(x, y)?;
    let fake_pair = Tensor::concat_channels(x, &fake)?;

    // D: 1/2 [MSE(D(x, y), 1) + MSE(D(x, G(x)), 0)], generator detached
    disc.zero_grad();
    let p = disc.forward(&real_pair, Phase::Train, rng)?;
    let (l_real, mut g) = mse_to_label(&p, 1.0)?;
    g.scale(0.5);
    disc.backward(&g, false)?;
    let p = disc.forward(&fake_pair, Phase::Train, rng)?;
    let (l_fake, mut g) = mse_to_label(&p, 0.0)?;
    g.scale(0.5);
    disc.backward(&g, false)?;
    adam_step(&mut disc.params_mut(), d_state, adam)?;

    // G: MSE(D(x, G(x)), 1) + lambda * cos(G(x), y) against the updated D
    gen.zero_grad();
    let p = disc.forward(&fake_pair, Phase::Train, rng)?;
    let (g_adv, g) = mse_to_label(&p, 1.0)?;
    let pair_grad = disc
        .backward(&g, true)?
        .expect("input gradient requested");
    let (_, mut grad_fake) = pair_grad.split_channels(x.c())?;
    let (g_cos, mut gc) = cosine_loss(&fake, y)?;
    gc.scale(lambda);
    grad_fake.add_assign(&gc)?;
    gen.backward(&grad_fake, false)?;
    adam_step(&mut gen.params_mut(), g_state, adam)?;

    Ok(LossRecord {
        epoch: 0,
        step: 0,
        d_loss: 0.5 * (l_real + l_fake),
        g_adv,
        g_cos,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epoch_means_group_by_epoch() {
        let r = |epoch, g_cos| LossRecord {
            epoch,
            step: 1,
            d_loss: 0.0,
            g_adv: 0.0,
            g_cos,
        };
        let log = [r(1, 1.0), r(1, 3.0), r(2, 0.5)];
        assert_eq!(epoch_means(&log, |r| r.g_cos), vec![2.0, 0.5]);
        let csv = loss_log_csv(&log[..1]);
        assert_eq!(csv, "epoch,step,d_loss,g_adv,g_cos\n1,1,0,0,1\n");
    }
}
