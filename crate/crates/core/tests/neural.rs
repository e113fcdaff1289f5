use normalforge::neural::ops::{conv2d_forward, conv_transpose2d_forward};
use normalforge::neural::{
    adam_step, build_discriminator, build_generator, check_model, cosine_loss, grad_check_with,
    load_checkpoint, mse_to_label, save_checkpoint, train_cgan_objects, Activation, AdamConfig,
    AdamState, Checkpoint, Differentiable, GradCheckOptions, LayerKind, LayerSpec, Network,
    NetworkKind, NetworkProbe, NetworkSpec, NeuralError, Phase, Tensor, TrainConfig,
};
use normalforge::photometric::{make_light_rig, synth_dataset, SurfaceParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random(shape: [usize; 4], rng: &mut ChaCha8Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn single(kind: LayerKind, cin: usize, cout: usize, bn: bool, act: Activation) -> NetworkSpec {
    NetworkSpec {
        kind: NetworkKind::Discriminator,
        input_channels: cin,
        layers: vec![LayerSpec {
            kind,
            in_channels: cin,
            out_channels: cout,
            kernel: 4,
            stride: 2,
            pad: 1,
            batch_norm: bn,
            activation: act,
            dropout: 0.0,
        }],
        skips: Vec::new(),
        bottleneck: None,
    }
}

fn tight() -> GradCheckOptions {
    GradCheckOptions {
        tolerance: 1e-6,
        samples_per_group: 12,
        ..GradCheckOptions::default()
    }
}

#[test]
fn conv_and_transposed_conv_match_finite_differences() {
    for kind in [LayerKind::Conv, LayerKind::ConvTranspose] {
        let r = grad_check_with(&single(kind, 3, 2, false, Activation::Linear), 4, &tight()).unwrap();
        assert!(r.passed() && r.max_rel_error() < 1e-6, "{kind:?}: {r:?}");
    }
}

#[test]
fn batch_norm_layer_matches_finite_differences() {
    let spec = single(LayerKind::Conv, 3, 4, true, Activation::LeakyRelu(0.2));
    let r = grad_check_with(&spec, 8, &tight()).unwrap();
    assert!(r.passed(), "{r:?}");
    assert!(r.groups.iter().any(|g| g.name.contains("gamma")));
}

#[test]
fn transposed_conv_is_the_adjoint_of_conv() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let w = random([5, 3, 4, 4], &mut rng);
    let x = random([2, 3, 10, 10], &mut rng);
    let (y, _) = conv2d_forward(&x, &w, None, 2, 1).unwrap();
    let v = random(y.shape(), &mut rng);
    let (xt, _) = conv_transpose2d_forward(&v, &w, None, 2, 1).unwrap();
    assert_eq!(xt.shape(), x.shape());
    let lhs = y.dot(&v);
    let rhs = x.dot(&xt);
    assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
}

/// Wraps a correct model and perturbs one analytic gradient entry.
struct Corrupted(NetworkProbe);

impl Differentiable for Corrupted {
    fn group_names(&self) -> Vec<String> {
        self.0.group_names()
    }
    fn group_len(&self, g: usize) -> usize {
        self.0.group_len(g)
    }
    fn value(&mut self) -> Result<f64, NeuralError> {
        self.0.value()
    }
    fn gradients(&mut self) -> Result<Vec<Vec<f64>>, NeuralError> {
        let mut g = self.0.gradients()?;
        g[0].iter_mut().for_each(|v| *v *= 1.01);
        Ok(g)
    }
    fn param_mut(&mut self, g: usize, i: usize) -> &mut f64 {
        self.0.param_mut(g, i)
    }
    fn kink_pattern(&self) -> Vec<bool> {
        self.0.kink_pattern()
    }
}

#[test]
fn gradient_check_detects_a_corrupted_backward() {
    let spec = single(LayerKind::Conv, 3, 2, false, Activation::Linear);
    let opts = GradCheckOptions::default();
    let mut good = NetworkProbe::new(spec.clone(), 3, &opts).unwrap();
    assert!(check_model(&mut good, &opts, 3).unwrap().passed());
    let mut bad = Corrupted(NetworkProbe::new(spec, 3, &opts).unwrap());
    let r = check_model(&mut bad, &opts, 3).unwrap();
    assert!(!r.passed());
    assert_eq!(r.failures().len(), 1);
}

fn generator_loss(gen: &mut Network, disc: &mut Network, x: &Tensor, y: &Tensor, lambda: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let fake = gen.forward(x, Phase::Train, &mut rng).unwrap();
    let p = disc
        .forward(&Tensor::concat_channels(x, &fake).unwrap(), Phase::Train, &mut rng)
        .unwrap();
    mse_to_label(&p, 1.0).unwrap().0 + lambda * cosine_loss(&fake, y).unwrap().0
}

#[test]
fn small_generator_step_lowers_its_loss() {
    let cfg = TrainConfig::default();
    let mut init = ChaCha8Rng::seed_from_u64(2);
    let mut gen = Network::new(build_generator(&cfg).unwrap(), &mut init).unwrap();
    let mut disc = Network::new(build_discriminator(&cfg).unwrap(), &mut init).unwrap();
    let x = random([1, 3, 64, 64], &mut init);
    let y = random([1, 3, 64, 64], &mut init);
    let before = generator_loss(&mut gen, &mut disc, &x, &y, cfg.lambda_cos);

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    gen.zero_grad();
    let fake = gen.forward(&x, Phase::Train, &mut rng).unwrap();
    let pair = Tensor::concat_channels(&x, &fake).unwrap();
    let p = disc.forward(&pair, Phase::Train, &mut rng).unwrap();
    let (_, g) = mse_to_label(&p, 1.0).unwrap();
    let (_, mut grad_fake) = disc.backward(&g, true).unwrap().unwrap().split_channels(3).unwrap();
    let (_, mut gc) = cosine_loss(&fake, &y).unwrap();
    gc.scale(cfg.lambda_cos);
    grad_fake.add_assign(&gc).unwrap();
    gen.backward(&grad_fake, false).unwrap();
    let adam = AdamConfig {
        lr: 1e-6,
        ..AdamConfig::from(&cfg)
    };
    adam_step(&mut gen.params_mut(), &mut AdamState::new(), &adam).unwrap();

    let after = generator_loss(&mut gen, &mut disc, &x, &y, cfg.lambda_cos);
    assert!(after < before, "{after} !< {before}");
}

#[test]
fn patchgan_outputs_only_see_their_receptive_field() {
    let cfg = TrainConfig::default();
    let spec = build_discriminator(&cfg).unwrap();
    assert_eq!(spec.receptive_field(), 70);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut disc = Network::new(spec, &mut rng).unwrap();
    let x = random([1, 6, 64, 64], &mut rng);
    let base = disc.forward(&x, Phase::Eval, &mut rng).unwrap();
    assert_eq!(base.shape(), [1, 1, 6, 6]);
    // a pixel far in the top-left corner can only reach the first outputs;
    // outputs whose window starts past it stay bitwise unchanged
    let mut poked = x.clone();
    *poked.at_mut(0, 2, 0, 0) += 1.0;
    let out = disc.forward(&poked, Phase::Eval, &mut rng).unwrap();
    let mut changed = 0;
    for oy in 0..6 {
        for ox in 0..6 {
            let (a, b) = (base.at(0, 0, oy, ox), out.at(0, 0, oy, ox));
            // output (oy, ox) sees input rows 8 oy - 23 ..= 8 oy + 46
            if 8 * oy > 23 || 8 * ox > 23 {
                assert_eq!(a.to_bits(), b.to_bits(), "output ({oy}, {ox}) moved");
            } else if a != b {
                changed += 1;
            }
        }
    }
    assert!(changed > 0);
}

fn tiny_manifest(dir: &std::path::Path) -> normalforge::photometric::DatasetManifest {
    let rig = make_light_rig(8, 45.0).unwrap();
    synth_dataset(4, 2, &rig, 32, 32, &SurfaceParams::default(), dir).unwrap()
}

fn tiny_config() -> TrainConfig {
    TrainConfig {
        epochs: 1,
        image_size: 32,
        base_channels: 4,
        depth: 3,
        ..TrainConfig::default()
    }
}

#[test]
fn one_epoch_over_two_objects_takes_sixteen_steps_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let m = tiny_manifest(dir.path());
    let cfg = tiny_config();
    let mut epochs = Vec::new();
    let a = train_cgan_objects(&m, None, &cfg, Some(&dir.path().join("a")), |e, c| epochs.push((e, c)))
        .unwrap();
    assert_eq!(a.log.len(), 16);
    assert_eq!(epochs.len(), 1);
    assert!(a.log.iter().enumerate().all(|(i, r)| r.epoch == 1 && r.step == i + 1));
    assert!(a.log.iter().all(|r| r.d_loss.is_finite() && r.g_adv.is_finite() && r.g_cos.is_finite()));
    let b = train_cgan_objects(&m, None, &cfg, Some(&dir.path().join("b")), |_, _| {}).unwrap();
    assert_eq!(a.loss_log_csv(), b.loss_log_csv());
    let read = |p: &str| std::fs::read(dir.path().join(p)).unwrap();
    assert_eq!(read("a/losses.csv"), read("b/losses.csv"));
    assert_eq!(read("a/checkpoint.ngck"), read("b/checkpoint.ngck"));

    let other = TrainConfig { seed: 1, ..cfg };
    let c = train_cgan_objects(&m, None, &other, None, |_, _| {}).unwrap();
    assert_ne!(a.loss_log_csv(), c.loss_log_csv());
}

#[test]
fn checkpoint_file_round_trips_bytes_and_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let m = tiny_manifest(dir.path());
    let out = train_cgan_objects(&m, None, &tiny_config(), None, |_, _| {}).unwrap();
    let path = dir.path().join("model.ngck");
    save_checkpoint(&out.checkpoint, &path).unwrap();
    let loaded = load_checkpoint(&path).unwrap();
    assert_eq!(loaded.to_bytes(), out.checkpoint.to_bytes());
    assert_eq!(std::fs::read(&path).unwrap(), out.checkpoint.to_bytes());

    let img = m.load_image(0, 0).unwrap();
    let a = normalforge::neural::predict_normal_with(&out.checkpoint, &img, 5).unwrap();
    let b = normalforge::neural::predict_normal_with(&loaded, &img, 5).unwrap();
    assert_eq!(a, b);

    let mut bytes = out.checkpoint.to_bytes();
    bytes[0] ^= 0xff;
    assert!(matches!(Checkpoint::from_bytes(&bytes), Err(NeuralError::BadMagic)));
}
