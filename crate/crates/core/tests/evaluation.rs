use nalgebra::{DMatrix, SymmetricEigen};
use normalforge::evaluation::{
    f_score, hinge_objective, pca_fit, run_ambiguity_eval, run_recognition_eval, ssim, svm_train,
    DegradeKind, DegradeSpec, ExtractorKind, IdentityPredictor, RecognitionOptions,
    Representation, Standardizer,
};
use normalforge::imaging::Image;
use normalforge::photometric::{make_light_rig, synth_dataset, SurfaceParams};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn random_rows(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..dim).map(|j| rng.random_range(-1.0..1.0) * (1.0 + 0.5 * j as f64)).collect())
        .collect()
}

/// Descending eigenpairs of the sample covariance from nalgebra.
fn dense_eigen(xs: &[Vec<f64>]) -> Vec<(f64, Vec<f64>)> {
    let (n, dim) = (xs.len(), xs[0].len());
    let mean: Vec<f64> = (0..dim).map(|j| xs.iter().map(|x| x[j]).sum::<f64>() / n as f64).collect();
    let cov = DMatrix::from_fn(dim, dim, |r, c| {
        xs.iter().map(|x| (x[r] - mean[r]) * (x[c] - mean[c])).sum::<f64>() / (n - 1) as f64
    });
    let e = SymmetricEigen::new(cov);
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..dim)
        .map(|i| (e.eigenvalues[i], e.eigenvectors.column(i).iter().copied().collect()))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    pairs
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pca_agrees_with_dense_eigendecomposition(n in 3usize..30, dim in 2usize..12, seed in any::<u64>()) {
        let xs = random_rows(n, dim, seed);
        let k = (n - 1).min(dim);
        let model = pca_fit(&xs, k).unwrap();
        for (i, (val, vec)) in dense_eigen(&xs).into_iter().take(k).enumerate() {
            prop_assert!((model.explained_variance[i] - val).abs() < 1e-8);
            let sign = model.components[i].iter().zip(&vec).map(|(a, b)| a * b).sum::<f64>().signum();
            for (a, b) in model.components[i].iter().zip(&vec) {
                prop_assert!((a - sign * b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn f_score_ignores_sample_order_and_label_names(
        pairs in proptest::collection::vec((0usize..4, 0usize..4), 1..40),
        shift in 1usize..100,
        seed in any::<u64>(),
    ) {
        let (pred, truth): (Vec<usize>, Vec<usize>) = pairs.iter().copied().unzip();
        let base = f_score(&pred, &truth).unwrap();
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        use rand::seq::SliceRandom;
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let p2: Vec<usize> = order.iter().map(|&i| pred[i] * 7 + shift).collect();
        let t2: Vec<usize> = order.iter().map(|&i| truth[i] * 7 + shift).collect();
        prop_assert!((f_score(&p2, &t2).unwrap() - base).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&base));
    }

    #[test]
    fn standardized_features_ignore_per_dimension_scaling(
        scales in proptest::collection::vec(0.01..100.0f64, 5),
        seed in any::<u64>(),
    ) {
        let xs = random_rows(12, 5, seed);
        let scaled: Vec<Vec<f64>> = xs.iter().map(|x| x.iter().zip(&scales).map(|(v, s)| v * s).collect()).collect();
        let (a, b) = (Standardizer::fit(&xs).unwrap(), Standardizer::fit(&scaled).unwrap());
        for (x, y) in xs.iter().zip(&scaled) {
            for (u, v) in a.apply(x).unwrap().iter().zip(b.apply(y).unwrap()) {
                prop_assert!((u - v).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn pca_ratios_are_invariant_to_uniform_rescaling() {
    let xs = random_rows(15, 6, 3);
    let scaled: Vec<Vec<f64>> = xs.iter().map(|x| x.iter().map(|v| 40.0 * v).collect()).collect();
    let (a, b) = (pca_fit(&xs, 4).unwrap(), pca_fit(&scaled, 4).unwrap());
    for (u, v) in a.explained_variance_ratio().iter().zip(b.explained_variance_ratio()) {
        assert!((u - v).abs() < 1e-12);
    }
    let (pa, pb) = (a.project(&xs[2]).unwrap(), b.project(&scaled[2]).unwrap());
    for (u, v) in pa.iter().zip(&pb) {
        assert!((40.0 * u - v).abs() < 1e-9);
    }
}

#[test]
fn svm_reaches_the_grid_search_optimum_on_a_toy_problem() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let xs: Vec<Vec<f64>> = (0..30)
        .map(|i| {
            let c = if i < 15 { 1.0 } else { -1.0 };
            vec![c + rng.random_range(-1.0..1.0), -c + rng.random_range(-1.0..1.0)]
        })
        .collect();
    let labels: Vec<usize> = (0..30).map(|i| usize::from(i >= 15)).collect();
    let ys: Vec<f64> = labels.iter().map(|&l| if l == 0 { 1.0 } else { -1.0 }).collect();
    for c in [0.1, 1.0, 10.0] {
        let m = svm_train(&xs, &labels, c, 4).unwrap();
        let ours = hinge_objective(&m.weights[0], m.biases[0], &xs, &ys, c);
        let mut best = f64::INFINITY;
        for i in 0..=80 {
            for j in 0..=80 {
                for k in 0..=80 {
                    let w = [-4.0 + i as f64 * 0.1, -4.0 + j as f64 * 0.1];
                    best = best.min(hinge_objective(&w, -4.0 + k as f64 * 0.1, &xs, &ys, c));
                }
            }
        }
        assert!(ours <= 1.05 * best, "C = {c}: {ours} vs grid {best}");
    }
}

#[test]
fn svm_separates_three_clusters() {
    let centers = [[0.0, 4.0], [-4.0, -2.0], [4.0, -2.0]];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut xs = Vec::new();
    let mut labels = Vec::new();
    for (l, c) in centers.iter().enumerate() {
        for _ in 0..10 {
            xs.push(vec![c[0] + rng.random_range(-1.0..1.0), c[1] + rng.random_range(-1.0..1.0)]);
            labels.push(l + 10);
        }
    }
    let m = svm_train(&xs, &labels, 1.0, 0).unwrap();
    assert_eq!(m.labels, vec![10, 11, 12]);
    for (x, &l) in xs.iter().zip(&labels) {
        assert_eq!(m.predict(x).unwrap(), l);
    }
    for (l, c) in centers.iter().enumerate() {
        assert_eq!(m.predict(c).unwrap(), l + 10);
    }
}

#[test]
fn ssim_falls_as_noise_grows() {
    let base = Image::from_fn(48, 48, 1, |x, y, _| 0.5 + 0.4 * ((x as f64 / 5.0).sin() * (y as f64 / 7.0).cos()))
        .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let noise: Vec<f64> = (0..48 * 48).map(|_| rng.sample(StandardNormal)).collect();
    let mut last = ssim(&base, &base).unwrap();
    assert!((last - 1.0).abs() < 1e-12);
    for sigma in [0.01, 0.05, 0.1] {
        let noisy = Image::from_vec(
            48,
            48,
            1,
            base.data().iter().zip(&noise).map(|(v, n)| (v + sigma * n).clamp(0.0, 1.0)).collect(),
        )
        .unwrap();
        assert!((ssim(&noisy, &base).unwrap() - ssim(&base, &noisy).unwrap()).abs() < 1e-12);
        let s = ssim(&base, &noisy).unwrap();
        assert!(s < last, "sigma {sigma}: {s} !< {last}");
        last = s;
    }
}

#[test]
fn identity_predictor_makes_both_representations_agree() {
    let dir = tempfile::tempdir().unwrap();
    let rig = make_light_rig(4, 45.0).unwrap();
    let m = synth_dataset(3, 3, &rig, 32, 32, &SurfaceParams::default(), dir.path()).unwrap();
    let out = dir.path().join("amb");
    std::fs::create_dir_all(&out).unwrap();
    let r = run_ambiguity_eval(&m, &mut IdentityPredictor, 0, Some(&out)).unwrap();
    assert_eq!(r.scatter.len(), 2 * 3 * 4);
    assert_eq!(r.ssim.len(), 2 * 3 * 4);
    let c = r.summary_for(Representation::Color).unwrap();
    let n = r.summary_for(Representation::Normal).unwrap();
    assert_eq!((c.min, c.median, c.max), (n.min, n.median, n.max));
    let csv = std::fs::read_to_string(out.join("ssim.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3 * 4);
}

#[test]
fn recognition_emits_one_row_per_spec_and_representation() {
    let dir = tempfile::tempdir().unwrap();
    let rig = make_light_rig(4, 45.0).unwrap();
    let m = synth_dataset(6, 3, &rig, 32, 32, &SurfaceParams::default(), dir.path()).unwrap();
    let grid = DegradeSpec::grid(&DegradeKind::ALL, &[0.0, 0.5]).unwrap();
    let mut extractor = normalforge::evaluation::make_extractor(ExtractorKind::GradHist, None).unwrap();
    let r = run_recognition_eval(
        &m,
        &mut IdentityPredictor,
        extractor.as_mut(),
        &RecognitionOptions::new(grid.clone(), 0),
        Some(dir.path()),
    )
    .unwrap();
    assert_eq!(r.rows.len(), grid.len() * 3);
    let csv = std::fs::read_to_string(dir.path().join("recognition.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + grid.len() * 3);
    // identical inputs for every representation give identical scores
    for spec in &grid {
        let f = |rep| r.f_score(spec, rep).unwrap();
        assert_eq!(f(Representation::Color), f(Representation::Normal));
    }
}
