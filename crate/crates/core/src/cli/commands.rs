use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{resolve, write_run_record};
use super::svg::{line_chart_svg, scatter_svg, Series};
use super::{
    AmbiguityRun, Cli, CliError, Command, PredictRun, ReconstructRun, RecognitionRun, SynthRun,
    TrainRun,
};
use crate::evaluation::{
    make_extractor, run_ambiguity_eval, run_recognition_eval, AmbiguityReport, CheckpointPredictor,
    DegradeKind, DegradeSpec, ExtractorKind, FoldPredictor, IdentityPredictor, NormalPredictor,
    RecognitionOptions, RecognitionReport, Representation,
};
use crate::imaging::{encode_normal_rgb, load_png, save_png};
use crate::neural::{load_checkpoint, predict_normal_with, train_cgan_objects, Checkpoint};
use crate::photometric::{
    make_light_rig, solve_normals, synth_dataset, DatasetManifest, SurfaceParams,
    DATASET_MANIFEST_NAME,
};

pub const FOLDS_FILE: &str = "folds.json";

/// Cross-object training plan written by `train --split-folds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub folds: Vec<FoldEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldEntry {
    /// Relative to the plan file.
    pub checkpoint: String,
    pub train_objects: Vec<String>,
    pub predict_objects: Vec<String>,
}

impl FoldPlan {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
    }

    /// Object id -> index of the fold that predicts it.
    pub fn assignment(&self) -> HashMap<String, usize> {
        self.folds
            .iter()
            .enumerate()
            .flat_map(|(i, f)| f.predict_objects.iter().map(move |id| (id.clone(), i)))
            .collect()
    }
}

/// Contiguous, near-equal partition of `n` object indices into `k` folds.
pub fn split_folds(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut folds = vec![Vec::new(); k];
    for i in 0..n {
        folds[i * k / n].push(i);
    }
    folds
}

pub(crate) fn execute(cli: &Cli) -> Result<(), CliError> {
    let cfg = cli.config.as_deref();
    match &cli.command {
        Command::Synth(f) => synth(&resolve(f, cfg)?, cli.threads),
        Command::Reconstruct(f) => reconstruct(&resolve(f, cfg)?, cli.threads),
        Command::Train(f) => train(&resolve(f, cfg)?, cli.threads),
        Command::Predict(f) => predict(&resolve(f, cfg)?, cli.threads),
        Command::EvalAmbiguity(f) => eval_ambiguity(&resolve(f, cfg)?, cli.threads),
        Command::EvalRecognition(f) => eval_recognition(&resolve(f, cfg)?, cli.threads),
    }
}

fn require(path: &Path, flag: &str) -> Result<(), CliError> {
    if path.as_os_str().is_empty() {
        return Err(CliError::Usage(format!("--{flag} is required")));
    }
    Ok(())
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn synth(run: &SynthRun, threads: u32) -> Result<(), CliError> {
    require(&run.out, "out")?;
    if run.lights < 3 {
        return Err(CliError::Usage(format!(
            "--lights {}: at least three light directions are required",
            run.lights
        )));
    }
    if run.objects < 2 {
        return Err(CliError::Usage("--objects must be at least 2".into()));
    }
    if run.size < 8 {
        return Err(CliError::Usage("--size must be at least 8".into()));
    }
    let rig = make_light_rig(run.lights, run.elevation)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    synth_dataset(
        run.seed,
        run.objects,
        &rig,
        run.size,
        run.size,
        &SurfaceParams::default(),
        &run.out,
    )?;
    write_run_record(&run.out, "synth", threads, run)?;
    println!("{}", run.out.join(DATASET_MANIFEST_NAME).display());
    Ok(())
}

fn reconstruct(run: &ReconstructRun, threads: u32) -> Result<(), CliError> {
    require(&run.manifest, "manifest")?;
    let manifest = DatasetManifest::load(&run.manifest)?;
    let out = run
        .out
        .clone()
        .unwrap_or_else(|| manifest.base_dir().to_path_buf());
    create_dir(&out)?;
    let mut updated = manifest.rebased(&out);
    let mut report = String::from("object_id,valid_pixels,mean_angular_error_deg\n");
    for o in 0..manifest.objects.len() {
        let id = manifest.objects[o].id.clone();
        let (normals, albedo) = solve_normals(&manifest.load_stack(o)?)?;
        let error = match manifest.load_normal(o)? {
            Some(gt) => normals.mean_angular_error_deg(&gt)?.to_string(),
            None => String::new(),
        };
        report.push_str(&format!("{id},{},{error}\n", normals.valid_count()));
        let normal_name = format!("{id}_normal.png");
        let albedo_name = format!("{id}_albedo.png");
        save_png(&encode_normal_rgb(&normals), out.join(&normal_name))?;
        save_png(&albedo.to_image(), out.join(&albedo_name))?;
        updated.objects[o].normal = Some(normal_name);
        updated.objects[o].albedo = Some(albedo_name);
    }
    let manifest_path = out.join(DATASET_MANIFEST_NAME);
    updated.save(&manifest_path)?;
    write_file(&out.join("reconstruction.csv"), &report)?;
    write_run_record(&out, "reconstruct", threads, run)?;
    println!("{}", manifest_path.display());
    Ok(())
}

fn train(run: &TrainRun, threads: u32) -> Result<(), CliError> {
    require(&run.manifest, "manifest")?;
    require(&run.out, "out")?;
    let cfg = run.train_config();
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let manifest = DatasetManifest::load(&run.manifest)?;
    let n = manifest.objects.len();
    if run.split_folds == 0 || run.split_folds > n {
        return Err(CliError::Usage(format!(
            "--split-folds must lie in 1..={n} for this manifest"
        )));
    }
    create_dir(&run.out)?;
    let progress = |fold: Option<usize>| {
        move |epoch: usize, cos: f64| match fold {
            Some(f) => eprintln!("fold {f} epoch {epoch}: mean cosine loss {cos:.6}"),
            None => eprintln!("epoch {epoch}: mean cosine loss {cos:.6}"),
        }
    };
    if run.split_folds == 1 {
        train_cgan_objects(&manifest, None, &cfg, Some(&run.out), progress(None))?;
        println!("{}", run.out.join(crate::neural::CHECKPOINT_FILE).display());
    } else {
        let ids = |idx: &[usize]| -> Vec<String> {
            idx.iter().map(|&i| manifest.objects[i].id.clone()).collect()
        };
        let mut plan = FoldPlan { folds: Vec::new() };
        for (f, held) in split_folds(n, run.split_folds).iter().enumerate() {
            let train_idx: Vec<usize> = (0..n).filter(|i| !held.contains(i)).collect();
            let dir_name = format!("fold_{f}");
            train_cgan_objects(
                &manifest,
                Some(&train_idx),
                &cfg,
                Some(&run.out.join(&dir_name)),
                progress(Some(f)),
            )?;
            plan.folds.push(FoldEntry {
                checkpoint: format!("{dir_name}/{}", crate::neural::CHECKPOINT_FILE),
                train_objects: ids(&train_idx),
                predict_objects: ids(held),
            });
        }
        let path = run.out.join(FOLDS_FILE);
        let mut text = serde_json::to_string_pretty(&plan).expect("plan serializes");
        text.push('\n');
        write_file(&path, &text)?;
        println!("{}", path.display());
    }
    write_run_record(&run.out, "train", threads, run)
}

fn predict(run: &PredictRun, threads: u32) -> Result<(), CliError> {
    require(&run.checkpoint, "checkpoint")?;
    require(&run.image, "image")?;
    require(&run.out, "out")?;
    let ckpt = load_checkpoint(&run.checkpoint)?;
    let img = load_png(&run.image)?;
    let normals = predict_normal_with(&ckpt, &img, run.seed)?;
    let dir = match run.out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    create_dir(&dir)?;
    save_png(&encode_normal_rgb(&normals), &run.out)?;
    write_run_record(&dir, "predict", threads, run)?;
    println!("{}", run.out.display());
    Ok(())
}

fn load_folds(path: &Path) -> Result<(Vec<Checkpoint>, HashMap<String, usize>), CliError> {
    let plan = FoldPlan::load(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let ckpts = plan
        .folds
        .iter()
        .map(|f| load_checkpoint(&base.join(&f.checkpoint)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((ckpts, plan.assignment()))
}

fn eval_ambiguity(run: &AmbiguityRun, threads: u32) -> Result<(), CliError> {
    require(&run.manifest, "manifest")?;
    require(&run.out, "out")?;
    let manifest = DatasetManifest::load(&run.manifest)?;
    let mut predictor: Box<dyn NormalPredictor> = match (&run.checkpoint, &run.folds, run.identity) {
        (_, _, true) => Box::new(IdentityPredictor),
        (_, Some(folds), false) => {
            let (ckpts, assignment) = load_folds(folds)?;
            Box::new(FoldPredictor::new(&ckpts, assignment)?)
        }
        (Some(c), None, false) => Box::new(CheckpointPredictor::new(&load_checkpoint(c)?)?),
        (None, None, false) => {
            return Err(CliError::Usage(
                "one of --checkpoint, --folds or --identity is required".into(),
            ))
        }
    };
    create_dir(&run.out)?;
    let report = run_ambiguity_eval(&manifest, predictor.as_mut(), run.seed, Some(&run.out))?;
    if run.svg {
        ambiguity_svgs(&report, &run.out)?;
    }
    write_run_record(&run.out, "eval-ambiguity", threads, run)?;
    for s in &report.summary {
        println!("{}: median SSIM {:.6}", s.representation, s.median);
    }
    Ok(())
}

fn eval_recognition(run: &RecognitionRun, threads: u32) -> Result<(), CliError> {
    require(&run.manifest, "manifest")?;
    require(&run.out, "out")?;
    let kinds = run
        .kinds
        .iter()
        .map(|k| k.parse::<DegradeKind>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let grid = DegradeSpec::grid(&kinds, &run.amounts).map_err(|e| CliError::Usage(e.to_string()))?;
    let extractor_kind = match run.extractor.as_str() {
        "encoder" => ExtractorKind::Encoder,
        "grad_hist" | "grad-hist" => ExtractorKind::GradHist,
        other => return Err(CliError::Usage(format!("unknown extractor {other:?}"))),
    };
    let manifest = DatasetManifest::load(&run.manifest)?;
    let (mut predictor, encoder_ckpt): (Box<dyn NormalPredictor>, Checkpoint) =
        match (&run.checkpoint, &run.folds) {
            (_, Some(folds)) => {
                let (ckpts, assignment) = load_folds(folds)?;
                let enc = match &run.checkpoint {
                    Some(c) => load_checkpoint(c)?,
                    None => ckpts[0].clone(),
                };
                (Box::new(FoldPredictor::new(&ckpts, assignment)?), enc)
            }
            (Some(c), None) => {
                let ckpt = load_checkpoint(c)?;
                (Box::new(CheckpointPredictor::new(&ckpt)?), ckpt)
            }
            (None, None) => {
                return Err(CliError::Usage("--checkpoint or --folds is required".into()))
            }
        };
    let mut extractor = make_extractor(extractor_kind, Some(&encoder_ckpt))?;
    let mut opts = RecognitionOptions::new(grid, run.seed);
    opts.c = run.c;
    create_dir(&run.out)?;
    let report = run_recognition_eval(
        &manifest,
        predictor.as_mut(),
        extractor.as_mut(),
        &opts,
        Some(&run.out),
    )?;
    if run.svg {
        recognition_svgs(&report, &run.out)?;
    }
    write_run_record(&run.out, "eval-recognition", threads, run)?;
    print!("{}", report.to_csv());
    Ok(())
}

fn ambiguity_svgs(report: &AmbiguityReport, dir: &Path) -> Result<(), CliError> {
    for rep in [Representation::Color, Representation::Normal] {
        let mut by_object: Vec<Series> = Vec::new();
        for row in report.scatter.iter().filter(|r| r.representation == rep) {
            match by_object.iter_mut().find(|s| s.label == row.object_id) {
                Some(s) => s.points.push((row.pc1, row.pc2)),
                None => by_object.push(Series {
                    label: row.object_id.clone(),
                    points: vec![(row.pc1, row.pc2)],
                }),
            }
        }
        let svg = scatter_svg(&format!("{rep} images, PCA"), "PC1", "PC2", &by_object);
        write_file(&dir.join(format!("scatter_{rep}.svg")), &svg)?;
    }
    Ok(())
}

fn recognition_svgs(report: &RecognitionReport, dir: &Path) -> Result<(), CliError> {
    let mut kinds: Vec<DegradeKind> = report.rows.iter().map(|r| r.spec.kind()).collect();
    kinds.dedup();
    for kind in kinds {
        let series: Vec<Series> = [Representation::Color, Representation::Normal, Representation::Combined]
            .iter()
            .map(|&rep| Series {
                label: rep.to_string(),
                points: report
                    .rows
                    .iter()
                    .filter(|r| r.spec.kind() == kind && r.representation == rep)
                    .map(|r| (r.spec.amount(), r.f_score))
                    .collect(),
            })
            .collect();
        let svg = line_chart_svg(&format!("F-score under {kind}"), "amount", "macro F", &series);
        write_file(&dir.join(format!("recognition_{kind}.svg")), &svg)?;
    }
    Ok(())
}
