use std::path::Path;
use std::process::{Command, Output};

use normalforge::cli::FoldPlan;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_normalforge"))
        .args(args)
        .env_remove("NORMALFORGE_SEED")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path, objects: &str, lights: &str) -> std::path::PathBuf {
    let out = dir.join("data");
    let o = run(&["synth", "--objects", objects, "--size", "32", "--lights", lights, "--seed", "3", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    out.join("manifest.json")
}

#[test]
fn exit_codes_follow_the_error_class() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["synth", "--objects", "many"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["synth", "--lights", "2", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("three"));
}

#[test]
fn missing_input_is_a_runtime_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("no_such_photo.png");
    let o = run(&["predict", "--checkpoint", s(&dir.path().join("x.ngck")), "--image", s(&missing), "--out", s(&dir.path().join("o.png"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("x.ngck"));
    let manifest = synth(dir.path(), "2", "4");
    let o = run(&["reconstruct", "--manifest", s(&manifest.with_file_name("nope.json"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.json"));
}

#[test]
fn run_record_holds_resolved_options_and_config_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"objects": 3, "size": 16, "seed": 9}"#).unwrap();
    let out = dir.path().join("d");
    let o = run(&["--config", s(&cfg), "--threads", "4", "synth", "--seed", "5", "--lights", "4", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let record: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(record["command"], "synth");
    assert_eq!(record["threads"], 4);
    assert_eq!(record["options"]["objects"], 3);
    assert_eq!(record["options"]["size"], 16);
    assert_eq!(record["options"]["seed"], 5);
    assert_eq!(record["options"]["lights"], 4);

    std::fs::write(&cfg, r#"{"objcts": 3}"#).unwrap();
    let o = run(&["--config", s(&cfg), "synth", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
}

const TINY: [&str; 8] = ["--epochs", "1", "--image-size", "32", "--base-channels", "4", "--depth", "3"];

#[test]
fn two_fold_training_never_predicts_a_training_object() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path(), "5", "4");
    let out = dir.path().join("folds");
    let mut args = vec!["train", "--manifest", s(&manifest), "--out", s(&out), "--split-folds", "2"];
    args.extend(TINY);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let plan = FoldPlan::load(&out.join("folds.json")).unwrap();
    assert_eq!(plan.folds.len(), 2);
    let mut predicted: Vec<String> = Vec::new();
    for f in &plan.folds {
        assert!(out.join(&f.checkpoint).exists());
        assert!(f.predict_objects.iter().all(|id| !f.train_objects.contains(id)));
        assert_eq!(f.train_objects.len() + f.predict_objects.len(), 5);
        predicted.extend(f.predict_objects.iter().cloned());
    }
    predicted.sort();
    let expected: Vec<String> = (0..5).map(|i| format!("obj_{i:03}")).collect();
    assert_eq!(predicted, expected);
}

#[test]
fn full_pipeline_writes_the_expected_rows() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path(), "3", "4");
    let rec = dir.path().join("rec");
    assert_eq!(run(&["reconstruct", "--manifest", s(&manifest), "--out", s(&rec)]).status.code(), Some(0));
    let csv = std::fs::read_to_string(rec.join("reconstruction.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);

    let model = dir.path().join("model");
    let mut args = vec!["train", "--manifest", s(&manifest), "--out", s(&model)];
    args.extend(TINY);
    assert_eq!(run(&args).status.code(), Some(0));
    let losses = std::fs::read_to_string(model.join("losses.csv")).unwrap();
    assert_eq!(losses.lines().count(), 1 + 12);
    let ckpt = model.join("checkpoint.ngck");

    let photo = manifest.with_file_name("obj_000").join("light_00.png");
    let pred = dir.path().join("pred").join("n.png");
    assert_eq!(run(&["predict", "--checkpoint", s(&ckpt), "--image", s(&photo), "--out", s(&pred)]).status.code(), Some(0));
    assert!(pred.exists());

    let amb = dir.path().join("amb");
    let o = run(&["eval-ambiguity", "--manifest", s(&manifest), "--checkpoint", s(&ckpt), "--out", s(&amb), "--svg"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = std::fs::read_to_string(amb.join("scatter.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 2 * 3 * 4);
    assert!(amb.join("scatter_normal.svg").exists());

    let rg = dir.path().join("recog");
    let o = run(&[
        "eval-recognition", "--manifest", s(&manifest), "--checkpoint", s(&ckpt), "--out", s(&rg),
        "--kinds", "blur,contrast", "--amounts", "0,0.5,1", "--extractor", "grad_hist",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = std::fs::read_to_string(rg.join("recognition.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 2 * 3 * 3);
    assert!(rows.starts_with("kind,amount,representation,f_score\n"));
}
