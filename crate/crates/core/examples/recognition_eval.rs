//! Few-shot recognition under brightness and blur degradations with the
//! gradient-histogram extractor and a briefly trained predictor.
//!
//! `cargo run --release --example recognition_eval [checkpoint.ngck]`

use std::error::Error;

use normalforge::evaluation::{
    make_extractor, run_recognition_eval, CheckpointPredictor, DegradeKind, DegradeSpec,
    ExtractorKind, RecognitionOptions,
};
use normalforge::neural::{load_checkpoint, train_cgan_objects, TrainConfig};
use normalforge::photometric::{make_light_rig, synth_dataset, SurfaceParams};

fn main() -> Result<(), Box<dyn Error>> {
    let tmp = tempfile::tempdir()?;
    let rig = make_light_rig(8, 45.0)?;
    let params = SurfaceParams::default();
    let ckpt = match std::env::args().nth(1) {
        Some(path) => load_checkpoint(path.as_ref())?,
        None => {
            let train = synth_dataset(1, 8, &rig, 64, 64, &params, &tmp.path().join("train"))?;
            let cfg = TrainConfig {
                epochs: 3,
                ..TrainConfig::default()
            };
            train_cgan_objects(&train, None, &cfg, None, |_, _| {})?.checkpoint
        }
    };
    let eval = synth_dataset(2, 5, &rig, 64, 64, &params, &tmp.path().join("eval"))?;
    let grid = DegradeSpec::grid(&[DegradeKind::Brightness, DegradeKind::Blur], &[0.0, 0.4, 0.8])?;
    let mut predictor = CheckpointPredictor::new(&ckpt)?;
    let mut extractor = make_extractor(ExtractorKind::GradHist, None)?;
    let report = run_recognition_eval(
        &eval,
        &mut predictor,
        extractor.as_mut(),
        &RecognitionOptions::new(grid, 0),
        None,
    )?;
    print!("{}", report.to_csv());
    Ok(())
}
