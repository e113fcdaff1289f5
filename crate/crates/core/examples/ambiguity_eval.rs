//! SSIM-to-mean and PCA scatter comparison of color photographs and normal
//! images. Uses ground-truth normal images as the ideal predictor when no
//! checkpoint is given.
//!
//! `cargo run --release --example ambiguity_eval [checkpoint.ngck]`

use std::error::Error;

use normalforge::evaluation::{
    run_ambiguity_eval, CheckpointPredictor, EvalError, NormalPredictor, Representation,
};
use normalforge::imaging::{encode_normal_rgb, Image};
use normalforge::neural::load_checkpoint;
use normalforge::photometric::{make_light_rig, synth_dataset, DatasetManifest, SurfaceParams};

/// Returns each object's encoded ground-truth normal image.
struct GroundTruth(DatasetManifest);

impl NormalPredictor for GroundTruth {
    fn predict_image(&mut self, id: &str, _: &Image, _: u64) -> Result<Image, EvalError> {
        let o = self.0.object_index(id).ok_or(EvalError::InvalidArgument(id.into()))?;
        let nm = self.0.load_normal(o)?.ok_or(EvalError::InvalidArgument(id.into()))?;
        Ok(encode_normal_rgb(&nm))
    }
}

fn main() -> Result<(), Box<dyn Error>> {
    let tmp = tempfile::tempdir()?;
    let rig = make_light_rig(8, 45.0)?;
    let manifest = synth_dataset(5, 6, &rig, 64, 64, &SurfaceParams::default(), tmp.path())?;
    let mut predictor: Box<dyn NormalPredictor> = match std::env::args().nth(1) {
        Some(path) => Box::new(CheckpointPredictor::new(&load_checkpoint(path.as_ref())?)?),
        None => Box::new(GroundTruth(manifest.clone())),
    };
    let report = run_ambiguity_eval(&manifest, predictor.as_mut(), 0, Some(tmp.path()))?;
    for rep in [Representation::Color, Representation::Normal] {
        let s = report.summary_for(rep).ok_or("missing summary")?;
        println!(
            "{rep:>6}: SSIM to object mean min {:.3} q1 {:.3} median {:.3} q3 {:.3} max {:.3}",
            s.min, s.q1, s.median, s.q3, s.max
        );
    }
    Ok(())
}
