//! Predicts a normal image from a single photograph with a briefly trained
//! model, or with a checkpoint given on the command line.
//!
//! `cargo run --release --example predict_normal [checkpoint.ngck]`

use std::error::Error;

use normalforge::imaging::{encode_normal_rgb, save_png, NormalMap};
use normalforge::neural::{load_checkpoint, predict_normal, train_cgan_objects, TrainConfig};
use normalforge::photometric::{make_light_rig, synth_dataset, SurfaceParams};

fn main() -> Result<(), Box<dyn Error>> {
    let tmp = tempfile::tempdir()?;
    let rig = make_light_rig(8, 45.0)?;
    let params = SurfaceParams::default();
    let held = synth_dataset(99, 2, &rig, 64, 64, &params, &tmp.path().join("held"))?;
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
    let photo = held.load_image(0, 3)?;
    let predicted = predict_normal(&ckpt, &photo)?;
    let truth = held.load_normal(0)?.ok_or("ground truth missing")?;
    println!(
        "predicted {:.2} deg vs flat baseline {:.2} deg mean angular error",
        predicted.mean_angular_error_deg(&truth)?,
        NormalMap::flat(64, 64).mean_angular_error_deg(&truth)?
    );
    let out = tmp.path().join("predicted_normal.png");
    save_png(&encode_normal_rgb(&predicted), &out)?;
    println!("wrote {}", out.display());
    Ok(())
}
