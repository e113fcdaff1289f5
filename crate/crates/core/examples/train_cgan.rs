//! Trains the conditional GAN on a freshly rendered dataset and writes the
//! checkpoint plus the per-step loss log.
//!
//! `cargo run --release --example train_cgan [out_dir] [epochs]`

use std::error::Error;
use std::path::PathBuf;

use normalforge::neural::{train_cgan_objects, TrainConfig, CHECKPOINT_FILE, LOSS_LOG_FILE};
use normalforge::photometric::{make_light_rig, synth_dataset, SurfaceParams};

fn main() -> Result<(), Box<dyn Error>> {
    let tmp = tempfile::tempdir()?;
    let mut args = std::env::args().skip(1);
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| tmp.path().into());
    let epochs = args.next().map(|s| s.parse()).transpose()?.unwrap_or(5);
    let rig = make_light_rig(8, 45.0)?;
    let manifest = synth_dataset(7, 12, &rig, 64, 64, &SurfaceParams::default(), &out.join("data"))?;
    let cfg = TrainConfig {
        epochs,
        ..TrainConfig::default()
    };
    let outcome = train_cgan_objects(&manifest, None, &cfg, Some(&out), |epoch, cos| {
        println!("epoch {epoch}: mean cosine loss {cos:.5}");
    })?;
    println!(
        "{} optimizer steps; wrote {} and {}",
        outcome.log.len(),
        out.join(CHECKPOINT_FILE).display(),
        out.join(LOSS_LOG_FILE).display()
    );
    Ok(())
}
