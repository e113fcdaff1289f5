//! Renders a small synthetic dataset, then recovers normals and albedo from
//! each object's eight-light stack and compares against ground truth.
//!
//! `cargo run --example synth_and_reconstruct [out_dir]`

use std::error::Error;
use std::path::PathBuf;

use normalforge::imaging::{encode_normal_rgb, save_png};
use normalforge::photometric::{make_light_rig, solve_normals, synth_dataset, SurfaceParams};

fn main() -> Result<(), Box<dyn Error>> {
    let tmp = tempfile::tempdir()?;
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| tmp.path().into());
    let rig = make_light_rig(8, 45.0)?;
    let manifest = synth_dataset(42, 3, &rig, 96, 96, &SurfaceParams::default(), &out)?;
    for (o, obj) in manifest.objects.iter().enumerate() {
        let (normals, albedo) = solve_normals(&manifest.load_stack(o)?)?;
        let truth = manifest.load_normal(o)?.ok_or("ground truth missing")?;
        println!(
            "{}: {} valid pixels, mean angular error {:.3} deg",
            obj.id,
            normals.valid_count(),
            normals.mean_angular_error_deg(&truth)?
        );
        save_png(&encode_normal_rgb(&normals), out.join(format!("{}_normal.png", obj.id)))?;
        save_png(&albedo.to_image(), out.join(format!("{}_albedo.png", obj.id)))?;
    }
    println!("outputs in {}", out.display());
    Ok(())
}
