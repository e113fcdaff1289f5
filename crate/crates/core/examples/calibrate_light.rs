//! Estimates light directions from the highlight on a rendered mirror ball.
//!
//! `cargo run --example calibrate_light`

use std::error::Error;

use normalforge::imaging::Image;
use normalforge::photometric::{calibrate_light_from_sphere, make_light_rig, LightDirection};

/// A chrome ball of radius `r` centred in a `size` image, lit by `light`:
/// the brightest pixel is where the surface mirrors the light into the camera.
fn mirror_ball(size: usize, r: f64, light: &LightDirection) -> Result<Image, Box<dyn Error>> {
    let c = (size as f64 - 1.0) / 2.0;
    let l = light.vector();
    let img = Image::from_fn(size, size, 3, |x, y, _| {
        let (nx, ny) = ((x as f64 - c) / r, (y as f64 - c) / r);
        let nz2 = 1.0 - nx * nx - ny * ny;
        if nz2 <= 0.0 {
            return 0.0;
        }
        let nz = nz2.sqrt();
        // reflect the view vector (0, 0, 1) about n and compare with the light
        let rv = [2.0 * nz * nx, 2.0 * nz * ny, 2.0 * nz * nz - 1.0];
        let cos = rv[0] * l[0] + rv[1] * l[1] + rv[2] * l[2];
        0.1 + 0.9 * cos.max(0.0).powi(200)
    })?;
    Ok(img)
}

fn main() -> Result<(), Box<dyn Error>> {
    let rig = make_light_rig(8, 60.0)?;
    for (i, light) in rig.lights().iter().enumerate() {
        let img = mirror_ball(201, 90.0, light)?;
        let est = calibrate_light_from_sphere(&img, (100.0, 100.0), 90.0)?;
        let (t, e) = (light.vector(), est.vector());
        let err = (t[0] * e[0] + t[1] * e[1] + t[2] * e[2]).clamp(-1.0, 1.0).acos().to_degrees();
        println!(
            "light {i}: true [{:+.3} {:+.3} {:+.3}] estimated [{:+.3} {:+.3} {:+.3}] error {err:.2} deg",
            t[0], t[1], t[2], e[0], e[1], e[2]
        );
    }
    Ok(())
}
