//! Procedural relief surfaces standing in for scanned objects.
//!
//! A height field is assembled from Gaussian bumps and dents plus soft-edged
//! embossed rectangles, giving a tablet-relief look. Normals come from
//! central differences of the height field.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{render_lambertian, DatasetManifest, ImageEntry, LightRig, ObjectEntry, PhotometricError};
use crate::imaging::{encode_normal_rgb, save_png, AlbedoMap, NormalMap};

pub const DATASET_MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum AlbedoMode {
    /// One gray tone per object drawn from `tone`.
    Flat { tone: (f64, f64) },
    /// Base tone modulated by bilinear value noise on a `cells x cells` grid.
    Noise {
        tone: (f64, f64),
        amplitude: f64,
        cells: usize,
    },
}

/// Ranges sampled per object. Lengths are fractions of `min(width, height)`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SurfaceParams {
    /// Inclusive range of Gaussian bump count.
    pub bump_count: (usize, usize),
    /// Bump standard deviation.
    pub bump_sigma: (f64, f64),
    /// Peak height divided by the bump's sigma (controls maximum slope).
    pub bump_height: (f64, f64),
    /// Probability that a bump is a dent.
    pub dent_probability: f64,
    /// Inclusive range of embossed rectangle count.
    pub relief_count: (usize, usize),
    pub relief_height: (f64, f64),
    /// Logistic edge width of the rectangles.
    pub relief_softness: f64,
    pub albedo: AlbedoMode,
}

impl Default for SurfaceParams {
    fn default() -> Self {
        Self {
            bump_count: (4, 8),
            bump_sigma: (0.06, 0.16),
            bump_height: (0.5, 1.2),
            dent_probability: 0.0,
            relief_count: (0, 2),
            relief_height: (0.03, 0.06),
            relief_softness: 0.04,
            albedo: AlbedoMode::Flat { tone: (0.7, 0.85) },
        }
    }
}

impl SurfaceParams {
    /// No bumps or reliefs: a flat plate.
    pub fn flat() -> Self {
        Self {
            bump_count: (0, 0),
            relief_count: (0, 0),
            ..Self::default()
        }
    }
}

fn sample(rng: &mut ChaCha8Rng, range: (f64, f64)) -> f64 {
    if range.1 <= range.0 {
        range.0
    } else {
        rng.random_range(range.0..range.1)
    }
}

fn sample_count(rng: &mut ChaCha8Rng, range: (usize, usize)) -> usize {
    if range.1 <= range.0 {
        range.0
    } else {
        rng.random_range(range.0..=range.1)
    }
}

fn logistic(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Height field in pixel units, row-major.
fn height_field(rng: &mut ChaCha8Rng, w: usize, h: usize, p: &SurfaceParams) -> Vec<f64> {
    let scale = w.min(h) as f64;
    let mut z = vec![0.0; w * h];

    for _ in 0..sample_count(rng, p.bump_count) {
        let sigma = sample(rng, p.bump_sigma) * scale;
        let cx = rng.random_range(0.0..w as f64);
        let cy = rng.random_range(0.0..h as f64);
        let mut amp = sample(rng, p.bump_height) * sigma;
        if rng.random_bool(p.dent_probability.clamp(0.0, 1.0)) {
            amp = -amp;
        }
        let inv = 1.0 / (2.0 * sigma * sigma);
        for y in 0..h {
            for x in 0..w {
                let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                z[y * w + x] += amp * (-(dx * dx + dy * dy) * inv).exp();
            }
        }
    }

    for _ in 0..sample_count(rng, p.relief_count) {
        let x0 = rng.random_range(0.1..0.6) * w as f64;
        let x1 = x0 + rng.random_range(0.2..0.4) * w as f64;
        let y0 = rng.random_range(0.1..0.6) * h as f64;
        let y1 = y0 + rng.random_range(0.2..0.4) * h as f64;
        let amp = sample(rng, p.relief_height) * scale;
        let s = (p.relief_softness * scale).max(1e-3);
        let boxed = |u: f64, a: f64, b: f64| logistic((u - a) / s) - logistic((u - b) / s);
        for y in 0..h {
            let by = boxed(y as f64, y0, y1);
            for x in 0..w {
                z[y * w + x] += amp * boxed(x as f64, x0, x1) * by;
            }
        }
    }
    z
}

fn normals_from_heights(z: &[f64], w: usize, h: usize) -> Vec<[f64; 3]> {
    let at = |x: usize, y: usize| z[y * w + x];
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (xl, xr) = (x.saturating_sub(1), (x + 1).min(w - 1));
            let (yu, yd) = (y.saturating_sub(1), (y + 1).min(h - 1));
            let dzdx = (at(xr, y) - at(xl, y)) / (xr - xl) as f64;
            let dzdy = (at(x, yd) - at(x, yu)) / (yd - yu) as f64;
            let len = (dzdx * dzdx + dzdy * dzdy + 1.0).sqrt();
            out.push([-dzdx / len, -dzdy / len, 1.0 / len]);
        }
    }
    out
}

fn albedo_field(rng: &mut ChaCha8Rng, w: usize, h: usize, mode: &AlbedoMode) -> Vec<f64> {
    match mode {
        AlbedoMode::Flat { tone } => vec![sample(rng, *tone); w * h],
        AlbedoMode::Noise {
            tone,
            amplitude,
            cells,
        } => {
            let base = sample(rng, *tone);
            let g = (*cells).max(1) + 1;
            let grid: Vec<f64> = (0..g * g).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut out = Vec::with_capacity(w * h);
            for y in 0..h {
                for x in 0..w {
                    let gx = x as f64 / (w - 1).max(1) as f64 * (g - 1) as f64;
                    let gy = y as f64 / (h - 1).max(1) as f64 * (g - 1) as f64;
                    let (x0, y0) = ((gx as usize).min(g - 2), (gy as usize).min(g - 2));
                    let (tx, ty) = (gx - x0 as f64, gy - y0 as f64);
                    let v = |i: usize, j: usize| grid[j * g + i];
                    let n = (v(x0, y0) * (1.0 - tx) + v(x0 + 1, y0) * tx) * (1.0 - ty)
                        + (v(x0, y0 + 1) * (1.0 - tx) + v(x0 + 1, y0 + 1) * tx) * ty;
                    out.push((base + amplitude * n).max(0.0));
                }
            }
            out
        }
    }
}

/// Deterministic synthetic relief surface: identical seeds give bit-identical
/// normal and albedo maps. The albedo has three equal channels and the mask is
/// fully valid.
pub fn synth_surface(
    seed: u64,
    width: usize,
    height: usize,
    params: &SurfaceParams,
) -> Result<(NormalMap, AlbedoMap), PhotometricError> {
    if width < 8 || height < 8 {
        return Err(PhotometricError::DegenerateDimensions(width, height));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = height_field(&mut rng, width, height, params);
    let normals = normals_from_heights(&z, width, height);
    let gray = albedo_field(&mut rng, width, height, &params.albedo);
    let nm = NormalMap::from_parts(width, height, normals, vec![true; width * height])?;
    let rgb = gray.iter().flat_map(|&k| [k, k, k]).collect();
    Ok((nm, AlbedoMap::from_vec(width, height, 3, rgb)?))
}

/// Renders `n_objects` synthetic surfaces under every rig light and writes
/// the PNGs plus `manifest.json` into `out_dir`.
///
/// Layout: `obj_NNN/light_KK.png`, `obj_NNN/normal.png`, `obj_NNN/albedo.png`.
pub fn synth_dataset(
    seed: u64,
    n_objects: usize,
    rig: &LightRig,
    width: usize,
    height: usize,
    params: &SurfaceParams,
    out_dir: &Path,
) -> Result<DatasetManifest, PhotometricError> {
    if n_objects < 2 {
        return Err(PhotometricError::TooFewObjects {
            needed: 2,
            got: n_objects,
        });
    }
    let io = |path: &Path, source| PhotometricError::Io {
        path: path.to_path_buf(),
        source,
    };
    std::fs::create_dir_all(out_dir).map_err(|e| io(out_dir, e))?;
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let mut objects = Vec::with_capacity(n_objects);
    for i in 0..n_objects {
        let object_seed: u64 = seeds.random();
        let (nm, alb) = synth_surface(object_seed, width, height, params)?;
        let id = format!("obj_{i:03}");
        let dir = out_dir.join(&id);
        std::fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;

        let mut images = Vec::with_capacity(rig.len());
        for (k, light) in rig.lights().iter().enumerate() {
            let rel = format!("{id}/light_{k:02}.png");
            save_png(&render_lambertian(&nm, &alb, light)?, out_dir.join(&rel))?;
            images.push(ImageEntry {
                path: rel,
                light: light.vector(),
            });
        }
        let normal = format!("{id}/normal.png");
        save_png(&encode_normal_rgb(&nm), out_dir.join(&normal))?;
        let albedo = format!("{id}/albedo.png");
        save_png(&alb.to_image(), out_dir.join(&albedo))?;
        objects.push(ObjectEntry {
            id,
            images,
            normal: Some(normal),
            albedo: Some(albedo),
        });
    }
    let manifest = DatasetManifest::new(objects, out_dir);
    manifest.save(out_dir.join(DATASET_MANIFEST_NAME))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_params_give_flat_normals() {
        let (nm, alb) = synth_surface(3, 16, 12, &SurfaceParams::flat()).unwrap();
        assert!(nm.normals().iter().all(|n| *n == [0.0, 0.0, 1.0]));
        assert_eq!(nm.valid_count(), 16 * 12);
        assert_eq!(alb.channels(), 3);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let p = SurfaceParams {
            albedo: AlbedoMode::Noise {
                tone: (0.5, 0.7),
                amplitude: 0.1,
                cells: 4,
            },
            ..SurfaceParams::default()
        };
        let a = synth_surface(42, 32, 32, &p).unwrap();
        let b = synth_surface(42, 32, 32, &p).unwrap();
        assert_eq!(a, b);
        let c = synth_surface(43, 32, 32, &p).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn centered_bump_points_outward() {
        // analytic gradient of a Gaussian bump: -dz/dx has the sign of (x - cx)
        let (w, h) = (33usize, 33usize);
        let sigma = 5.0;
        let z: Vec<f64> = (0..w * h)
            .map(|i| {
                let (x, y) = ((i % w) as f64 - 16.0, (i / w) as f64 - 16.0);
                4.0 * (-(x * x + y * y) / (2.0 * sigma * sigma)).exp()
            })
            .collect();
        let n = normals_from_heights(&z, w, h);
        let at = |x: usize, y: usize| n[y * w + x];
        assert!(at(24, 16)[0] > 0.0 && at(24, 16)[1].abs() < 1e-12);
        assert!(at(8, 16)[0] < 0.0);
        assert!(at(16, 24)[1] > 0.0 && at(16, 24)[0].abs() < 1e-12);
        assert!(at(16, 8)[1] < 0.0);
        assert_eq!(at(16, 16), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn tiny_surfaces_are_rejected() {
        assert!(synth_surface(0, 7, 8, &SurfaceParams::default()).is_err());
    }
}
