use super::linalg3::{condition_1norm, gram, inverse, mul_vec};
use super::{CapturedStack, PhotometricError, MAX_CONDITION};
use crate::imaging::{camera_facing_unit, to_grayscale, AlbedoMap, Image, NormalMap, NEUTRAL_NORMAL};

/// Luminance at or below this is treated as shadowed and ignored.
pub const SHADOW_THRESHOLD: f64 = 0.02;

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub shadow_threshold: f64,
    /// Per-pixel Gram matrices with a larger condition estimate are rejected.
    pub max_condition: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            shadow_threshold: SHADOW_THRESHOLD,
            max_condition: MAX_CONDITION,
        }
    }
}

/// Recovers per-pixel normals and albedo with [`SolveOptions::default`].
pub fn solve_normals(stack: &CapturedStack) -> Result<(NormalMap, AlbedoMap), PhotometricError> {
    solve_normals_with(stack, &SolveOptions::default())
}

/// Least-squares Lambertian inversion.
///
/// For each pixel the unshadowed luminance observations `I_i` are fitted to
/// `L_i . (k n)` through the normal equations. The direction of the solution
/// is the normal (forced camera-facing), its length the luminance albedo.
/// Each color channel's albedo is then the least-squares scale of that
/// channel against the shading `max(0, L_i . n)`. Pixels with fewer than
/// three usable observations, an ill-conditioned subset, or `|k n| < 1e-6`
/// are marked invalid.
pub fn solve_normals_with(
    stack: &CapturedStack,
    opts: &SolveOptions,
) -> Result<(NormalMap, AlbedoMap), PhotometricError> {
    let first = &stack.images()[0];
    let (w, h, channels) = (first.width(), first.height(), first.channels());
    if stack.images().iter().any(|img| img.channels() != channels) {
        return Err(PhotometricError::SizeMismatch);
    }
    let lights: Vec<[f64; 3]> = stack.rig().lights().iter().map(|l| l.vector()).collect();
    let gray: Vec<Image> = stack.images().iter().map(to_grayscale).collect();

    let mut normals = Vec::with_capacity(w * h);
    let mut mask = Vec::with_capacity(w * h);
    let mut albedo = Vec::with_capacity(w * h * channels);
    let mut used: Vec<usize> = Vec::with_capacity(lights.len());

    for y in 0..h {
        for x in 0..w {
            used.clear();
            used.extend((0..lights.len()).filter(|&i| gray[i].get(x, y, 0) > opts.shadow_threshold));
            let solved = solve_pixel(&lights, &used, |i| gray[i].get(x, y, 0), opts.max_condition);
            match solved {
                Some(n) => {
                    let shade: Vec<f64> = used
                        .iter()
                        .map(|&i| dot(lights[i], n).max(0.0))
                        .collect();
                    let ss: f64 = shade.iter().map(|s| s * s).sum();
                    for c in 0..channels {
                        let k = if ss > 0.0 {
                            used.iter()
                                .zip(&shade)
                                .map(|(&i, s)| stack.images()[i].get(x, y, c) * s)
                                .sum::<f64>()
                                / ss
                        } else {
                            0.0
                        };
                        albedo.push(k.max(0.0));
                    }
                    normals.push(n);
                    mask.push(true);
                }
                None => {
                    normals.push(NEUTRAL_NORMAL);
                    mask.push(false);
                    albedo.extend(std::iter::repeat_n(0.0, channels));
                }
            }
        }
    }
    Ok((
        NormalMap::from_parts(w, h, normals, mask)?,
        AlbedoMap::from_vec(w, h, channels, albedo)?,
    ))
}

fn solve_pixel(
    lights: &[[f64; 3]],
    used: &[usize],
    intensity: impl Fn(usize) -> f64,
    max_condition: f64,
) -> Option<[f64; 3]> {
    if used.len() < 3 {
        return None;
    }
    let g = gram(used.iter().map(|&i| &lights[i]));
    if !(condition_1norm(&g) <= max_condition) {
        return None;
    }
    let mut b = [0.0; 3];
    for &i in used {
        let v = intensity(i);
        for (bj, lj) in b.iter_mut().zip(lights[i]) {
            *bj += v * lj;
        }
    }
    let kn = mul_vec(&inverse(&g)?, b);
    let k = (kn[0] * kn[0] + kn[1] * kn[1] + kn[2] * kn[2]).sqrt();
    if !(k >= 1e-6) {
        return None;
    }
    camera_facing_unit(kn)
}

#[inline]
fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
