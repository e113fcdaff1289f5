//! Multi-light capture model: light calibration, per-pixel least-squares
//! normal/albedo recovery, the Lambertian renderer, and a procedural surface
//! synthesizer that stands in for a physical scanner.

mod calibrate;
mod linalg3;
mod manifest;
mod render;
mod solve;
mod synth;

pub use calibrate::calibrate_light_from_sphere;
pub use manifest::{DatasetManifest, ImageEntry, ObjectEntry};
pub use render::render_lambertian;
pub use solve::{solve_normals, solve_normals_with, SolveOptions, SHADOW_THRESHOLD};
pub use synth::{
    synth_dataset, synth_surface, AlbedoMode, SurfaceParams, DATASET_MANIFEST_NAME,
};

use crate::imaging::{Image, ImagingError};
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum PhotometricError {
    #[error("at least three light directions are required, got {0}")]
    TooFewLights(usize),
    #[error("light direction {0:?} is not a unit vector in front of the surface")]
    InvalidLight([f64; 3]),
    #[error("light rig is rank deficient (condition estimate {0:.3e})")]
    RankDeficient(f64),
    #[error("elevation must lie strictly between 0 and 90 degrees, got {0}")]
    InvalidElevation(f64),
    #[error("stack has {images} images for {lights} lights")]
    ImageCountMismatch { images: usize, lights: usize },
    #[error("image sizes differ within the stack")]
    SizeMismatch,
    #[error("calibration circle does not fit inside the image")]
    CircleOutsideImage,
    #[error("highlight lies on the sphere rim; calibration is degenerate")]
    DegenerateCalibration,
    #[error("surface dimensions {0}x{1} are too small (minimum 8x8)")]
    DegenerateDimensions(usize, usize),
    #[error("need at least {needed} objects, got {got}")]
    TooFewObjects { needed: usize, got: usize },
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}

/// Unit vector from the surface toward a light; the camera looks down `-z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightDirection([f64; 3]);

impl LightDirection {
    /// Normalizes `v`; rejects zero-length vectors and lights at or behind
    /// the surface plane.
    pub fn new(v: [f64; 3]) -> Result<Self, PhotometricError> {
        let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !len.is_finite() || len < 1e-12 || v[2] / len <= 0.0 {
            return Err(PhotometricError::InvalidLight(v));
        }
        Ok(Self([v[0] / len, v[1] / len, v[2] / len]))
    }

    /// Accepts `v` only if it is already unit length within `tol`.
    pub fn from_unit(v: [f64; 3], tol: f64) -> Result<Self, PhotometricError> {
        let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if (len - 1.0).abs() > tol {
            return Err(PhotometricError::InvalidLight(v));
        }
        Self::new(v)
    }

    pub fn vector(&self) -> [f64; 3] {
        self.0
    }

    #[inline]
    pub fn dot(&self, n: [f64; 3]) -> f64 {
        self.0[0] * n[0] + self.0[1] * n[1] + self.0[2] * n[2]
    }
}

/// Ordered set of at least three lights whose directions span 3-D space.
#[derive(Debug, Clone, PartialEq)]
pub struct LightRig {
    lights: Vec<LightDirection>,
}

/// Gram-matrix condition estimates above this count as rank deficient.
pub const MAX_CONDITION: f64 = 1e8;

impl LightRig {
    pub fn new(lights: Vec<LightDirection>) -> Result<Self, PhotometricError> {
        if lights.len() < 3 {
            return Err(PhotometricError::TooFewLights(lights.len()));
        }
        let dirs: Vec<[f64; 3]> = lights.iter().map(|l| l.vector()).collect();
        let cond = linalg3::condition_1norm(&linalg3::gram(dirs.iter()));
        if !(cond <= MAX_CONDITION) {
            return Err(PhotometricError::RankDeficient(cond));
        }
        Ok(Self { lights })
    }

    /// Lights on a cone of constant elevation, azimuths `360 / count` degrees
    /// apart starting at 0.
    pub fn ring(count: usize, elevation_deg: f64) -> Result<Self, PhotometricError> {
        make_light_rig(count, elevation_deg)
    }

    pub fn lights(&self) -> &[LightDirection] {
        &self.lights
    }

    pub fn len(&self) -> usize {
        self.lights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lights.is_empty()
    }
}

pub fn make_light_rig(count: usize, elevation_deg: f64) -> Result<LightRig, PhotometricError> {
    if count < 3 {
        return Err(PhotometricError::TooFewLights(count));
    }
    if !(elevation_deg > 0.0 && elevation_deg < 90.0) {
        return Err(PhotometricError::InvalidElevation(elevation_deg));
    }
    let e = elevation_deg.to_radians();
    let lights = (0..count)
        .map(|i| {
            let a = (i as f64 * 360.0 / count as f64).to_radians();
            LightDirection::new([e.cos() * a.cos(), e.cos() * a.sin(), e.sin()])
        })
        .collect::<Result<Vec<_>, _>>()?;
    LightRig::new(lights)
}

/// One image per rig light, all the same size, for a single object.
#[derive(Debug, Clone)]
pub struct CapturedStack {
    images: Vec<Image>,
    rig: LightRig,
    object_id: String,
}

impl CapturedStack {
    pub fn new(
        images: Vec<Image>,
        rig: LightRig,
        object_id: impl Into<String>,
    ) -> Result<Self, PhotometricError> {
        if images.len() != rig.len() {
            return Err(PhotometricError::ImageCountMismatch {
                images: images.len(),
                lights: rig.len(),
            });
        }
        if images.windows(2).any(|w| !w[0].same_size(&w[1])) {
            return Err(PhotometricError::SizeMismatch);
        }
        Ok(Self {
            images,
            rig,
            object_id: object_id.into(),
        })
    }

    pub fn images(&self) -> &[Image] {
        &self.images
    }

    pub fn rig(&self) -> &LightRig {
        &self.rig
    }

    pub fn object_id(&self) -> &str {
        &self.object_id
    }
}
