//! Pixel containers and the raster plumbing shared by the rest of the crate.
//!
//! Everything here is pure: the same input always yields the same output
//! samples, and every container is `Send + Sync`.
//!
//! Coordinate convention used crate-wide: `x` grows along columns, `y` grows
//! along rows, `z` points from the surface toward the camera.

mod codec;
mod png_io;
mod transform;

pub use codec::{decode_normal_rgb, encode_normal_rgb};
pub use png_io::{load_png, quantize_sample, save_png};
pub use transform::{
    gaussian_blur, gaussian_kernel, resize_bilinear, rotate_translate, to_grayscale,
    LUMA_WEIGHTS,
};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum ImagingError {
    #[error("file not found: {0}")]
    NotFound(PathBuf),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported PNG bit depth {0} (only 8-bit is supported)")]
    UnsupportedBitDepth(u8),
    #[error("unsupported PNG color type {0}")]
    UnsupportedColorType(String),
    #[error("PNG decode error: {0}")]
    Decode(String),
    #[error("PNG encode error: {0}")]
    Encode(String),
    #[error("invalid dimensions {width}x{height}x{channels}")]
    InvalidDimensions {
        width: usize,
        height: usize,
        channels: usize,
    },
    #[error("expected {expected} channels, found {found}")]
    ChannelCount { expected: usize, found: usize },
    #[error("sample buffer holds {found} values, expected {expected}")]
    DataLength { expected: usize, found: usize },
    #[error("sample {value} at index {index} is outside [0, 1] or not finite")]
    SampleOutOfRange { index: usize, value: f64 },
    #[error("normal at index {index} is not a camera-facing unit vector")]
    InvalidNormal { index: usize },
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
}

/// Row-major raster of samples in `[0, 1]`, interleaved by channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

fn check_dims(width: usize, height: usize, channels: usize) -> Result<(), ImagingError> {
    if width == 0 || height == 0 || !(channels == 1 || channels == 3) {
        return Err(ImagingError::InvalidDimensions {
            width,
            height,
            channels,
        });
    }
    Ok(())
}

impl Image {
    pub fn filled(
        width: usize,
        height: usize,
        channels: usize,
        value: f64,
    ) -> Result<Self, ImagingError> {
        check_dims(width, height, channels)?;
        Ok(Self {
            width,
            height,
            channels,
            data: vec![clamp_unit(value); width * height * channels],
        })
    }

    /// Wraps an existing buffer, rejecting samples outside `[0, 1]`.
    pub fn from_vec(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<f64>,
    ) -> Result<Self, ImagingError> {
        check_dims(width, height, channels)?;
        let expected = width * height * channels;
        if data.len() != expected {
            return Err(ImagingError::DataLength {
                expected,
                found: data.len(),
            });
        }
        if let Some((index, &value)) = data
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && (0.0..=1.0).contains(*v)))
        {
            return Err(ImagingError::SampleOutOfRange { index, value });
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Builds an image from a per-sample function; results are clamped into
    /// `[0, 1]` and non-finite values become 0.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self, ImagingError> {
        check_dims(width, height, channels)?;
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(clamp_unit(f(x, y, c)));
                }
            }
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub(crate) fn from_vec_clamped(
        width: usize,
        height: usize,
        channels: usize,
        mut data: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(data.len(), width * height * channels);
        for v in &mut data {
            *v = clamp_unit(*v);
        }
        Self {
            width,
            height,
            channels,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    /// Applies `f` to every sample, clamping the result.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        Self::from_vec_clamped(
            self.width,
            self.height,
            self.channels,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Expands a 1-channel image to 3 identical channels; 3-channel input is cloned.
    pub fn to_rgb(&self) -> Self {
        if self.channels == 3 {
            return self.clone();
        }
        let data = self.data.iter().flat_map(|&v| [v, v, v]).collect();
        Self {
            width: self.width,
            height: self.height,
            channels: 3,
            data,
        }
    }

    pub fn same_size(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }
}

#[inline]
fn clamp_unit(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

/// Neutral filler stored at mask-invalid pixels.
pub const NEUTRAL_NORMAL: [f64; 3] = [0.0, 0.0, 1.0];

/// Per-pixel unit normals facing the camera, with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalMap {
    width: usize,
    height: usize,
    normals: Vec<[f64; 3]>,
    mask: Vec<bool>,
}

impl NormalMap {
    /// A fully valid map of `(0, 0, 1)` normals.
    pub fn flat(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            normals: vec![NEUTRAL_NORMAL; width * height],
            mask: vec![true; width * height],
        }
    }

    /// Validates every masked pixel and overwrites unmasked ones with the
    /// neutral filler.
    pub fn from_parts(
        width: usize,
        height: usize,
        mut normals: Vec<[f64; 3]>,
        mask: Vec<bool>,
    ) -> Result<Self, ImagingError> {
        let n = width * height;
        if normals.len() != n || mask.len() != n {
            return Err(ImagingError::DataLength {
                expected: n,
                found: normals.len().min(mask.len()),
            });
        }
        for (index, (v, &valid)) in normals.iter_mut().zip(&mask).enumerate() {
            if !valid {
                *v = NEUTRAL_NORMAL;
                continue;
            }
            let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if !len.is_finite() || (len - 1.0).abs() > 1e-6 || v[2] < 0.0 {
                return Err(ImagingError::InvalidNormal { index });
            }
        }
        Ok(Self {
            width,
            height,
            normals,
            mask,
        })
    }

    /// Normalizes each vector, clamps `z` to be non-negative, and marks
    /// degenerate vectors invalid.
    pub fn from_raw(width: usize, height: usize, raw: &[[f64; 3]]) -> Self {
        let mut normals = Vec::with_capacity(raw.len());
        let mut mask = Vec::with_capacity(raw.len());
        for v in raw {
            match camera_facing_unit(*v) {
                Some(n) => {
                    normals.push(n);
                    mask.push(true);
                }
                None => {
                    normals.push(NEUTRAL_NORMAL);
                    mask.push(false);
                }
            }
        }
        Self {
            width,
            height,
            normals,
            mask,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn normals(&self) -> &[[f64; 3]] {
        &self.normals
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn normal(&self, x: usize, y: usize) -> [f64; 3] {
        self.normals[y * self.width + x]
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.mask[y * self.width + x]
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Per-pixel angle in degrees to `other`; `None` where either mask is invalid.
    pub fn angular_errors_deg(&self, other: &NormalMap) -> Result<Vec<Option<f64>>, ImagingError> {
        if self.width != other.width || self.height != other.height {
            return Err(ImagingError::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(self
            .normals
            .iter()
            .zip(&other.normals)
            .zip(self.mask.iter().zip(&other.mask))
            .map(|((a, b), (&ma, &mb))| (ma && mb).then(|| angle_between_deg(*a, *b)))
            .collect())
    }

    /// Mean angular error in degrees over pixels valid in both maps.
    pub fn mean_angular_error_deg(&self, other: &NormalMap) -> Result<f64, ImagingError> {
        let errs = self.angular_errors_deg(other)?;
        let (sum, count) = errs
            .iter()
            .flatten()
            .fold((0.0, 0usize), |(s, c), e| (s + e, c + 1));
        Ok(if count == 0 { 0.0 } else { sum / count as f64 })
    }
}

/// Unit vector with `z >= 0`, or `None` for zero-length / horizon-only input.
pub(crate) fn camera_facing_unit(v: [f64; 3]) -> Option<[f64; 3]> {
    let z = v[2].max(0.0);
    let len = (v[0] * v[0] + v[1] * v[1] + z * z).sqrt();
    if !len.is_finite() || len < 1e-12 {
        return None;
    }
    Some([v[0] / len, v[1] / len, z / len])
}

pub fn angle_between_deg(a: [f64; 3], b: [f64; 3]) -> f64 {
    // atan2 form stays accurate for nearly parallel vectors
    let cross = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    let cn = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    cn.atan2(dot).to_degrees()
}

/// Diffuse reflectivity per pixel, 1 or 3 channels, values `>= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlbedoMap {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl AlbedoMap {
    pub fn from_vec(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<f64>,
    ) -> Result<Self, ImagingError> {
        check_dims(width, height, channels)?;
        let expected = width * height * channels;
        if data.len() != expected {
            return Err(ImagingError::DataLength {
                expected,
                found: data.len(),
            });
        }
        if let Some((index, &value)) = data
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(ImagingError::SampleOutOfRange { index, value });
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn uniform(width: usize, height: usize, channels: usize, k: f64) -> Result<Self, ImagingError> {
        Self::from_vec(width, height, channels, vec![k; width * height * channels])
    }

    /// Reads an albedo image directly (samples already in `[0, 1]`).
    pub fn from_image(img: &Image) -> Self {
        Self {
            width: img.width,
            height: img.height,
            channels: img.channels,
            data: img.data.clone(),
        }
    }

    /// Clamps into `[0, 1]` for storage as an 8-bit image.
    pub fn to_image(&self) -> Image {
        Image::from_vec_clamped(self.width, self.height, self.channels, self.data.clone())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_rejects_out_of_range() {
        assert!(matches!(
            Image::from_vec(1, 1, 1, vec![1.5]),
            Err(ImagingError::SampleOutOfRange { .. })
        ));
        assert!(matches!(
            Image::from_vec(2, 1, 1, vec![0.5]),
            Err(ImagingError::DataLength { .. })
        ));
        assert!(Image::from_vec(1, 1, 2, vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn from_fn_clamps() {
        let img = Image::from_fn(2, 1, 1, |x, _, _| if x == 0 { -3.0 } else { f64::NAN }).unwrap();
        assert_eq!(img.data(), &[0.0, 0.0]);
    }

    #[test]
    fn normal_map_fills_invalid_pixels() {
        let nm = NormalMap::from_parts(2, 1, vec![[0.6, 0.0, 0.8], [5.0, 5.0, 5.0]], vec![true, false])
            .unwrap();
        assert_eq!(nm.normal(1, 0), NEUTRAL_NORMAL);
        assert!(NormalMap::from_parts(1, 1, vec![[0.0, 0.0, -1.0]], vec![true]).is_err());
    }

    #[test]
    fn angle_is_accurate_near_zero() {
        let a = [0.0, 0.0, 1.0];
        let t = 1e-9f64;
        let b = [t.sin(), 0.0, t.cos()];
        assert!((angle_between_deg(a, b) - t.to_degrees()).abs() < 1e-15);
    }
}
