//! Normal vector <-> RGB texture codec.
//!
//! `x` and `y` span the full byte range, `z` is stored as `128 + 127 z` so a
//! flat surface `(0, 0, 1)` becomes `(128, 128, 255)`.

use super::{Image, ImagingError, NormalMap, NEUTRAL_NORMAL};

/// Decoded vectors shorter than this before renormalization are marked invalid.
const MIN_DECODED_LENGTH: f64 = 0.5;

#[inline]
fn half_up(v: f64) -> f64 {
    (v + 0.5).floor()
}

pub fn encode_normal_rgb(nm: &NormalMap) -> Image {
    let mut data = Vec::with_capacity(nm.width() * nm.height() * 3);
    for (n, &valid) in nm.normals().iter().zip(nm.mask()) {
        let n = if valid { *n } else { NEUTRAL_NORMAL };
        let r = half_up((n[0] + 1.0) / 2.0 * 255.0);
        let g = half_up((n[1] + 1.0) / 2.0 * 255.0);
        let b = half_up(128.0 + n[2] * 127.0);
        data.extend([r / 255.0, g / 255.0, b / 255.0]);
    }
    Image::from_vec_clamped(nm.width(), nm.height(), 3, data)
}

pub fn decode_normal_rgb(img: &Image) -> Result<NormalMap, ImagingError> {
    if img.channels() != 3 {
        return Err(ImagingError::ChannelCount {
            expected: 3,
            found: img.channels(),
        });
    }
    let raw: Vec<[f64; 3]> = img
        .data()
        .chunks_exact(3)
        .map(|px| {
            let v = [
                2.0 * px[0] - 1.0,
                2.0 * px[1] - 1.0,
                (px[2] * 255.0 - 128.0) / 127.0,
            ];
            let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if len < MIN_DECODED_LENGTH {
                [0.0; 3]
            } else {
                v
            }
        })
        .collect();
    Ok(NormalMap::from_raw(img.width(), img.height(), &raw))
}
