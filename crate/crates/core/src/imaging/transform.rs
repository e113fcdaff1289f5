use super::{Image, ImagingError};

/// ITU-R BT.601 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

pub fn to_grayscale(img: &Image) -> Image {
    if img.channels() == 1 {
        return img.clone();
    }
    let data = img
        .data()
        .chunks_exact(3)
        .map(|p| LUMA_WEIGHTS[0] * p[0] + LUMA_WEIGHTS[1] * p[1] + LUMA_WEIGHTS[2] * p[2])
        .collect();
    Image::from_vec_clamped(img.width(), img.height(), 1, data)
}

/// Bilinear resampling with half-pixel centers (align-corners off) and
/// edge-clamped taps.
pub fn resize_bilinear(img: &Image, width: usize, height: usize) -> Result<Image, ImagingError> {
    if width == 0 || height == 0 {
        return Err(ImagingError::InvalidDimensions {
            width,
            height,
            channels: img.channels(),
        });
    }
    if width == img.width() && height == img.height() {
        return Ok(img.clone());
    }
    let taps = |out: usize, inp: usize| -> Vec<(usize, usize, f64)> {
        let scale = inp as f64 / out as f64;
        (0..out)
            .map(|o| {
                let src = ((o as f64 + 0.5) * scale - 0.5).max(0.0);
                let i0 = (src.floor() as usize).min(inp - 1);
                let i1 = (i0 + 1).min(inp - 1);
                let t = if i0 == inp - 1 { 0.0 } else { src - i0 as f64 };
                (i0, i1, t)
            })
            .collect()
    };
    let xs = taps(width, img.width());
    let ys = taps(height, img.height());
    let c = img.channels();
    let mut data = Vec::with_capacity(width * height * c);
    for &(y0, y1, ty) in &ys {
        for &(x0, x1, tx) in &xs {
            for ch in 0..c {
                let top = img.get(x0, y0, ch) * (1.0 - tx) + img.get(x1, y0, ch) * tx;
                let bottom = img.get(x0, y1, ch) * (1.0 - tx) + img.get(x1, y1, ch) * tx;
                data.push(top * (1.0 - ty) + bottom * ty);
            }
        }
    }
    Ok(Image::from_vec_clamped(width, height, c, data))
}

/// Normalized 1-D Gaussian taps for offsets `-radius..=radius`.
pub fn gaussian_kernel(sigma: f64, radius: usize) -> Vec<f64> {
    let r = radius as isize;
    let raw: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / sum).collect()
}

/// Separable Gaussian blur with radius `ceil(3 sigma)`; `sigma <= 0` is a no-op.
pub fn gaussian_blur(img: &Image, sigma: f64) -> Image {
    if !(sigma > 0.0) {
        return img.clone();
    }
    let radius = (3.0 * sigma).ceil() as usize;
    let kernel = gaussian_kernel(sigma, radius);
    let (w, h, c) = (img.width(), img.height(), img.channels());
    let r = radius as isize;
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;

    let mut tmp = vec![0.0; w * h * c];
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let mut acc = 0.0;
                for (k, wt) in kernel.iter().enumerate() {
                    let sx = clamp(x as isize + k as isize - r, w);
                    acc += wt * img.get(sx, y, ch);
                }
                tmp[(y * w + x) * c + ch] = acc;
            }
        }
    }
    let mut out = vec![0.0; w * h * c];
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let mut acc = 0.0;
                for (k, wt) in kernel.iter().enumerate() {
                    let sy = clamp(y as isize + k as isize - r, h);
                    acc += wt * tmp[(sy * w + x) * c + ch];
                }
                out[(y * w + x) * c + ch] = acc;
            }
        }
    }
    Image::from_vec_clamped(w, h, c, out)
}

/// Rotates by `angle_deg` about the image center, then shifts by
/// `(dx, dy)` pixels. Bilinear sampling, border pixels replicated.
pub fn rotate_translate(img: &Image, angle_deg: f64, dx: f64, dy: f64) -> Image {
    let (w, h, c) = (img.width(), img.height(), img.channels());
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let (s, co) = angle_deg.to_radians().sin_cos();
    let mut data = Vec::with_capacity(w * h * c);
    for y in 0..h {
        for x in 0..w {
            // inverse map: undo translation, then rotate by -angle
            let (px, py) = (x as f64 - dx - cx, y as f64 - dy - cy);
            let sx = (co * px + s * py + cx).clamp(0.0, w as f64 - 1.0);
            let sy = (-s * px + co * py + cy).clamp(0.0, h as f64 - 1.0);
            let (x0, y0) = (sx.floor() as usize, sy.floor() as usize);
            let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
            let (tx, ty) = (sx - x0 as f64, sy - y0 as f64);
            for ch in 0..c {
                let top = img.get(x0, y0, ch) * (1.0 - tx) + img.get(x1, y0, ch) * tx;
                let bottom = img.get(x0, y1, ch) * (1.0 - tx) + img.get(x1, y1, ch) * tx;
                data.push(top * (1.0 - ty) + bottom * ty);
            }
        }
    }
    Image::from_vec_clamped(w, h, c, data)
}
