use super::EvalError;
use crate::imaging::{gaussian_kernel, to_grayscale, Image};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// Gaussian-windowed SSIM on luminance with dynamic range 1, averaged over
/// all window positions that fit inside the image. Images smaller than the
/// 11x11 window use the largest odd window that fits.
pub fn ssim(a: &Image, b: &Image) -> Result<f64, EvalError> {
    if !a.same_size(b) || a.channels() != b.channels() {
        return Err(EvalError::DimensionMismatch(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.width(),
            a.height(),
            a.channels(),
            b.width(),
            b.height(),
            b.channels()
        )));
    }
    let (w, h) = (a.width(), a.height());
    let mut win = SSIM_WINDOW.min(w).min(h);
    if win % 2 == 0 {
        win -= 1;
    }
    let kernel = gaussian_kernel(SSIM_SIGMA, win / 2);
    let ga = to_grayscale(a);
    let gb = to_grayscale(b);
    let (x, y) = (ga.data(), gb.data());
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(p, q)| p * q).collect();

    let filt = |src: &[f64]| valid_filter(src, w, h, &kernel);
    let (mx, my) = (filt(x), filt(y));
    let (sxx, syy, sxy) = (filt(&xx), filt(&yy), filt(&xy));
    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let mut sum = 0.0;
    for i in 0..mx.len() {
        let (ma, mb) = (mx[i], my[i]);
        let va = sxx[i] - ma * ma;
        let vb = syy[i] - mb * mb;
        let cov = sxy[i] - ma * mb;
        sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
            / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    Ok(sum / mx.len() as f64)
}

/// Separable weighted sums over every fully contained window.
fn valid_filter(src: &[f64], w: usize, h: usize, k: &[f64]) -> Vec<f64> {
    let n = k.len();
    let (ow, oh) = (w + 1 - n, h + 1 - n);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = (0..n).map(|i| k[i] * src[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..n).map(|i| k[i] * rows[(y + i) * ow + x]).sum();
        }
    }
    out
}
