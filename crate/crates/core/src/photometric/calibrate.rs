use super::{LightDirection, PhotometricError};
use crate::imaging::{to_grayscale, Image};

/// Estimates a light direction from the specular highlight on a mirror ball.
///
/// The brightest luminance pixel inside the circle (ties: smallest row, then
/// smallest column) gives the sphere normal `N`; the light is the view vector
/// `V = (0, 0, 1)` reflected about `N`.
pub fn calibrate_light_from_sphere(
    img: &Image,
    center: (f64, f64),
    radius: f64,
) -> Result<LightDirection, PhotometricError> {
    let (cx, cy) = center;
    let (w, h) = (img.width() as f64, img.height() as f64);
    if !(radius > 0.0)
        || cx - radius < 0.0
        || cy - radius < 0.0
        || cx + radius > w - 1.0
        || cy + radius > h - 1.0
    {
        return Err(PhotometricError::CircleOutsideImage);
    }
    let gray = to_grayscale(img);

    let mut best: Option<(f64, usize, usize)> = None;
    let (y_lo, y_hi) = ((cy - radius).floor() as usize, (cy + radius).ceil() as usize);
    let (x_lo, x_hi) = ((cx - radius).floor() as usize, (cx + radius).ceil() as usize);
    for y in y_lo..=y_hi.min(img.height() - 1) {
        for x in x_lo..=x_hi.min(img.width() - 1) {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            if dx * dx + dy * dy > radius * radius {
                continue;
            }
            let v = gray.get(x, y, 0);
            // strict comparison in row-major order keeps the first maximum
            if best.is_none_or(|(b, _, _)| v > b) {
                best = Some((v, x, y));
            }
        }
    }
    let (_, x, y) = best.ok_or(PhotometricError::CircleOutsideImage)?;

    let nx = (x as f64 - cx) / radius;
    let ny = (y as f64 - cy) / radius;
    let nz2 = 1.0 - nx * nx - ny * ny;
    if nz2 <= 0.0 {
        return Err(PhotometricError::DegenerateCalibration);
    }
    let n = normalize([nx, ny, nz2.sqrt()]);
    // L = 2 (N.V) N - V with V = +z
    let ndv = n[2];
    let l = [2.0 * ndv * n[0], 2.0 * ndv * n[1], 2.0 * ndv * n[2] - 1.0];
    LightDirection::new(l).map_err(|_| PhotometricError::DegenerateCalibration)
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / len, v[1] / len, v[2] / len]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere_with_highlight(size: usize, hx: usize, hy: usize) -> Image {
        Image::from_fn(size, size, 1, |x, y, _| if (x, y) == (hx, hy) { 1.0 } else { 0.2 })
            .unwrap()
    }

    #[test]
    fn center_highlight_is_frontal() {
        let img = sphere_with_highlight(21, 10, 10);
        let l = calibrate_light_from_sphere(&img, (10.0, 10.0), 8.0).unwrap();
        assert_eq!(l.vector(), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn half_radius_highlight() {
        let img = sphere_with_highlight(21, 14, 10);
        let l = calibrate_light_from_sphere(&img, (10.0, 10.0), 8.0).unwrap().vector();
        let expected = [3f64.sqrt() / 2.0, 0.0, 0.5];
        for i in 0..3 {
            assert!((l[i] - expected[i]).abs() < 1e-12);
        }
        // reflecting L about N must give back the view vector
        let n = [0.5, 0.0, 0.75f64.sqrt()];
        let ndl = n[0] * l[0] + n[2] * l[2];
        let v = [2.0 * ndl * n[0] - l[0], -l[1], 2.0 * ndl * n[2] - l[2]];
        assert!(v[0].abs() < 1e-12 && (v[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ties_resolve_to_first_pixel_in_scan_order() {
        // 3x3 plateau of equal maxima: smallest row, then column wins -> (9, 10)
        let img = Image::from_fn(21, 21, 1, |x, y, _| {
            if (9..=11).contains(&x) && (10..=12).contains(&y) { 1.0 } else { 0.1 }
        })
        .unwrap();
        let a = calibrate_light_from_sphere(&img, (10.0, 10.0), 8.0).unwrap();
        assert_eq!(a, calibrate_light_from_sphere(&img, (10.0, 10.0), 8.0).unwrap());
        let v = a.vector();
        assert!(v[0] < 0.0 && v[1] == 0.0);
        // all-dark interior: first in-circle pixel (10, 2) sits on the rim
        let dark = Image::filled(21, 21, 1, 0.0).unwrap();
        assert!(matches!(
            calibrate_light_from_sphere(&dark, (10.0, 10.0), 8.0),
            Err(PhotometricError::DegenerateCalibration)
        ));
    }

    #[test]
    fn rim_highlight_is_degenerate() {
        let img = sphere_with_highlight(21, 18, 10);
        assert!(matches!(
            calibrate_light_from_sphere(&img, (10.0, 10.0), 8.0),
            Err(PhotometricError::DegenerateCalibration)
        ));
    }

    #[test]
    fn circle_must_fit() {
        let img = sphere_with_highlight(21, 10, 10);
        assert!(matches!(
            calibrate_light_from_sphere(&img, (3.0, 10.0), 8.0),
            Err(PhotometricError::CircleOutsideImage)
        ));
    }
}
