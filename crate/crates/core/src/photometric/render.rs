use super::{LightDirection, PhotometricError};
use crate::imaging::{AlbedoMap, Image, NormalMap};

/// Ideal diffuse shading `clamp(k * max(0, L . n), 0, 1)` per albedo channel.
/// Mask-invalid pixels render black.
pub fn render_lambertian(
    nm: &NormalMap,
    alb: &AlbedoMap,
    light: &LightDirection,
) -> Result<Image, PhotometricError> {
    if nm.width() != alb.width() || nm.height() != alb.height() {
        return Err(PhotometricError::SizeMismatch);
    }
    let c = alb.channels();
    let mut data = Vec::with_capacity(nm.width() * nm.height() * c);
    for (i, (n, &valid)) in nm.normals().iter().zip(nm.mask()).enumerate() {
        let shade = if valid { light.dot(*n).max(0.0) } else { 0.0 };
        data.extend(alb.data()[i * c..(i + 1) * c].iter().map(|k| k * shade));
    }
    Ok(Image::from_vec_clamped(nm.width(), nm.height(), c, data))
}
