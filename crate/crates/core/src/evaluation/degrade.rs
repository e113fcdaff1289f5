use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use super::EvalError;
use crate::imaging::{gaussian_blur, to_grayscale, Image};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegradeKind {
    Brightness,
    Contrast,
    Color,
    Blur,
}

impl DegradeKind {
    pub const ALL: [DegradeKind; 4] = [
        DegradeKind::Brightness,
        DegradeKind::Contrast,
        DegradeKind::Color,
        DegradeKind::Blur,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DegradeKind::Brightness => "brightness",
            DegradeKind::Contrast => "contrast",
            DegradeKind::Color => "color",
            DegradeKind::Blur => "blur",
        }
    }
}

impl fmt::Display for DegradeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DegradeKind {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DegradeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| EvalError::InvalidArgument(format!("unknown degradation {s:?}")))
    }
}

/// A degradation and its strength in `[0, 1]`; 0 leaves images untouched.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegradeSpec {
    kind: DegradeKind,
    amount: f64,
}

impl DegradeSpec {
    pub fn new(kind: DegradeKind, amount: f64) -> Result<Self, EvalError> {
        if !(0.0..=1.0).contains(&amount) {
            return Err(EvalError::InvalidArgument(format!(
                "degradation amount {amount} outside [0, 1]"
            )));
        }
        Ok(Self { kind, amount })
    }

    pub fn kind(&self) -> DegradeKind {
        self.kind
    }

    pub fn amount(&self) -> f64 {
        self.amount
    }

    /// Every kind at every amount.
    pub fn grid(kinds: &[DegradeKind], amounts: &[f64]) -> Result<Vec<Self>, EvalError> {
        kinds
            .iter()
            .flat_map(|&k| amounts.iter().map(move |&a| Self::new(k, a)))
            .collect()
    }
}

/// - brightness: `v (1 - a)`
/// - contrast: blend toward the image's mean luminance
/// - color: blend toward the pixel's own luminance
/// - blur: Gaussian with `sigma = a * min(w, h) / 16`
pub fn degrade(img: &Image, spec: &DegradeSpec) -> Image {
    let a = spec.amount;
    if a == 0.0 {
        return img.clone();
    }
    match spec.kind {
        DegradeKind::Brightness => img.map(|v| v * (1.0 - a)),
        DegradeKind::Contrast => {
            let gray = to_grayscale(img);
            let mean = gray.data().iter().sum::<f64>() / gray.data().len() as f64;
            img.map(|v| (1.0 - a) * v + a * mean)
        }
        DegradeKind::Color => {
            if img.channels() == 1 {
                return img.clone();
            }
            let gray = to_grayscale(img);
            let mut data = Vec::with_capacity(img.data().len());
            for (px, &g) in img.data().chunks_exact(3).zip(gray.data()) {
                data.extend(px.iter().map(|&v| (1.0 - a) * v + a * g));
            }
            Image::from_vec(img.width(), img.height(), 3, data).expect("blend stays in range")
        }
        DegradeKind::Blur => {
            gaussian_blur(img, a * img.width().min(img.height()) as f64 / 16.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Image {
        Image::from_fn(9, 7, 3, |x, y, c| ((x * 3 + y * 5 + c * 7) % 13) as f64 / 12.0).unwrap()
    }

    #[test]
    fn endpoints() {
        let img = sample();
        for k in DegradeKind::ALL {
            assert_eq!(degrade(&img, &DegradeSpec::new(k, 0.0).unwrap()), img);
        }
        let black = degrade(&img, &DegradeSpec::new(DegradeKind::Brightness, 1.0).unwrap());
        assert!(black.data().iter().all(|&v| v == 0.0));
        let gray = degrade(&img, &DegradeSpec::new(DegradeKind::Color, 1.0).unwrap());
        assert!(gray.data().chunks_exact(3).all(|p| p[0] == p[1] && p[1] == p[2]));
        let flat = degrade(&img, &DegradeSpec::new(DegradeKind::Contrast, 1.0).unwrap());
        assert!(flat.data().windows(2).all(|w| (w[0] - w[1]).abs() < 1e-15));
    }

    #[test]
    fn amounts_are_validated() {
        assert!(DegradeSpec::new(DegradeKind::Blur, 1.5).is_err());
        assert!(DegradeSpec::new(DegradeKind::Blur, -0.1).is_err());
        assert_eq!("blur".parse::<DegradeKind>().unwrap(), DegradeKind::Blur);
        assert_eq!(DegradeSpec::grid(&DegradeKind::ALL, &[0.0, 1.0]).unwrap().len(), 8);
    }
}
