//! Photometric stereo reconstruction, conditional-GAN normal prediction, and
//! lighting-robustness evaluation of normal images versus color images.

pub mod imaging;
pub mod photometric;
pub mod neural;
pub mod cli;
pub mod evaluation;
