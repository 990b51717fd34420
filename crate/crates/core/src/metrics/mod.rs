//! Image distances, the hand-crafted feature extractor and the Fréchet
//! feature distance.

mod features;
mod filter_bank;
mod frechet;
mod ssim;

pub use features::{extract_features, FeatureExtractor, FeatureVector, FEATURE_LAYOUT_DIM};
pub(crate) use filter_bank::{embedding_distance, perceptual_embedding, ScaleResponse};
pub use filter_bank::{perceptual_distance, style_distance, FilterBank, Kernel, KERNELS, SCALES};
pub use frechet::{frechet_distance, frechet_from_stats, GaussianStats, COVARIANCE_EPSILON};
pub use ssim::{ssim, SSIM_WINDOW};

use crate::render::RasterImage;

/// Rec. 601 luma on the 0..=255 scale, row-major.
pub(crate) fn grayscale(img: &RasterImage) -> Vec<f64> {
    img.pixels()
        .chunks_exact(3)
        .map(|p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
        .collect()
}
