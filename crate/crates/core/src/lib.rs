//! Digital-twin training set synthesis.
//!
//! The pipeline picks representative target images by farthest-point
//! sampling over hand-crafted features, fits a rendered "twin" to each of
//! them by coordinate descent over discrete scene-attribute grids, and grows
//! the fitted attribute vectors into a labeled dataset by Gaussian
//! perturbation.
//!
//! Data-parallel loops run on rayon when the default `parallel` feature is
//! enabled and sequentially otherwise; results are identical either way.

pub mod assets;
pub mod attributes;
pub mod augment;
pub mod coreset;
pub mod error;
pub mod io;
pub mod mesh;
pub mod metrics;
pub mod par;
pub mod pipeline;
pub mod render;
pub mod twin;

pub use attributes::{normalize_psi, Attribute, AttributeVector, ATTRIBUTE_COUNT};
pub use augment::{sample_augmented, AugmentConfig, AugmentedSample};
pub use coreset::{cover_radius, select_coreset, CoresetSelection, SeedRule};
pub use error::{Error, ErrorKind, Result};
pub use mesh::{load_mesh, parse_mesh, Mesh};
pub use metrics::{
    extract_features, frechet_distance, perceptual_distance, ssim, style_distance, FeatureVector,
};
pub use render::{
    bbox_from_mask, render, BoundingBox, LinearMap, RasterImage, RenderConfig, SilhouetteMask,
};
pub use twin::{coordinate_step, fit_twin, FitOptions, FitResult, LossKind, SearchSpace};
