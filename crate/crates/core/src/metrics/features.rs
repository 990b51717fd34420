//! Hand-crafted image descriptor used for coreset selection, pseudo
//! labeling and the Fréchet feature distance.
//!
//! Layout (120 informative dims, zero-padded to the configured dimension):
//!
//! | offset | dims | block                                                   |
//! |--------|------|---------------------------------------------------------|
//! | 0      | 64   | 8×8 block-averaged grayscale, `[0, 1]`                  |
//! | 64     | 24   | 8-bin histogram per RGB channel, each summing to 1      |
//! | 88     | 32   | 8-bin gradient orientation histogram per quadrant of    |
//! |        |      | the 8×8 grayscale, magnitude weighted, each summing to  |
//! |        |      | 1 (all zero when the quadrant has no gradient)          |
//! | 120    | rest | zero padding                                            |

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::render::RasterImage;

use super::grayscale;

pub const GRID: usize = 8;
pub const GRAY_DIMS: usize = GRID * GRID;
pub const HIST_BINS: usize = 8;
pub const COLOR_DIMS: usize = 3 * HIST_BINS;
pub const ORIENTATION_BINS: usize = 8;
pub const GRADIENT_DIMS: usize = 4 * ORIENTATION_BINS;
/// Informative prefix of every feature vector.
pub const FEATURE_LAYOUT_DIM: usize = GRAY_DIMS + COLOR_DIMS + GRADIENT_DIMS;
pub const DEFAULT_FEATURE_DIM: usize = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn distance(&self, other: &FeatureVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn gray_block(&self) -> &[f64] {
        &self.0[..GRAY_DIMS]
    }

    pub fn color_histogram(&self, channel: usize) -> &[f64] {
        let start = GRAY_DIMS + channel * HIST_BINS;
        &self.0[start..start + HIST_BINS]
    }

    /// Quadrants in row-major order: top-left, top-right, bottom-left, bottom-right.
    pub fn orientation_histogram(&self, quadrant: usize) -> &[f64] {
        let start = GRAY_DIMS + COLOR_DIMS + quadrant * ORIENTATION_BINS;
        &self.0[start..start + ORIENTATION_BINS]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureExtractor {
    dim: usize,
}

impl Default for FeatureExtractor {
    fn default() -> Self {
        FeatureExtractor {
            dim: DEFAULT_FEATURE_DIM,
        }
    }
}

impl FeatureExtractor {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < FEATURE_LAYOUT_DIM {
            return Err(Error::Config(format!(
                "feature dimension {dim} is below the layout size {FEATURE_LAYOUT_DIM}"
            )));
        }
        Ok(FeatureExtractor { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extract(&self, img: &RasterImage) -> Result<FeatureVector> {
        let (w, h) = (img.width(), img.height());
        if w < GRID || h < GRID {
            return Err(Error::InvalidInput(format!(
                "feature extraction needs at least {GRID}x{GRID} pixels, got {w}x{h}"
            )));
        }
        let mut out = Vec::with_capacity(self.dim);

        let gray = grayscale(img);
        let cells = block_average(&gray, w, h);
        out.extend(cells.iter().map(|g| g / 255.0));

        let n = (w * h) as f64;
        let mut hist = [[0usize; HIST_BINS]; 3];
        for p in img.pixels().chunks_exact(3) {
            for c in 0..3 {
                hist[c][p[c] as usize * HIST_BINS / 256] += 1;
            }
        }
        for channel in &hist {
            out.extend(channel.iter().map(|&k| k as f64 / n));
        }

        let unit_cells: Vec<f64> = cells.iter().map(|g| g / 255.0).collect();
        out.extend(orientation_histograms(&unit_cells));

        out.resize(self.dim, 0.0);
        Ok(FeatureVector(out))
    }
}

/// Extract with the default 128-dimensional layout.
pub fn extract_features(img: &RasterImage) -> Result<FeatureVector> {
    FeatureExtractor::default().extract(img)
}

/// Average over the 8×8 grid of blocks `[floor(i*W/8), floor((i+1)*W/8))`.
fn block_average(gray: &[f64], w: usize, h: usize) -> [f64; GRAY_DIMS] {
    let mut cells = [0.0; GRAY_DIMS];
    for by in 0..GRID {
        let (y0, y1) = (by * h / GRID, (by + 1) * h / GRID);
        for bx in 0..GRID {
            let (x0, x1) = (bx * w / GRID, (bx + 1) * w / GRID);
            let mut sum = 0.0;
            for y in y0..y1 {
                for x in x0..x1 {
                    sum += gray[y * w + x];
                }
            }
            cells[by * GRID + bx] = sum / ((y1 - y0) * (x1 - x0)) as f64;
        }
    }
    cells
}

/// Central differences with clamped borders on the 8×8 grid; each quadrant's
/// magnitude-weighted histogram is L1-normalized.
fn orientation_histograms(cells: &[f64]) -> [f64; GRADIENT_DIMS] {
    let at = |x: usize, y: usize| cells[y * GRID + x];
    let mut hist = [0.0; GRADIENT_DIMS];
    let sector = std::f64::consts::TAU / ORIENTATION_BINS as f64;
    for y in 0..GRID {
        for x in 0..GRID {
            let gx = at((x + 1).min(GRID - 1), y) - at(x.saturating_sub(1), y);
            let gy = at(x, (y + 1).min(GRID - 1)) - at(x, y.saturating_sub(1));
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let angle = gy.atan2(gx).rem_euclid(std::f64::consts::TAU);
            let bin = ((angle / sector) as usize).min(ORIENTATION_BINS - 1);
            let quadrant = (y / (GRID / 2)) * 2 + x / (GRID / 2);
            hist[quadrant * ORIENTATION_BINS + bin] += mag;
        }
    }
    for q in hist.chunks_exact_mut(ORIENTATION_BINS) {
        let total: f64 = q.iter().sum();
        if total > 0.0 {
            q.iter_mut().for_each(|v| *v /= total);
        }
    }
    hist
}
