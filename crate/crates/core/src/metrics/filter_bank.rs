//! Fixed multi-scale filter bank and the two distances built on it.
//!
//! Responses are computed per color channel with periodic boundaries, giving
//! `KERNELS.len() * 3` response channels per position at each scale. Scale
//! `s` works on the image box-downsampled by `2^s`.

use crate::error::{Error, Result};
use crate::render::RasterImage;

pub type Kernel = [[f64; 3]; 3];

const fn scaled(k: [[f64; 3]; 3], s: f64) -> Kernel {
    [
        [k[0][0] / s, k[0][1] / s, k[0][2] / s],
        [k[1][0] / s, k[1][1] / s, k[1][2] / s],
        [k[2][0] / s, k[2][1] / s, k[2][2] / s],
    ]
}

/// Low-pass first; every other kernel sums to zero.
pub const KERNELS: [Kernel; 6] = [
    scaled([[1.0, 2.0, 1.0], [2.0, 4.0, 2.0], [1.0, 2.0, 1.0]], 16.0),
    scaled([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]], 8.0),
    scaled([[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]], 8.0),
    scaled([[-2.0, -1.0, 0.0], [-1.0, 0.0, 1.0], [0.0, 1.0, 2.0]], 8.0),
    scaled([[0.0, 1.0, 2.0], [-1.0, 0.0, 1.0], [-2.0, -1.0, 0.0]], 8.0),
    scaled(
        [[-1.0, -1.0, -1.0], [-1.0, 8.0, -1.0], [-1.0, -1.0, -1.0]],
        8.0,
    ),
];

pub const SCALES: usize = 3;
const COLOR_CHANNELS: usize = 3;

/// Responses at one scale: `positions × channels`, channel-fastest.
#[derive(Debug, Clone)]
pub(crate) struct ScaleResponse {
    pub positions: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl ScaleResponse {
    pub fn at(&self, position: usize) -> &[f64] {
        &self.data[position * self.channels..(position + 1) * self.channels]
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FilterBank;

impl FilterBank {
    pub fn kernels(&self) -> &'static [Kernel] {
        &KERNELS
    }

    pub fn channels(&self) -> usize {
        KERNELS.len() * COLOR_CHANNELS
    }

    /// Responses at every scale whose image is at least one pixel.
    pub(crate) fn responses(&self, img: &RasterImage) -> Vec<ScaleResponse> {
        let mut planes: Vec<Vec<f64>> = (0..COLOR_CHANNELS)
            .map(|c| {
                img.pixels()
                    .chunks_exact(3)
                    .map(|p| p[c] as f64 / 255.0)
                    .collect()
            })
            .collect();
        let (mut w, mut h) = (img.width(), img.height());
        let mut out = Vec::with_capacity(SCALES);
        for scale in 0..SCALES {
            if scale > 0 {
                if w < 2 || h < 2 {
                    break;
                }
                planes = planes.iter().map(|p| downsample(p, w, h)).collect();
                w /= 2;
                h /= 2;
            }
            out.push(self.respond(&planes, w, h));
        }
        out
    }

    fn respond(&self, planes: &[Vec<f64>], w: usize, h: usize) -> ScaleResponse {
        let channels = self.channels();
        let mut data = vec![0.0; w * h * channels];
        for y in 0..h {
            for x in 0..w {
                let base = (y * w + x) * channels;
                for (c, plane) in planes.iter().enumerate() {
                    for (k, kernel) in KERNELS.iter().enumerate() {
                        let mut acc = 0.0;
                        for (dy, row) in kernel.iter().enumerate() {
                            let yy = (y + h + dy - 1) % h;
                            for (dx, wgt) in row.iter().enumerate() {
                                let xx = (x + w + dx - 1) % w;
                                acc += wgt * plane[yy * w + xx];
                            }
                        }
                        data[base + c * KERNELS.len() + k] = acc;
                    }
                }
            }
        }
        ScaleResponse {
            positions: w * h,
            channels,
            data,
        }
    }
}

/// 2×2 box average; a trailing odd row/column is dropped.
fn downsample(src: &[f64], w: usize, h: usize) -> Vec<f64> {
    let (ow, oh) = (w / 2, h / 2);
    let mut out = Vec::with_capacity(ow * oh);
    for y in 0..oh {
        for x in 0..ow {
            let i = 2 * y * w + 2 * x;
            out.push((src[i] + src[i + 1] + src[i + w] + src[i + w + 1]) / 4.0);
        }
    }
    out
}

fn check_dims(a: &RasterImage, b: &RasterImage, what: &str) -> Result<()> {
    if a.same_size(b) {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "{what} of {}x{} and {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )))
    }
}

fn gram(resp: &ScaleResponse) -> Vec<f64> {
    let c = resp.channels;
    let mut g = vec![0.0; c * c];
    for p in 0..resp.positions {
        let r = resp.at(p);
        for i in 0..c {
            for j in i..c {
                g[i * c + j] += r[i] * r[j];
            }
        }
    }
    let n = resp.positions as f64;
    for i in 0..c {
        for j in i..c {
            let v = g[i * c + j] / n;
            g[i * c + j] = v;
            g[j * c + i] = v;
        }
    }
    g
}

/// Frobenius distance between filter-bank Gram matrices, averaged over scales.
pub fn style_distance(a: &RasterImage, b: &RasterImage) -> Result<f64> {
    check_dims(a, b, "style_distance")?;
    let bank = FilterBank;
    let (ra, rb) = (bank.responses(a), bank.responses(b));
    let total: f64 = ra
        .iter()
        .zip(&rb)
        .map(|(sa, sb)| {
            gram(sa)
                .iter()
                .zip(gram(sb))
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()
        })
        .sum();
    Ok(total / ra.len() as f64)
}

/// Unit-normalize each position's channel vector in place; zero vectors stay zero.
fn normalize_positions(resp: &mut ScaleResponse) {
    let c = resp.channels;
    for chunk in resp.data.chunks_exact_mut(c) {
        let norm = chunk.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            chunk.iter_mut().for_each(|v| *v /= norm);
        }
    }
}

/// Normalized filter-bank embedding of one image; compare with
/// [`embedding_distance`].
pub(crate) fn perceptual_embedding(img: &RasterImage) -> Vec<ScaleResponse> {
    let mut resp = FilterBank.responses(img);
    resp.iter_mut().for_each(normalize_positions);
    resp
}

pub(crate) fn embedding_distance(a: &[ScaleResponse], b: &[ScaleResponse]) -> f64 {
    let per_scale: f64 = a
        .iter()
        .zip(b)
        .map(|(sa, sb)| {
            let sq: f64 = sa
                .data
                .iter()
                .zip(&sb.data)
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            sq / sa.data.len() as f64
        })
        .sum();
    (per_scale / a.len() as f64).sqrt()
}

/// Deterministic perceptual distance: per-position unit-normalized
/// filter-bank responses, mean squared difference over positions, channels
/// and scales, then the square root. An L2 distance in a fixed embedding.
pub fn perceptual_distance(a: &RasterImage, b: &RasterImage) -> Result<f64> {
    check_dims(a, b, "perceptual_distance")?;
    Ok(embedding_distance(
        &perceptual_embedding(a),
        &perceptual_embedding(b),
    ))
}
