//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use twinsynth::RasterImage;

/// Straight-line perceptual distance: kernels typed out again, responses
/// computed with explicit wrap-around indexing, one position at a time.
pub fn perceptual_oracle(a: &RasterImage, b: &RasterImage) -> f64 {
    let kernels: [[f64; 9]; 6] = [
        [1.0, 2.0, 1.0, 2.0, 4.0, 2.0, 1.0, 2.0, 1.0],
        [-1.0, 0.0, 1.0, -2.0, 0.0, 2.0, -1.0, 0.0, 1.0],
        [-1.0, -2.0, -1.0, 0.0, 0.0, 0.0, 1.0, 2.0, 1.0],
        [-2.0, -1.0, 0.0, -1.0, 0.0, 1.0, 0.0, 1.0, 2.0],
        [0.0, 1.0, 2.0, -1.0, 0.0, 1.0, -2.0, -1.0, 0.0],
        [-1.0, -1.0, -1.0, -1.0, 8.0, -1.0, -1.0, -1.0, -1.0],
    ];
    let norms = [16.0, 8.0, 8.0, 8.0, 8.0, 8.0];

    let planes = |img: &RasterImage| -> Vec<Vec<Vec<f64>>> {
        (0..3)
            .map(|c| {
                (0..img.height())
                    .map(|y| {
                        (0..img.width())
                            .map(|x| img.get(x, y)[c] as f64 / 255.0)
                            .collect()
                    })
                    .collect()
            })
            .collect()
    };
    let shrink = |p: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        let (h, w) = (p.len() / 2, p[0].len() / 2);
        (0..h)
            .map(|y| {
                (0..w)
                    .map(|x| {
                        (p[2 * y][2 * x]
                            + p[2 * y][2 * x + 1]
                            + p[2 * y + 1][2 * x]
                            + p[2 * y + 1][2 * x + 1])
                            / 4.0
                    })
                    .collect()
            })
            .collect()
    };
    let embed = |planes: &Vec<Vec<Vec<f64>>>| -> Vec<Vec<Vec<f64>>> {
        // [position][channel] per scale, unit-normalized
        let (h, w) = (planes[0].len() as i64, planes[0][0].len() as i64);
        let mut out = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let mut v = Vec::new();
                for plane in planes {
                    for (k, kernel) in kernels.iter().enumerate() {
                        let mut acc = 0.0;
                        for dy in -1..=1i64 {
                            for dx in -1..=1i64 {
                                let yy = (y + dy).rem_euclid(h) as usize;
                                let xx = (x + dx).rem_euclid(w) as usize;
                                acc += kernel[((dy + 1) * 3 + dx + 1) as usize] / norms[k]
                                    * plane[yy][xx];
                            }
                        }
                        v.push(acc);
                    }
                }
                let n = v.iter().map(|t| t * t).sum::<f64>().sqrt();
                if n > 0.0 {
                    v.iter_mut().for_each(|t| *t /= n);
                }
                out.push(v);
            }
        }
        vec![out]
    };

    let (mut pa, mut pb) = (planes(a), planes(b));
    let mut total = 0.0;
    let mut scales = 0;
    for s in 0..3 {
        if s > 0 {
            if pa[0].len() < 2 || pa[0][0].len() < 2 {
                break;
            }
            pa = pa.iter().map(shrink).collect();
            pb = pb.iter().map(shrink).collect();
        }
        let (ea, eb) = (&embed(&pa)[0], &embed(&pb)[0]);
        let mut sq = 0.0;
        let mut count = 0.0;
        for (va, vb) in ea.iter().zip(eb) {
            for (x, y) in va.iter().zip(vb) {
                sq += (x - y) * (x - y);
                count += 1.0;
            }
        }
        total += sq / count;
        scales += 1;
    }
    (total / scales as f64).sqrt()
}

pub fn random_image(rng: &mut impl rand::Rng, w: usize, h: usize) -> RasterImage {
    let px = (0..w * h * 3).map(|_| rng.random::<u8>()).collect();
    RasterImage::from_raw(w, h, px).unwrap()
}
