//! Eccentricity-dependent acuity falloff for visualising retinal images.
//!
//! Blur law: Gaussian with `sigma = mar(e) / 2` degrees, converted to
//! pixels with the image's mean angular pitch, applied as a separable
//! two-pass filter whose width varies per output pixel.

use super::image::{RetinalImage, RgbImage};
use crate::perception_model::{mar, AcuityModel};

const MIN_SIGMA_PX: f64 = 0.3;

fn sigma_px(acuity: &AcuityModel, ecc_deg: f64, deg_per_px: f64) -> f64 {
    mar(acuity, ecc_deg) / 2.0 / deg_per_px
}

fn blur_1d(src: &[f64], len: usize, stride: usize, count: usize, other_stride: usize, sigmas: &dyn Fn(usize, usize) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; src.len()];
    for line in 0..count {
        for i in 0..len {
            let s = sigmas(line, i);
            let base = line * other_stride;
            let at = |j: usize| base + j * stride;
            if s < MIN_SIGMA_PX {
                for k in 0..3 {
                    out[at(i) * 3 + k] = src[at(i) * 3 + k];
                }
                continue;
            }
            let radius = (3.0 * s).ceil() as isize;
            let mut acc = [0.0; 3];
            let mut wsum = 0.0;
            for d in -radius..=radius {
                let j = (i as isize + d).clamp(0, len as isize - 1) as usize;
                let w = (-(d * d) as f64 / (2.0 * s * s)).exp();
                wsum += w;
                for k in 0..3 {
                    acc[k] += w * src[at(j) * 3 + k];
                }
            }
            for k in 0..3 {
                out[at(i) * 3 + k] = acc[k] / wsum;
            }
        }
    }
    out
}

/// Blurs `img` so detail finer than the local MAR is suppressed; the pixel
/// at the fixation point keeps the foveal MAR.
pub fn foveate(img: &RetinalImage, acuity: &AcuityModel) -> RetinalImage {
    let (w, h) = (img.width(), img.height());
    let geo = img.geometry;
    let px_x = geo.fov_h_deg / w as f64;
    let px_y = geo.fov_v_deg / h as f64;
    let ecc: Vec<f64> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| geo.eccentricity_deg(x as f64, y as f64, w, h))
        .collect();
    let src: Vec<f64> = img.image.data.iter().map(|&v| v as f64).collect();
    // rows: line = y, index = x
    let horiz = blur_1d(&src, w, 1, h, w, &|y, x| sigma_px(acuity, ecc[y * w + x], px_x));
    // columns: line = x, index = y
    let vert = blur_1d(&horiz, h, w, w, 1, &|x, y| sigma_px(acuity, ecc[y * w + x], px_y));
    let data = vert.iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect();
    RetinalImage {
        image: RgbImage {
            width: w,
            height: h,
            data,
        },
        geometry: geo,
        gaze: img.gaze,
    }
}
