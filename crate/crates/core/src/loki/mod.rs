//! Local oriented inspection: synthetic crossing crops, a crop estimator and
//! the coarse-to-fine keypoint refinement.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod estimator;
pub mod generator;

pub use estimator::{AnalyticEstimator, Estimate, Estimator};
pub use generator::{generate_crop, label_for, CropParams, CropSample};

use crate::geom::{fold_180, Point};
use crate::percept::{pca_grasp_angle, RasterImage, DEFAULT_THRESHOLD};

/// Side of the square cut from the global image, pixels.
pub const GLOBAL_CROP: usize = 60;
/// Side of the upscaled crop the estimator sees.
pub const CROP_SIZE: usize = 200;
pub const CROP_CENTER: usize = 100;
pub const HEATMAP_SIGMA: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LokiError {
    #[error("crop holds no strand")]
    EmptyCrop,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl Heatmap {
    pub fn gaussian(width: usize, height: usize, at: (usize, usize), sigma: f64) -> Heatmap {
        let mut data = vec![0.0f32; width * height];
        let k = -0.5 / (sigma * sigma);
        // past 15 sigma the f32 value is exactly zero
        let r = (15.0 * sigma).ceil() as usize;
        let (xs, ys) = (at.0.saturating_sub(r)..(at.0 + r + 1).min(width), at.1.saturating_sub(r)..(at.1 + r + 1).min(height));
        let g = |a: usize, c: usize| {
            let d = a as f64 - c as f64;
            (d * d * k).exp()
        };
        let gx: Vec<f64> = xs.clone().map(|x| g(x, at.0)).collect();
        for y in ys {
            let gy = g(y, at.1);
            for (x, &v) in xs.clone().zip(&gx) {
                data[y * width + x] = (v * gy) as f32;
            }
        }
        Heatmap { width, height, data }
    }

    /// First maximum in raster order, as (u, v).
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, &v) in self.data.iter().enumerate() {
            if v > self.data[best] {
                best = i;
            }
        }
        (best % self.width, best / self.width)
    }
}

/// Global-scale offset for a heatmap peak: gamma * (argmax - centre), with
/// gamma = 60/200, evaluated as one correctly rounded division.
pub fn offset_from_argmax(u: usize, v: usize) -> Point {
    let scale = |a: usize| ((a as i64 - CROP_CENTER as i64) * GLOBAL_CROP as i64) as f64 / CROP_SIZE as f64;
    Point::new(scale(u), scale(v))
}

/// Centre actually used for the crop: the coarse point shifted inward so the
/// whole 60x60 window lies in the image. Returns (centre, clamped).
pub fn crop_center_for(img: &RasterImage, p: Point) -> (Point, bool) {
    let h = GLOBAL_CROP as f64 / 2.0;
    let cx = p.x.clamp(h, img.width as f64 - 1.0 - h);
    let cy = p.y.clamp(h, img.height as f64 - 1.0 - h);
    let c = Point::new(cx, cy);
    (c, c != p)
}

/// Upscaled 200x200 crop, bilinearly sampled on the lattice centre + offset(u, v).
pub fn crop_around(img: &RasterImage, center: Point) -> RasterImage {
    let mut out = RasterImage::blank(CROP_SIZE, CROP_SIZE);
    // the lattice is separable: each column and row has one pair of taps
    let taps = |c: f64| -> Vec<(i64, f64)> {
        (0..CROP_SIZE)
            .map(|a| {
                let q = c + offset_from_argmax(a, 0).x;
                let f = q.floor();
                (f as i64, q - f)
            })
            .collect()
    };
    let xs = taps(center.x);
    let ys = taps(center.y);
    let inside = |t: &[(i64, f64)], n: usize| t[0].0 >= 0 && ((t[CROP_SIZE - 1].0 + 1) as usize) < n;
    if inside(&xs, img.width) && inside(&ys, img.height) {
        let (w, d) = (img.width, &img.data);
        for (v, &(y0, fy)) in ys.iter().enumerate() {
            let row = y0 as usize * w;
            for (u, &(x0, fx)) in xs.iter().enumerate() {
                let i = row + x0 as usize;
                let (a, b, c, e) = (d[i] as f64, d[i + 1] as f64, d[i + w] as f64, d[i + w + 1] as f64);
                let s = a * (1.0 - fx) * (1.0 - fy) + b * fx * (1.0 - fy) + c * (1.0 - fx) * fy + e * fx * fy;
                out.data[v * CROP_SIZE + u] = (s + 0.5) as u8;
            }
        }
        return out;
    }
    for (v, &(y0, fy)) in ys.iter().enumerate() {
        for (u, &(x0, fx)) in xs.iter().enumerate() {
            let t = |x, y| img.at(x, y) as f64;
            let s = t(x0, y0) * (1.0 - fx) * (1.0 - fy)
                + t(x0 + 1, y0) * fx * (1.0 - fy)
                + t(x0, y0 + 1) * (1.0 - fx) * fy
                + t(x0 + 1, y0 + 1) * fx * fy;
            // s is in [0, 255]; the cast truncates and saturates
            out.set(u, v, (s + 0.5) as u8);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspRefinement {
    pub theta_hat: f64,
    pub offset: Point,
    pub refined_point: Point,
    /// The crop window was shifted inward at an image border.
    pub clamped: bool,
    /// The estimator found nothing: zero offset and an analytic angle.
    pub fallback: bool,
}

pub fn refine_keypoint(img: &RasterImage, p: Point, est: &impl Estimator) -> GraspRefinement {
    let (center, clamped) = crop_center_for(img, p);
    let crop = crop_around(img, center);
    match est.estimate(&crop) {
        Ok(e) => {
            let (u, v) = e.heatmap.argmax();
            let offset = offset_from_argmax(u, v);
            GraspRefinement { theta_hat: e.theta_hat, offset, refined_point: center + offset, clamped, fallback: false }
        }
        Err(LokiError::EmptyCrop) => {
            let theta = pca_grasp_angle(img, p, GLOBAL_CROP as f64, DEFAULT_THRESHOLD).unwrap_or(90.0);
            GraspRefinement {
                theta_hat: fold_180(theta),
                offset: Point::new(0.0, 0.0),
                refined_point: p,
                clamped,
                fallback: true,
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CropLabel {
    beta: f64,
    u: usize,
    v: usize,
    theta: f64,
}

/// Writes `n` samples as `crop_#####.pgm` plus `crop_#####.json` label files.
/// Sample `i` uses its own stream of the seeded generator.
pub fn export_dataset(dir: &Path, n: usize, seed: u64, params: &CropParams) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for i in 0..n {
        let s = sample(seed, i as u64, params);
        std::fs::write(dir.join(format!("crop_{i:05}.pgm")), s.image.to_pgm())?;
        let label = CropLabel { beta: s.beta, u: s.grasp_point.0, v: s.grasp_point.1, theta: s.label_theta };
        std::fs::write(dir.join(format!("crop_{i:05}.json")), serde_json::to_string(&label)? + "\n")?;
    }
    Ok(())
}

/// Sample `index` of the dataset for `seed`.
pub fn sample(seed: u64, index: u64, params: &CropParams) -> CropSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    generate_crop(&mut rng, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::CableDiagram;
    use crate::percept::render;

    #[test]
    fn offset_examples() {
        assert_eq!(offset_from_argmax(100, 100), Point::new(0.0, 0.0));
        assert_eq!(offset_from_argmax(150, 100), Point::new(15.0, 0.0));
        assert_eq!(offset_from_argmax(120, 140), Point::new(6.0, 12.0));
    }

    #[test]
    fn refinement_snaps_onto_strand() {
        let d = CableDiagram::straight(Point::new(100.0, 240.0), Point::new(500.0, 240.0));
        let img = render(&d, 6.0);
        let r = refine_keypoint(&img, Point::new(300.0, 245.0), &AnalyticEstimator::default());
        assert!(!r.fallback && !r.clamped);
        assert!((r.refined_point.y - 240.0).abs() <= 0.6, "{:?}", r.refined_point);
        assert!((r.theta_hat - 90.0).abs() < 2.0);
    }

    #[test]
    fn border_crops_are_clamped() {
        let img = RasterImage::blank(640, 480);
        let r = refine_keypoint(&img, Point::new(3.0, 470.0), &AnalyticEstimator::default());
        assert!(r.clamped && r.fallback);
        assert_eq!(r.refined_point, Point::new(3.0, 470.0));
    }

    #[test]
    fn dataset_is_reproducible() {
        let p = CropParams::default();
        assert_eq!(sample(1, 7, &p), sample(1, 7, &p));
        assert_ne!(sample(1, 7, &p).beta, sample(1, 8, &p).beta);
    }
}
