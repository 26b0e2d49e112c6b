//! Keypoint oracle standing in for the learned keypoint network, plus the
//! analytic grasp angles used without the local inspection model.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::render::RasterImage;
use super::PerceptError;
use crate::diagram::{CableDiagram, WORKSPACE};
use crate::geom::{fold_180, principal_axis, Point};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keypoints {
    pub p_l: Point,
    pub p_r: Point,
    pub p_pull: Point,
    pub p_hold: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerceptionNoise {
    pub keypoint_sigma: f64,
    pub density_flip_prob: f64,
}

impl Default for PerceptionNoise {
    fn default() -> Self {
        PerceptionNoise { keypoint_sigma: 8.0, density_flip_prob: 0.05 }
    }
}

impl PerceptionNoise {
    pub fn oracle() -> Self {
        PerceptionNoise { keypoint_sigma: 0.0, density_flip_prob: 0.0 }
    }
}

/// Perturbs `p` by isotropic Gaussian noise and clamps it to the workspace.
pub fn noisy_point(p: Point, sigma: f64, rng: &mut impl Rng) -> Point {
    if sigma <= 0.0 {
        return p;
    }
    let n = Normal::new(0.0, sigma).expect("sigma is finite and positive");
    WORKSPACE.clamp(Point::new(p.x + n.sample(rng), p.y + n.sample(rng)))
}

/// True endpoints and (if given) the planned pull/hold points, each perturbed
/// independently. Without a plan the pull/hold slots carry the endpoints.
pub fn hulk_keypoints(
    d: &CableDiagram,
    pull_hold: Option<(Point, Point)>,
    noise: &PerceptionNoise,
    rng: &mut impl Rng,
) -> Keypoints {
    let (pull, hold) = pull_hold.unwrap_or((d.endpoint_left(), d.endpoint_right()));
    let s = noise.keypoint_sigma;
    Keypoints {
        p_l: noisy_point(d.endpoint_left(), s, rng),
        p_r: noisy_point(d.endpoint_right(), s, rng),
        p_pull: noisy_point(pull, s, rng),
        p_hold: noisy_point(hold, s, rng),
    }
}

/// theta_pull from the arctangent of the hold-to-pull slope, theta_hold 90 deg
/// later, both folded into [0, 180).
pub fn grasp_angles_analytic(k: &Keypoints) -> Result<(f64, f64), PerceptError> {
    let d = k.p_pull - k.p_hold;
    if d.norm() == 0.0 {
        return Err(PerceptError::DegenerateKeypoints);
    }
    let pull = if d.x == 0.0 { 90.0 } else { (d.y / d.x).atan().to_degrees() };
    Ok((fold_180(pull), fold_180(pull + 90.0)))
}

/// Grasp angle orthogonal to the principal axis of foreground pixels in a
/// square crop of side `crop_size` around `p`.
pub fn pca_grasp_angle(img: &RasterImage, p: Point, crop_size: f64, threshold: u8) -> Result<f64, PerceptError> {
    let h = crop_size / 2.0;
    let x0 = (p.x - h).floor().max(0.0) as usize;
    let y0 = (p.y - h).floor().max(0.0) as usize;
    let x1 = ((p.x + h).ceil() as usize).min(img.width - 1);
    let y1 = ((p.y + h).ceil() as usize).min(img.height - 1);
    let mut pts = Vec::new();
    for y in y0..=y1 {
        for x in x0..=x1 {
            if img.get(x, y) >= threshold {
                pts.push(Point::new(x as f64, y as f64));
            }
        }
    }
    if pts.len() < 3 {
        return Err(PerceptError::EmptyCrop);
    }
    let (_, axis) = principal_axis(pts.into_iter()).ok_or(PerceptError::EmptyCrop)?;
    Ok(fold_180(axis.axis_angle_deg() + 90.0))
}

pub fn reidemeister_angles(
    img: &RasterImage,
    k: &Keypoints,
    crop_size: f64,
    threshold: u8,
) -> Result<(f64, f64), PerceptError> {
    Ok((pca_grasp_angle(img, k.p_l, crop_size, threshold)?, pca_grasp_angle(img, k.p_r, crop_size, threshold)?))
}
