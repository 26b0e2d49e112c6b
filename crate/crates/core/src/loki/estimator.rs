//! Analytic crop estimator: finds the unoccluded strand core under (or nearest
//! to) the crop centre, reads its pitch from the principal axis and puts the
//! heatmap peak on its centreline.

use super::{Heatmap, LokiError, CROP_CENTER, HEATMAP_SIGMA};
use crate::geom::{fold_180, principal_axis, Point};
use crate::percept::contour::{component_at, components};
use crate::percept::render::RasterImage;

/// Crop -> (orientation, heatmap), the interface of the inspection network.
pub trait Estimator {
    fn estimate(&self, crop: &RasterImage) -> Result<Estimate, LokiError>;
}

/// Crop-pixel radius of the first axis fit, and the half-width of the band the
/// second fit keeps around it.
const SEED_RADIUS: f64 = 20.0;
const BAND: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub theta_hat: f64,
    pub heatmap: Heatmap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticEstimator {
    /// Core/rim split; the midpoint of the two render levels.
    pub core_threshold: u8,
    /// Radius of the neighbourhood used for the principal axis.
    pub pca_radius: f64,
}

impl Default for AnalyticEstimator {
    fn default() -> Self {
        AnalyticEstimator { core_threshold: 198, pca_radius: 45.0 }
    }
}

impl Estimator for AnalyticEstimator {
    fn estimate(&self, crop: &RasterImage) -> Result<Estimate, LokiError> {
        let (w, h) = (crop.width, crop.height);
        let mask = crop.mask(self.core_threshold);
        let c = Point::new(CROP_CENTER as f64, CROP_CENTER as f64);
        let at = |i: usize| Point::new((i % w) as f64, (i / w) as f64);
        // component under the centre, else the one reaching closest to it
        let under = component_at(&mask, w, h, CROP_CENTER * w + CROP_CENTER);
        let comps = if under.is_empty() { components(&mask, w, h) } else { vec![under] };
        if comps.is_empty() {
            return Err(LokiError::EmptyCrop);
        }
        let chosen = comps
            .iter()
            .min_by(|a, b| {
                let da = a.iter().map(|&i| at(i).dist(c)).fold(f64::INFINITY, f64::min);
                let db = b.iter().map(|&i| at(i).dist(c)).fold(f64::INFINITY, f64::min);
                da.partial_cmp(&db).unwrap()
            })
            .expect("nonempty");
        let q = chosen
            .iter()
            .map(|&i| at(i))
            .min_by(|a, b| a.dist(c).partial_cmp(&b.dist(c)).unwrap())
            .expect("component is nonempty");
        // a tight first axis keeps a touching neighbour strand out of the wider fit
        let (m0, a0) = principal_axis(chosen.iter().map(|&i| at(i)).filter(|p| p.dist(q) <= SEED_RADIUS))
            .ok_or(LokiError::EmptyCrop)?;
        let near: Vec<Point> = chosen
            .iter()
            .map(|&i| at(i))
            .filter(|p| p.dist(q) <= self.pca_radius && (*p - m0).cross(a0).abs() <= BAND)
            .collect();
        let (mean, axis) = principal_axis(near.iter().copied()).unwrap_or((m0, a0));
        let beta_hat = axis.axis_angle_deg();
        // recentre on the local stretch of core around the foot point
        let foot0 = mean + axis * (c - mean).dot(axis);
        let local: Vec<Point> = near.iter().copied().filter(|p| (*p - foot0).dot(axis).abs() <= 8.0).collect();
        let m = if local.is_empty() {
            mean
        } else {
            local.iter().fold(Point::new(0.0, 0.0), |a, &p| a + p) * (1.0 / local.len() as f64)
        };
        let foot = m + axis * (c - m).dot(axis);
        let peak = (
            foot.x.round().clamp(0.0, w as f64 - 1.0) as usize,
            foot.y.round().clamp(0.0, h as f64 - 1.0) as usize,
        );
        Ok(Estimate { theta_hat: fold_180(90.0 + beta_hat), heatmap: Heatmap::gaussian(w, h, peak, HEATMAP_SIGMA) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::axis_angle_dist;
    use crate::loki::generator::{generate_crop, CropParams};
    use crate::percept::render::paint_stroke;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn horizontal_stroke_gives_ninety() {
        let mut img = RasterImage::blank(200, 200);
        paint_stroke(&mut img, &[Point::new(-10.0, 100.0), Point::new(210.0, 100.0)], 20.0, 0.6);
        let e = AnalyticEstimator::default().estimate(&img).unwrap();
        assert!((e.theta_hat - 90.0).abs() < 1e-9);
        assert_eq!(e.heatmap.argmax(), (100, 100));
    }

    #[test]
    fn blank_crop_is_an_error() {
        assert!(AnalyticEstimator::default().estimate(&RasterImage::blank(200, 200)).is_err());
    }

    #[test]
    fn tracks_generator_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let est = AnalyticEstimator::default();
        let mut errs: Vec<f64> = (0..200)
            .map(|_| {
                let s = generate_crop(&mut rng, &CropParams::default());
                axis_angle_dist(est.estimate(&s.image).unwrap().theta_hat, s.label_theta)
            })
            .collect();
        errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(errs[100] <= 3.0, "median {}", errs[100]);
    }
}
