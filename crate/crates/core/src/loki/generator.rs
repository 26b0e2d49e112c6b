//! Synthetic crossing crops: two thick curved strokes, the top one drawn last,
//! labelled with the top stroke pitch and the grasp point on its centreline.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Heatmap, CROP_CENTER, CROP_SIZE, HEATMAP_SIGMA};
use crate::geom::{fold_180, project_to_segment, Point};
use crate::percept::render::{paint_stroke, RasterImage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CropParams {
    /// Stroke width range in crop pixels.
    pub width: (f64, f64),
    /// Pitch range of the top stroke, degrees.
    pub beta: (f64, f64),
    /// Largest perpendicular offset of the top centreline from the crop centre,
    /// as a fraction of the top core radius.
    pub center_offset: f64,
    /// Largest shift of the crossing along the top stroke, crop pixels.
    pub along_offset: f64,
    /// Largest bend, as sagitta over a 100 px chord, crop pixels.
    pub curvature: f64,
    pub core_frac: f64,
}

impl Default for CropParams {
    fn default() -> Self {
        CropParams {
            width: (14.0, 24.0),
            beta: (0.0, 180.0),
            center_offset: 0.8,
            along_offset: 20.0,
            curvature: 0.0,
            core_frac: 0.6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CropSample {
    pub image: RasterImage,
    pub beta: f64,
    pub grasp_point: (usize, usize),
    pub heatmap: Heatmap,
    pub label_theta: f64,
}

/// Gripper orientation label for a top stroke at pitch `beta`.
pub fn label_for(beta: f64) -> f64 {
    fold_180(90.0 + beta)
}

/// Samples a bent centreline through `through` with direction angle `angle`.
fn centreline(through: Point, angle_deg: f64, sagitta: f64) -> Vec<Point> {
    let dir = Point::new(angle_deg.to_radians().cos(), angle_deg.to_radians().sin());
    let n = dir.perp();
    // sagitta s over a chord of 100 gives y = k t^2 with k = s / 2500
    let k = sagitta / 2500.0;
    (-40..=40)
        .map(|i| {
            let t = i as f64 * 5.0;
            through + dir * t + n * (k * t * t)
        })
        .collect()
}

fn nearest_on(pts: &[Point], p: Point) -> Point {
    let mut best = (f64::INFINITY, pts[0]);
    for s in pts.windows(2) {
        let (t, d) = project_to_segment(p, s[0], s[1]);
        if d < best.0 {
            best = (d, s[0].lerp(s[1], t));
        }
    }
    best.1
}

fn uniform(rng: &mut impl Rng, r: (f64, f64)) -> f64 {
    if r.1 > r.0 {
        rng.random_range(r.0..r.1)
    } else {
        r.0
    }
}

pub fn generate_crop(rng: &mut impl Rng, params: &CropParams) -> CropSample {
    let c = Point::new(CROP_CENTER as f64, CROP_CENTER as f64);
    let beta = fold_180(uniform(rng, params.beta));
    let w_top = uniform(rng, params.width);
    let w_bot = uniform(rng, params.width);
    let bend = |rng: &mut dyn rand::RngCore| {
        if params.curvature > 0.0 {
            rng.random_range(-params.curvature..=params.curvature)
        } else {
            0.0
        }
    };

    // bottom stroke crosses the top one at a clear angle near the centre
    let cross = rng.random_range(35.0..145.0);
    let along = rng.random_range(-params.along_offset..=params.along_offset);
    let dir_top = Point::new(beta.to_radians().cos(), beta.to_radians().sin());
    let core_r = w_top / 2.0 * params.core_frac;
    let perp = rng.random_range(-1.0..=1.0) * params.center_offset * core_r;
    let top_through = c + dir_top.perp() * perp;
    let bottom_through = top_through + dir_top * along;
    let bottom = centreline(bottom_through, beta + cross, bend(rng));
    let top = centreline(top_through, beta, bend(rng));

    let mut image = RasterImage::blank(CROP_SIZE, CROP_SIZE);
    paint_stroke(&mut image, &bottom, w_bot, params.core_frac);
    paint_stroke(&mut image, &top, w_top, params.core_frac);

    let g = nearest_on(&top, c);
    let grasp_point = (
        (g.x.round().clamp(0.0, CROP_SIZE as f64 - 1.0)) as usize,
        (g.y.round().clamp(0.0, CROP_SIZE as f64 - 1.0)) as usize,
    );
    let heatmap = Heatmap::gaussian(CROP_SIZE, CROP_SIZE, grasp_point, HEATMAP_SIGMA);
    CropSample { image, beta, grasp_point, heatmap, label_theta: label_for(beta) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn labels() {
        assert_eq!(label_for(0.0), 90.0);
        assert_eq!(label_for(30.0), 120.0);
        assert_eq!(label_for(90.0), 0.0);
    }

    #[test]
    fn centred_stroke_labels_centre() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = CropParams { center_offset: 0.0, beta: (20.0, 20.0), ..CropParams::default() };
        let s = generate_crop(&mut rng, &p);
        assert_eq!(s.grasp_point, (100, 100));
        assert_eq!(s.heatmap.argmax(), (100, 100));
        assert_eq!(s.label_theta, 110.0);
    }

    #[test]
    fn sample_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let s = generate_crop(&mut rng, &CropParams::default());
            assert_eq!(s.heatmap.argmax(), s.grasp_point);
            assert!((0.0..180.0).contains(&s.label_theta));
            // the crop centre lies on the top stroke's core
            assert_eq!(s.image.get(100, 100), crate::percept::CORE_VALUE);
        }
    }
}
