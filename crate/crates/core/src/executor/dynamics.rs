//! Stochastic grasp and release model layered over the deterministic moves.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::diagram::surgery::{nearest_on_cable, point_at, CablePos};
use crate::diagram::CableDiagram;
use crate::geom::{arc_lengths, axis_angle_dist, fold_180, Point};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DynamicsConfig {
    pub cable_width: f64,
    /// A grasp closes on the cable only within this distance of a centreline.
    pub grasp_radius: f64,
    /// Grasps off the intended strand by more than this many cable widths of
    /// arc length land on the wrong strand.
    pub wrong_strand_window: f64,
    /// Jaw misalignment tolerated before slips start, degrees.
    pub angle_tolerance: f64,
    /// Slip probability at a 90 degree misalignment.
    pub slip_gain: f64,
    pub wedge_base_prob: f64,
    pub wedge_density_gain: f64,
    /// Extra wedge probability at a 90 degree misalignment.
    pub wedge_angle_gain: f64,
    /// Radius for counting strands around a grasp.
    pub strand_radius: f64,
    /// Pull and hold jaws closer than this may collide...
    pub collision_dist: f64,
    /// ...with this probability.
    pub near_collision_prob: f64,
    /// Collision probability per extra local strand at a 90 degree misalignment.
    pub collision_gain: f64,
    /// Chance that a wrong-strand pull snags a new curl.
    pub snag_prob: f64,
    /// Fraction of the pull an unpinned cable is dragged by.
    pub drag_frac: f64,
    pub springout_prob: f64,
    pub springout_range: (f64, f64),
    /// Positional noise added on every release, px.
    pub drift_sigma: f64,
    /// Extra miss chance for grasps farther than the workspace threshold from the centre.
    pub far_miss_prob: f64,
    /// Re-Posing cannot grasp a centre farther than this from `w_c`.
    pub reach_radius: f64,
    pub recovery_success_prob: f64,
    pub max_recovery_attempts: usize,
    pub pull_magnitude: f64,
    /// Global cap on actions per trial.
    pub max_actions: usize,
    pub seed: u64,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig {
            cable_width: 6.0,
            grasp_radius: 10.0,
            wrong_strand_window: 4.0,
            angle_tolerance: 25.0,
            slip_gain: 0.5,
            wedge_base_prob: 0.02,
            wedge_density_gain: 0.06,
            wedge_angle_gain: 0.15,
            strand_radius: 15.0,
            collision_dist: 12.0,
            near_collision_prob: 0.3,
            collision_gain: 0.02,
            snag_prob: 0.5,
            drag_frac: 0.3,
            springout_prob: 0.04,
            springout_range: (200.0, 400.0),
            drift_sigma: 2.0,
            far_miss_prob: 0.5,
            reach_radius: 230.0,
            recovery_success_prob: 0.85,
            max_recovery_attempts: 3,
            pull_magnitude: 80.0,
            max_actions: 40,
            seed: 0,
        }
    }
}

impl DynamicsConfig {
    /// Every stochastic failure switched off.
    pub fn noiseless() -> Self {
        DynamicsConfig {
            angle_tolerance: 90.0,
            slip_gain: 0.0,
            wedge_base_prob: 0.0,
            wedge_density_gain: 0.0,
            wedge_angle_gain: 0.0,
            collision_dist: 0.0,
            near_collision_prob: 0.0,
            collision_gain: 0.0,
            snag_prob: 0.0,
            springout_prob: 0.0,
            drift_sigma: 0.0,
            far_miss_prob: 0.0,
            reach_radius: f64::INFINITY,
            recovery_success_prob: 1.0,
            ..DynamicsConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let probs = [
            ("slip_gain", self.slip_gain),
            ("wedge_base_prob", self.wedge_base_prob),
            ("snag_prob", self.snag_prob),
            ("near_collision_prob", self.near_collision_prob),
            ("springout_prob", self.springout_prob),
            ("far_miss_prob", self.far_miss_prob),
            ("recovery_success_prob", self.recovery_success_prob),
            ("drag_frac", self.drag_frac),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("{name} = {p} is not in [0, 1]"));
            }
        }
        if !(self.grasp_radius > 0.0) || !(self.cable_width > 0.0) {
            return Err("grasp_radius and cable_width must be positive".into());
        }
        if self.springout_range.0 > self.springout_range.1 {
            return Err("springout_range is reversed".into());
        }
        Ok(())
    }
}

/// Where a jaw closed, if anywhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum GraspOutcome {
    /// Nothing under the jaws.
    Miss,
    /// Closed on the cable but slid off.
    Slip { s: f64 },
    Wrong { s: f64 },
    Ok { s: f64 },
}

impl GraspOutcome {
    pub fn is_ok(&self) -> bool {
        matches!(self, GraspOutcome::Ok { .. })
    }

    pub fn contact(&self) -> Option<f64> {
        match *self {
            GraspOutcome::Miss => None,
            GraspOutcome::Slip { s } | GraspOutcome::Wrong { s } | GraspOutcome::Ok { s } => Some(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspReport {
    pub outcome: GraspOutcome,
    pub distance: f64,
    pub angle_error: f64,
    pub strands: usize,
}

/// Jaw angle that encloses the strand at `at` orthogonally.
pub fn ideal_grasp_angle(d: &CableDiagram, at: CablePos) -> f64 {
    let pl = d.polyline();
    let t = pl[at.segment + 1] - pl[at.segment];
    fold_180(t.axis_angle_deg() + 90.0)
}

/// Number of separate cable stretches passing within `radius` of `p`.
pub fn local_strand_count(d: &CableDiagram, p: Point, radius: f64) -> usize {
    let pl = d.polyline();
    let acc = arc_lengths(pl);
    let mut count = 0;
    let mut last_end: Option<f64> = None;
    for i in 0..pl.len() - 1 {
        let len = acc[i + 1] - acc[i];
        if len <= 0.0 {
            continue;
        }
        let u = (pl[i + 1] - pl[i]) * (1.0 / len);
        let t0 = (p - pl[i]).dot(u);
        let h = (p - pl[i] - u * t0).norm();
        if h > radius {
            continue;
        }
        let half = (radius * radius - h * h).sqrt();
        let (lo, hi) = ((t0 - half).max(0.0), (t0 + half).min(len));
        if lo > hi {
            continue;
        }
        if last_end.is_none_or(|e| acc[i] + lo - e > 0.5) {
            count += 1;
        }
        last_end = Some(acc[i] + hi);
    }
    count
}

/// Decides where a grasp at `p` with jaw angle `theta` closes. `intended` is
/// the arc position the planner meant, if it meant one.
pub fn assess_grasp(
    d: &CableDiagram,
    p: Point,
    theta: f64,
    intended: Option<f64>,
    cfg: &DynamicsConfig,
    far: bool,
    rng: &mut impl Rng,
) -> GraspReport {
    let (pos, dist, s) = nearest_on_cable(d, p);
    let angle_error = axis_angle_dist(theta, ideal_grasp_angle(d, pos));
    let strands = local_strand_count(d, point_at(d, pos), cfg.strand_radius);
    let outcome = if dist > cfg.grasp_radius {
        GraspOutcome::Miss
    } else if far && cfg.far_miss_prob > 0.0 && rng.random_bool(cfg.far_miss_prob) {
        GraspOutcome::Miss
    } else if intended.is_some_and(|i| (s - i).abs() > cfg.wrong_strand_window * cfg.cable_width) {
        GraspOutcome::Wrong { s }
    } else {
        let excess = (angle_error - cfg.angle_tolerance).max(0.0);
        let span = (90.0 - cfg.angle_tolerance).max(1e-9);
        let p_slip = (cfg.slip_gain * excess / span).clamp(0.0, 1.0);
        if p_slip > 0.0 && rng.random_bool(p_slip) {
            GraspOutcome::Slip { s }
        } else {
            GraspOutcome::Ok { s }
        }
    };
    GraspReport { outcome, distance: dist, angle_error, strands }
}

pub fn wedge_probability(r: &GraspReport, cfg: &DynamicsConfig) -> f64 {
    let extra = r.strands.saturating_sub(1) as f64;
    (cfg.wedge_base_prob + cfg.wedge_density_gain * extra + cfg.wedge_angle_gain * r.angle_error / 90.0).clamp(0.0, 1.0)
}

pub fn collision_probability(pull: &GraspReport, hold: &GraspReport, cfg: &DynamicsConfig) -> f64 {
    let extra = (pull.strands + hold.strands).saturating_sub(2) as f64;
    let err = (pull.angle_error + hold.angle_error) / 180.0;
    (cfg.collision_gain * extra * err).clamp(0.0, 1.0)
}

/// Isotropic Gaussian jitter, zero when `sigma` is zero.
pub fn drift(sigma: f64, rng: &mut impl Rng) -> Point {
    if sigma <= 0.0 {
        return Point::new(0.0, 0.0);
    }
    let n = Normal::new(0.0, sigma).expect("finite sigma");
    Point::new(n.sample(rng), n.sample(rng))
}

/// Random displacement of a springing cable.
pub fn springout_vector(range: (f64, f64), rng: &mut impl Rng) -> Point {
    let m = if range.1 > range.0 { rng.random_range(range.0..=range.1) } else { range.0 };
    let a = rng.random_range(0.0..std::f64::consts::TAU);
    Point::new(a.cos(), a.sin()) * m
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn line() -> CableDiagram {
        CableDiagram::straight(Point::new(100.0, 240.0), Point::new(500.0, 240.0))
    }

    #[test]
    fn far_grasp_misses() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = assess_grasp(&line(), Point::new(300.0, 340.0), 90.0, None, &DynamicsConfig::default(), false, &mut rng);
        assert_eq!(r.outcome, GraspOutcome::Miss);
    }

    #[test]
    fn aligned_grasp_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = assess_grasp(&line(), Point::new(300.0, 243.0), 90.0, Some(200.0), &DynamicsConfig::default(), false, &mut rng);
        assert_eq!(r.outcome, GraspOutcome::Ok { s: 200.0 });
        assert_eq!((r.strands, r.angle_error), (1, 0.0));
    }

    #[test]
    fn off_target_arc_is_wrong_strand() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = assess_grasp(&line(), Point::new(300.0, 240.0), 90.0, Some(100.0), &DynamicsConfig::default(), false, &mut rng);
        assert!(matches!(r.outcome, GraspOutcome::Wrong { .. }));
    }

    #[test]
    fn noiseless_never_slips() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = DynamicsConfig::noiseless();
        for k in 0..100 {
            let r = assess_grasp(&line(), Point::new(300.0, 240.0), k as f64 * 1.8, None, &cfg, true, &mut rng);
            assert!(r.outcome.is_ok());
            assert_eq!(wedge_probability(&r, &cfg), 0.0);
        }
        cfg.validate().unwrap();
        DynamicsConfig::default().validate().unwrap();
    }

    #[test]
    fn strand_count_sees_parallel_strands() {
        let d = CableDiagram::new_unbounded(
            vec![Point::new(100.0, 240.0), Point::new(400.0, 240.0), Point::new(400.0, 250.0), Point::new(100.0, 250.0)],
            vec![],
        )
        .unwrap();
        assert_eq!(local_strand_count(&d, Point::new(200.0, 245.0), 15.0), 2);
        assert_eq!(local_strand_count(&line(), Point::new(200.0, 245.0), 15.0), 1);
    }
}
