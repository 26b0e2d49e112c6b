//! Progress sensing over observation histories, the wedge and workspace
//! checks, and the two recovery primitives.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::executor::{Arm, ArmAction, BilateralAction, MoveKind};
use crate::geom::{Point, Rect};
use crate::loki::GraspRefinement;
use crate::percept::{Comparator, Contour, Observation};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpidermanError {
    #[error("cable contour is empty")]
    EmptyContour,
    #[error("observation t'={got} does not follow t'={last}")]
    OutOfOrder { last: usize, got: usize },
}

/// Region the arms may work in. Parking poses lie outside it.
pub const CABLE_AREA: Rect = Rect { min: Point { x: 50.0, y: 10.0 }, max: Point { x: 590.0, y: 470.0 } };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceAnchors {
    pub w_l: Point,
    pub w_c: Point,
    pub w_r: Point,
}

impl Default for WorkspaceAnchors {
    fn default() -> Self {
        WorkspaceAnchors { w_l: Point::new(100.0, 240.0), w_c: Point::new(320.0, 240.0), w_r: Point::new(540.0, 240.0) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GripperPose {
    pub g_l: Point,
    pub g_r: Point,
    pub wedged_l: bool,
    pub wedged_r: bool,
}

impl Default for GripperPose {
    fn default() -> Self {
        GripperPose { g_l: Point::new(25.0, 240.0), g_r: Point::new(615.0, 240.0), wedged_l: false, wedged_r: false }
    }
}

impl GripperPose {
    pub fn parking(&self, arm: Arm) -> Point {
        match arm {
            Arm::Left => self.g_l,
            Arm::Right => self.g_r,
        }
    }

    pub fn wedged(&self, arm: Arm) -> bool {
        match arm {
            Arm::Left => self.wedged_l,
            Arm::Right => self.wedged_r,
        }
    }

    pub fn set_wedged(&mut self, arm: Arm, v: bool) {
        match arm {
            Arm::Left => self.wedged_l = v,
            Arm::Right => self.wedged_r = v,
        }
    }

    /// The arm flagged wedged, left first.
    pub fn stuck_arm(&self) -> Option<Arm> {
        if self.wedged_l {
            Some(Arm::Left)
        } else if self.wedged_r {
            Some(Arm::Right)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub wedge_px: f64,
    pub workspace_px: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { wedge_px: 20.0, workspace_px: 200.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub t: usize,
    pub observation: Observation,
    pub crossings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationHistory {
    pub entries: Vec<HistoryEntry>,
    pub reference: Observation,
}

impl ObservationHistory {
    pub fn new(reference: Observation) -> Self {
        ObservationHistory { entries: Vec::new(), reference }
    }

    pub fn push(&mut self, t: usize, observation: Observation, crossings: usize) -> Result<(), SpidermanError> {
        if let Some(last) = self.entries.last() {
            if t <= last.t {
                return Err(SpidermanError::OutOfOrder { last: last.t, got: t });
            }
        }
        self.entries.push(HistoryEntry { t, observation, crossings });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Observation `back` entries before the latest.
    pub fn back(&self, back: usize) -> Option<&Observation> {
        self.entries.len().checked_sub(back + 1).map(|i| &self.entries[i].observation)
    }
}

pub fn rotate_condition(h: &ObservationHistory, cmp: &Comparator) -> bool {
    match (h.back(0), h.back(1), h.back(2)) {
        (Some(a), Some(b), Some(c)) => cmp.denser(a, b) && cmp.denser(b, c),
        _ => false,
    }
}

/// Both branches of the termination check, with and without classifier noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TerminationVerdict {
    pub no_progress: bool,
    pub reference: bool,
    pub no_progress_exact: bool,
    pub reference_exact: bool,
}

impl TerminationVerdict {
    pub fn fires(&self) -> bool {
        self.no_progress || self.reference
    }

    /// The verdict fired only because of a flipped comparison.
    pub fn false_positive(&self) -> bool {
        (self.no_progress && !self.no_progress_exact) || (self.reference && !self.reference_exact)
    }
}

pub fn termination_verdict(h: &ObservationHistory, cmp: &Comparator) -> TerminationVerdict {
    let exact = Comparator { flip_prob: 0.0, forced: Default::default(), ..*cmp };
    let Some(now) = h.back(0) else {
        return TerminationVerdict::default();
    };
    let (no_progress, no_progress_exact) = match h.back(5) {
        Some(old) => (cmp.not_looser(now, old), exact.not_looser(now, old)),
        None => (false, false),
    };
    TerminationVerdict {
        no_progress,
        reference: cmp.denser(&h.reference, now),
        no_progress_exact,
        reference_exact: exact.denser(&h.reference, now),
    }
}

pub fn termination_condition(h: &ObservationHistory, cmp: &Comparator) -> bool {
    termination_verdict(h, cmp).fires()
}

pub fn wedged_condition(p_c: Point, g: &GripperPose, threshold: f64) -> bool {
    p_c.dist(g.g_l).min(p_c.dist(g.g_r)) < threshold
}

pub fn leaving_workspace_condition(p_c: Point, w_c: Point, threshold: f64) -> bool {
    p_c.dist(w_c) > threshold
}

/// Right arm grasps the configuration centre and carries it to `w_c`,
/// turning it over if `rotate`.
pub fn plan_reposing(p_c: Point, refinement: Option<&GraspRefinement>, theta: f64, anchors: &WorkspaceAnchors, rotate: bool) -> BilateralAction {
    let (at, theta) = match refinement {
        Some(r) => (p_c + r.offset, r.theta_hat),
        None => (p_c, theta),
    };
    let kind = if rotate { MoveKind::ReposingRotation } else { MoveKind::ReposingTranslation };
    let a = ArmAction::grasp_pull(at, theta, anchors.w_c - p_c, if rotate { 180.0 } else { 0.0 });
    BilateralAction::with_arm(kind, Arm::Right, a)
}

fn home(anchors: &WorkspaceAnchors, arm: Arm) -> Point {
    match arm {
        Arm::Left => anchors.w_l,
        Arm::Right => anchors.w_r,
    }
}

/// First recovery step: the stuck arm carries the cable from its home point
/// to the workspace centre and releases.
pub fn wedged_carry(anchors: &WorkspaceAnchors, stuck: Arm) -> BilateralAction {
    let from = home(anchors, stuck);
    let a = ArmAction::grasp_pull(from, 0.0, anchors.w_c - from, 0.0);
    BilateralAction::with_arm(MoveKind::WedgedRecoveryStep, stuck, a)
}

/// Contour point farthest towards the side opposite the stuck arm.
pub fn wedged_hold_point(contour: &Contour, anchors: &WorkspaceAnchors, stuck: Arm) -> Result<Point, SpidermanError> {
    let target = home(anchors, stuck.other());
    contour
        .points
        .iter()
        .copied()
        .min_by(|a, b| a.dist(target).partial_cmp(&b.dist(target)).unwrap())
        .ok_or(SpidermanError::EmptyContour)
}

/// Second recovery step: the free arm pins the cable at `hold` while the stuck
/// arm returns home without grasping.
pub fn wedged_release(hold: Point, refinement: Option<&GraspRefinement>, theta: f64, anchors: &WorkspaceAnchors, stuck: Arm) -> BilateralAction {
    let (at, theta) = match refinement {
        Some(r) => (hold + r.offset, r.theta_hat),
        None => (hold, theta),
    };
    let pin = ArmAction::hold(at, theta);
    let back = ArmAction::travel(anchors.w_c, home(anchors, stuck));
    match stuck {
        Arm::Left => BilateralAction { kind: MoveKind::WedgedRecoveryStep, left: Some(back), right: Some(pin) },
        Arm::Right => BilateralAction { kind: MoveKind::WedgedRecoveryStep, left: Some(pin), right: Some(back) },
    }
}

/// Both recovery steps from a contour observed with the cable at the centre.
pub fn plan_wedged_recovery(
    contour: &Contour,
    g: &GripperPose,
    anchors: &WorkspaceAnchors,
    refinement: Option<&GraspRefinement>,
    theta: f64,
) -> Result<[BilateralAction; 2], SpidermanError> {
    let stuck = g.stuck_arm().expect("plan_wedged_recovery needs a wedged arm");
    let hold = wedged_hold_point(contour, anchors, stuck)?;
    Ok([wedged_carry(anchors, stuck), wedged_release(hold, refinement, theta, anchors, stuck)])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist(ds: &[f64]) -> ObservationHistory {
        let mut h = ObservationHistory::new(Observation { id: crate::percept::REFERENCE_ID, density: 1.4 });
        for (i, &d) in ds.iter().enumerate() {
            h.push(i, Observation { id: i as u64, density: d }, 0).unwrap();
        }
        h
    }

    #[test]
    fn rotate_examples() {
        let c = Comparator::exact();
        assert!(rotate_condition(&hist(&[3.0, 4.0, 5.0]), &c));
        assert!(!rotate_condition(&hist(&[5.0, 4.0, 3.0]), &c));
        assert!(!rotate_condition(&hist(&[3.0, 4.0]), &c));
    }

    #[test]
    fn termination_examples() {
        let c = Comparator::exact();
        assert!(termination_condition(&hist(&[0.05]), &c));
        let v = termination_verdict(&hist(&[4.0; 6]), &c);
        assert!(v.no_progress && !v.reference);
        assert!(!termination_condition(&hist(&[6.2, 5.2, 4.3]), &c));
        assert!(!termination_condition(&hist(&[4.0; 5]), &c));
    }

    #[test]
    fn history_is_ordered() {
        let mut h = hist(&[1.0, 2.0]);
        assert!(h.push(1, Observation { id: 9, density: 0.0 }, 0).is_err());
    }

    #[test]
    fn wedge_and_workspace_examples() {
        let g = GripperPose { g_l: Point::new(110.0, 100.0), g_r: Point::new(600.0, 100.0), ..GripperPose::default() };
        assert!(wedged_condition(Point::new(100.0, 100.0), &g, 20.0));
        let g2 = GripperPose { g_l: Point::new(130.0, 100.0), ..g };
        assert!(!wedged_condition(Point::new(100.0, 100.0), &g2, 20.0));
        let g3 = GripperPose { g_l: Point::new(80.0, 100.0), g_r: Point::new(120.0, 100.0), ..g };
        assert!(!wedged_condition(Point::new(100.0, 100.0), &g3, 20.0));

        let w_c = Point::new(320.0, 240.0);
        assert!(leaving_workspace_condition(Point::new(620.0, 240.0), w_c, 200.0));
        assert!(!leaving_workspace_condition(w_c, w_c, 200.0));
        assert!(!leaving_workspace_condition(Point::new(520.0, 240.0), w_c, 200.0));
    }

    #[test]
    fn parking_is_outside_the_cable_area() {
        let g = GripperPose::default();
        assert!(!CABLE_AREA.contains(g.g_l) && !CABLE_AREA.contains(g.g_r));
        let a = WorkspaceAnchors::default();
        assert!(a.w_l.x < a.w_c.x && a.w_c.x < a.w_r.x);
    }

    #[test]
    fn reposing_examples() {
        let a = WorkspaceAnchors::default();
        let m = plan_reposing(Point::new(500.0, 300.0), None, 0.0, &a, false);
        let r = m.right.unwrap();
        assert_eq!((r.dx, r.dy, r.dtheta, r.grasp_flag), (-180.0, -60.0, 0.0, 1));
        assert_eq!(m.kind, MoveKind::ReposingTranslation);
        assert!(m.left.is_none());
        let m = plan_reposing(Point::new(500.0, 300.0), None, 0.0, &a, true);
        assert_eq!(m.right.unwrap().dtheta, 180.0);
        let m = plan_reposing(a.w_c, None, 0.0, &a, false);
        assert!(m.right.unwrap().is_hold());
    }

    #[test]
    fn wedged_recovery_roles() {
        let a = WorkspaceAnchors::default();
        let contour = Contour {
            points: vec![Point::new(300.0, 240.0), Point::new(360.0, 250.0), Point::new(280.0, 230.0)],
            area: 100,
        };
        let g = GripperPose { wedged_l: true, ..GripperPose::default() };
        let [carry, release] = plan_wedged_recovery(&contour, &g, &a, None, 90.0).unwrap();
        assert_eq!(carry.left.unwrap().point(), a.w_l);
        assert_eq!(carry.left.unwrap().pull(), a.w_c - a.w_l);
        assert_eq!(release.right.unwrap().point(), Point::new(360.0, 250.0));
        assert!(release.right.unwrap().is_hold());
        assert_eq!(release.left.unwrap().grasp_flag, 0);

        let g = GripperPose { wedged_r: true, ..GripperPose::default() };
        let [carry, release] = plan_wedged_recovery(&contour, &g, &a, None, 90.0).unwrap();
        assert_eq!(carry.right.unwrap().point(), a.w_r);
        assert_eq!(release.left.unwrap().point(), Point::new(280.0, 230.0));
        assert_eq!(release.right.unwrap().point() + release.right.unwrap().pull(), a.w_r);
    }
}
