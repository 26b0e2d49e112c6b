use serde::{Deserialize, Serialize};

use crate::geom::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arm {
    Left,
    Right,
}

impl Arm {
    pub fn other(self) -> Arm {
        match self {
            Arm::Left => Arm::Right,
            Arm::Right => Arm::Left,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MoveKind {
    Reidemeister,
    NodeDeletion,
    ReposingTranslation,
    ReposingRotation,
    WedgedRecoveryStep,
}

impl MoveKind {
    pub fn is_recovery(self) -> bool {
        matches!(self, MoveKind::ReposingTranslation | MoveKind::ReposingRotation | MoveKind::WedgedRecoveryStep)
    }
}

/// One arm's part of an action: grasp pixel, grasp rotation, pull vector,
/// rotation delta and grasp flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmAction {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub dx: f64,
    pub dy: f64,
    pub dtheta: f64,
    pub grasp_flag: u8,
}

impl ArmAction {
    pub fn grasp_pull(at: Point, theta: f64, pull: Point, dtheta: f64) -> ArmAction {
        ArmAction { x: at.x, y: at.y, theta, dx: pull.x, dy: pull.y, dtheta, grasp_flag: 1 }
    }

    pub fn hold(at: Point, theta: f64) -> ArmAction {
        ArmAction::grasp_pull(at, theta, Point::new(0.0, 0.0), 0.0)
    }

    /// Move without touching the cable.
    pub fn travel(from: Point, to: Point) -> ArmAction {
        let d = to - from;
        ArmAction { x: from.x, y: from.y, theta: 0.0, dx: d.x, dy: d.y, dtheta: 0.0, grasp_flag: 0 }
    }

    pub fn point(&self) -> Point {
        Point::new(self.x, self.y)
    }

    pub fn pull(&self) -> Point {
        Point::new(self.dx, self.dy)
    }

    pub fn is_hold(&self) -> bool {
        self.grasp_flag == 1 && self.dx == 0.0 && self.dy == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BilateralAction {
    pub kind: MoveKind,
    pub left: Option<ArmAction>,
    pub right: Option<ArmAction>,
}

impl BilateralAction {
    pub fn arm(&self, arm: Arm) -> Option<&ArmAction> {
        match arm {
            Arm::Left => self.left.as_ref(),
            Arm::Right => self.right.as_ref(),
        }
    }

    pub fn with_arm(kind: MoveKind, arm: Arm, a: ArmAction) -> BilateralAction {
        match arm {
            Arm::Left => BilateralAction { kind, left: Some(a), right: None },
            Arm::Right => BilateralAction { kind, left: None, right: Some(a) },
        }
    }
}
