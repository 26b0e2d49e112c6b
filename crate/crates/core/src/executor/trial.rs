//! World state, action application and the untangling loop.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;
use std::sync::{Mutex, OnceLock};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::action::{Arm, ArmAction, BilateralAction, MoveKind};
use super::dynamics::{assess_grasp, collision_probability, drift, springout_vector, wedge_probability, DynamicsConfig, GraspOutcome, GraspReport};
use super::moves;
use crate::bruce::{plan_node_deletion, NodeDeletionPlan};
use crate::diagram::surgery::{insert_curl, nearest_on_cable, point_at, pull_end, remove_curls, End};
use crate::diagram::{build_graph, knot_template, CableDiagram, KnotSpec, TemplateName, WORKSPACE};
use crate::geom::Point;
use crate::loki::{refine_keypoint, AnalyticEstimator, GraspRefinement};
use crate::percept::{
    cable_center, density, extract_cable_contour, grasp_angles_analytic, hulk_keypoints, pca_grasp_angle, render, Comparator,
    Contour, ForcedFlips, FrameOverlay, Observation, PerceptionNoise, RasterImage, DEFAULT_LAMBDA, DEFAULT_MARGIN,
    DEFAULT_THRESHOLD, REFERENCE_ID,
};
use crate::spiderman::{
    leaving_workspace_condition, plan_reposing, rotate_condition, termination_verdict, wedged_carry, wedged_condition,
    wedged_hold_point, wedged_release, GripperPose, ObservationHistory, TerminationVerdict, Thresholds, WorkspaceAnchors,
};

pub const LOG_SCHEMA_VERSION: u32 = 1;

/// Side of the crop used for analytic grasp angles.
const PCA_CROP: f64 = 60.0;
/// Scale of the cable bunched on a wedged jaw, as seen by the camera.
const BUNDLE_SCALE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Policy {
    pub use_loki: bool,
    pub use_spiderman: bool,
}

impl Policy {
    pub const H: Policy = Policy { use_loki: false, use_spiderman: false };
    pub const HL: Policy = Policy { use_loki: true, use_spiderman: false };
    pub const HS: Policy = Policy { use_loki: false, use_spiderman: true };
    pub const HLS: Policy = Policy { use_loki: true, use_spiderman: true };
    pub const ALL: [Policy; 4] = [Policy::H, Policy::HL, Policy::HS, Policy::HLS];

    pub fn name(&self) -> &'static str {
        match (self.use_loki, self.use_spiderman) {
            (false, false) => "H",
            (true, false) => "H+L",
            (false, true) => "H+S",
            (true, true) => "H+L+S",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().replace('+', "").as_str() {
            "H" => Ok(Policy::H),
            "HL" => Ok(Policy::HL),
            "HS" => Ok(Policy::HS),
            "HLS" => Ok(Policy::HLS),
            _ => Err(format!("unknown policy {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub noise: PerceptionNoise,
    pub dynamics: DynamicsConfig,
    pub thresholds: Thresholds,
    pub anchors: WorkspaceAnchors,
    pub gripper: GripperPose,
    pub lambda: f64,
    pub margin: f64,
    pub forced_flips: ForcedFlips,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            noise: PerceptionNoise::default(),
            dynamics: DynamicsConfig::default(),
            thresholds: Thresholds::default(),
            anchors: WorkspaceAnchors::default(),
            gripper: GripperPose::default(),
            lambda: DEFAULT_LAMBDA,
            margin: DEFAULT_MARGIN,
            forced_flips: ForcedFlips::default(),
        }
    }
}

impl SimConfig {
    /// Perfect perception and no stochastic failures.
    pub fn oracle() -> Self {
        SimConfig { noise: PerceptionNoise::oracle(), dynamics: DynamicsConfig::noiseless(), ..SimConfig::default() }
    }

    pub fn validate(&self) -> Result<(), String> {
        self.dynamics.validate()?;
        let p = self.noise.density_flip_prob;
        if !(0.0..=1.0).contains(&p) || !(self.noise.keypoint_sigma >= 0.0) {
            return Err("perception noise out of range".into());
        }
        let a = &self.anchors;
        if !(a.w_l.x < a.w_c.x && a.w_c.x < a.w_r.x) {
            return Err("anchors must satisfy w_l.x < w_c.x < w_r.x".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FailureMode {
    /// Gripper collision.
    A,
    /// Jaws wedged between cable segments.
    B,
    /// Premature termination on a classifier false positive.
    C,
    /// Termination without progress.
    D,
    /// Cable sprang out of reach.
    E,
}

impl FailureMode {
    pub const ALL: [FailureMode; 5] = [FailureMode::A, FailureMode::B, FailureMode::C, FailureMode::D, FailureMode::E];
}

impl fmt::Display for FailureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "cause", rename_all = "snake_case")]
pub enum TerminalCause {
    Terminated { verdict: TerminationVerdict },
    ActionCap,
    Collision,
    WedgeUnresolved,
    OutOfReach,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Grasp { arm: Arm, report: GraspReport },
    Deleted { crossings_removed: usize },
    NoProgress,
    Snag,
    Drag,
    CurlsRemoved { count: usize },
    Wedge { arm: Arm },
    Unwedged,
    RecoveryFailed,
    Springout { dx: f64, dy: f64 },
    Collision,
    OutOfReach,
    NothingToDelete,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ConditionLog {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub termination: Option<TerminationVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wedged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rotate: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub leaving: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_c: Option<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub t: usize,
    pub t_prime: usize,
    pub kind: MoveKind,
    pub left: Option<ArmAction>,
    pub right: Option<ArmAction>,
    pub conditions: ConditionLog,
    pub events: Vec<Event>,
    pub crossings_after: usize,
    pub vertices_after: usize,
    pub edges_after: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialEnd {
    pub cause: TerminalCause,
    pub wedged: bool,
    pub final_crossings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub schema_version: u32,
    pub seed: u64,
    pub policy: Policy,
    pub success: bool,
    pub failure_mode: Option<FailureMode>,
    pub node_deletions: usize,
    pub recovery_actions: usize,
    pub total_actions: usize,
    pub initial_crossings: usize,
    pub final_crossings: usize,
    pub end: TrialEnd,
    pub log: Vec<ActionRecord>,
}

impl TrialResult {
    /// The action log as JSON lines.
    pub fn log_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.log {
            let mut v = serde_json::to_value(r).expect("records serialize");
            v["schema_version"] = LOG_SCHEMA_VERSION.into();
            out.push_str(&v.to_string());
            out.push('\n');
        }
        out
    }
}

/// Failure mode from the end record. Several causes can hold at once (a trial
/// can stop while a jaw is still wedged); the fixed order B, E, C, D, A decides.
pub fn classify_failure(end: &TrialEnd) -> Option<FailureMode> {
    let mut modes = Vec::new();
    if end.wedged || matches!(end.cause, TerminalCause::WedgeUnresolved) {
        modes.push(FailureMode::B);
    }
    match end.cause {
        TerminalCause::OutOfReach => modes.push(FailureMode::E),
        TerminalCause::Terminated { verdict } if end.final_crossings > 1 => {
            modes.push(if verdict.false_positive() { FailureMode::C } else { FailureMode::D })
        }
        TerminalCause::ActionCap if end.final_crossings > 1 => modes.push(FailureMode::D),
        TerminalCause::Collision => modes.push(FailureMode::A),
        _ => {}
    }
    [FailureMode::B, FailureMode::E, FailureMode::C, FailureMode::D, FailureMode::A].into_iter().find(|m| modes.contains(m))
}

/// One rendered state for the SVG sequence.
#[derive(Debug, Clone)]
pub struct Frame {
    pub diagram: CableDiagram,
    pub overlay: FrameOverlay,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Wedge {
    arm: Arm,
    /// Where the jaw holds the cable.
    at: Point,
    /// Released at the centre by the first recovery step.
    carried: bool,
}

#[derive(Clone)]
struct Percept {
    image: RasterImage,
    observation_density: f64,
    contour: Option<Contour>,
    p_c: Option<Point>,
}

pub struct WorldState {
    pub diagram: CableDiagram,
    pub gripper: GripperPose,
    pub history: ObservationHistory,
    pub t_prime: usize,
    pub log: Vec<ActionRecord>,
    cfg: SimConfig,
    rng: ChaCha8Rng,
    wedge: Option<Wedge>,
    plan: Option<NodeDeletionPlan>,
    /// Last view and what was perceived of it.
    seen: RefCell<Option<(CableDiagram, Rc<Percept>)>>,
}

fn reference_observation(cfg: &SimConfig) -> Observation {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u64), Observation>>> = OnceLock::new();
    let key = (cfg.dynamics.cable_width.to_bits(), cfg.lambda.to_bits());
    let cache = CACHE.get_or_init(Default::default);
    if let Some(o) = cache.lock().unwrap().get(&key) {
        return *o;
    }
    let o = compute_reference(cfg);
    cache.lock().unwrap().insert(key, o);
    o
}

fn compute_reference(cfg: &SimConfig) -> Observation {
    let w = cfg.dynamics.cable_width;
    let d = knot_template(KnotSpec::new(TemplateName::SingleCrossing), 0, w).expect("single crossing embeds");
    let img = render(&d, w);
    Observation { id: REFERENCE_ID, density: density(&d, &img, w, cfg.lambda) }
}

impl WorldState {
    pub fn new(d: &CableDiagram, cfg: &SimConfig, seed: u64) -> WorldState {
        let mix = seed ^ cfg.dynamics.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        WorldState {
            diagram: d.clone(),
            gripper: cfg.gripper,
            history: ObservationHistory::new(reference_observation(cfg)),
            t_prime: 0,
            log: Vec::new(),
            cfg: *cfg,
            rng: ChaCha8Rng::seed_from_u64(mix),
            wedge: None,
            plan: None,
            seen: RefCell::new(None),
        }
    }

    pub fn is_wedged(&self) -> bool {
        self.wedge.is_some()
    }

    /// What the camera sees: the cable, or a bunch of it on a wedged jaw.
    pub fn view(&self) -> CableDiagram {
        match self.wedge {
            Some(w) if !w.carried => moves::bundle_view(&self.diagram, w.at, self.gripper.parking(w.arm), BUNDLE_SCALE),
            _ => self.diagram.clone(),
        }
    }

    fn perceive(&self) -> Rc<Percept> {
        let view = self.view();
        if let Some((v, p)) = self.seen.borrow().as_ref() {
            if *v == view {
                return p.clone();
            }
        }
        let p = Rc::new(self.perceive_view(&view));
        *self.seen.borrow_mut() = Some((view, p.clone()));
        p
    }

    fn perceive_view(&self, view: &CableDiagram) -> Percept {
        let w = self.cfg.dynamics.cable_width;
        let image = render(view, w);
        let observation_density = density(view, &image, w, self.cfg.lambda);
        let contour = extract_cable_contour(&image, DEFAULT_THRESHOLD).ok();
        let p_c = contour.as_ref().map(cable_center);
        Percept { image, observation_density, contour, p_c }
    }

    fn width(&self) -> f64 {
        self.cfg.dynamics.cable_width
    }

    fn is_far(&self, p: Point) -> bool {
        p.dist(self.cfg.anchors.w_c) > self.cfg.thresholds.workspace_px
    }

    fn grasp(&mut self, a: &ArmAction, intended: Option<f64>, far_check: bool) -> GraspReport {
        let far = far_check && self.is_far(a.point());
        let cfg = self.cfg.dynamics;
        assess_grasp(&self.diagram, a.point(), a.theta, intended, &cfg, far, &mut self.rng)
    }

    fn settle(&mut self, d: CableDiagram) {
        debug_assert!(d.validate(WORKSPACE).is_ok());
        self.diagram = d;
    }

    fn jitter(&mut self) {
        let v = drift(self.cfg.dynamics.drift_sigma, &mut self.rng);
        if v != Point::new(0.0, 0.0) {
            let d = moves::translate_within(&self.diagram, v, WORKSPACE);
            self.settle(d);
        }
    }

    /// Applies one action. Returns the events it caused and a terminal cause
    /// if the trial cannot go on.
    pub fn apply(&mut self, action: &BilateralAction) -> (Vec<Event>, Option<TerminalCause>) {
        let mut ev = Vec::new();
        let terminal = match action.kind {
            MoveKind::Reidemeister => {
                self.apply_reidemeister(action, &mut ev);
                None
            }
            MoveKind::NodeDeletion => self.apply_node_deletion(action, &mut ev),
            MoveKind::ReposingRotation | MoveKind::ReposingTranslation => self.apply_reposing(action, &mut ev),
            MoveKind::WedgedRecoveryStep => {
                self.apply_recovery(action, &mut ev);
                None
            }
        };
        (ev, terminal)
    }

    fn apply_reidemeister(&mut self, action: &BilateralAction, ev: &mut Vec<Event>) {
        let w = self.width();
        let total = self.diagram.length();
        let (Some(l), Some(r)) = (action.left, action.right) else { return };
        let rl = self.grasp(&l, Some(0.0), false);
        let rr = self.grasp(&r, Some(total), false);
        ev.push(Event::Grasp { arm: Arm::Left, report: rl });
        ev.push(Event::Grasp { arm: Arm::Right, report: rr });
        let (w_l, w_r) = (l.point() + l.pull(), r.point() + r.pull());
        let d = match (rl.outcome.is_ok(), rr.outcome.is_ok()) {
            (true, true) => moves::reidemeister(&self.diagram, w_l, w_r, w, WORKSPACE),
            (true, false) => pull_end(&self.diagram, End::Left, w_l, 1.5 * w, WORKSPACE),
            (false, true) => pull_end(&self.diagram, End::Right, w_r, 1.5 * w, WORKSPACE),
            (false, false) => return,
        };
        self.settle(d);
    }

    fn apply_node_deletion(&mut self, action: &BilateralAction, ev: &mut Vec<Event>) -> Option<TerminalCause> {
        let w = self.width();
        let (Some(pull), Some(hold)) = (action.left, action.right) else { return None };
        let plan = self.plan.take();
        let cfg = self.cfg.dynamics;
        if pull.point().dist(hold.point()) < cfg.collision_dist && self.rng.random_bool(cfg.near_collision_prob) {
            ev.push(Event::Collision);
            return Some(TerminalCause::Collision);
        }
        let rp = self.grasp(&pull, plan.map(|p| p.pull_s), true);
        let rh = self.grasp(&hold, plan.map(|p| p.hold_s), true);
        ev.push(Event::Grasp { arm: Arm::Left, report: rp });
        ev.push(Event::Grasp { arm: Arm::Right, report: rh });
        let p_col = collision_probability(&rp, &rh, &cfg);
        if p_col > 0.0 && self.rng.random_bool(p_col) {
            ev.push(Event::Collision);
            return Some(TerminalCause::Collision);
        }
        let before = self.diagram.clone();
        let contact = rp.outcome.contact().map(|s| point_at(&before, crate::diagram::surgery::pos_at_length(&before, s)));
        match (plan, rp.outcome, rh.outcome) {
            (None, _, _) => ev.push(Event::NothingToDelete),
            (Some(plan), GraspOutcome::Ok { .. }, GraspOutcome::Ok { .. }) => {
                match moves::node_deletion(&before, &plan, pull.pull(), w, WORKSPACE) {
                    Ok(d) => {
                        ev.push(Event::Deleted { crossings_removed: before.crossing_count() - d.crossing_count() });
                        self.settle(d);
                    }
                    Err(_) => ev.push(Event::NoProgress),
                }
            }
            (Some(_), GraspOutcome::Ok { .. }, _) => {
                // nothing pins the cable: it slides along with the pull
                ev.push(Event::Drag);
                let d = moves::translate_within(&before, pull.pull() * cfg.drag_frac, WORKSPACE);
                self.settle(d);
            }
            (Some(_), GraspOutcome::Wrong { s }, _) => {
                if cfg.snag_prob > 0.0 && self.rng.random_bool(cfg.snag_prob) {
                    let side = if self.rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    let over_first = self.rng.random_bool(0.5);
                    if let Ok(d) = insert_curl(&before, s, side, over_first, 2.0 * w, WORKSPACE) {
                        ev.push(Event::Snag);
                        self.settle(d);
                    }
                }
            }
            _ => {}
        }
        self.jitter();
        if let Some(c) = contact {
            let p_w = wedge_probability(&rp, &cfg);
            if p_w > 0.0 && self.rng.random_bool(p_w) {
                let (pos, _, _) = nearest_on_cable(&self.diagram, c);
                let at = point_at(&self.diagram, pos);
                self.wedge = Some(Wedge { arm: Arm::Left, at, carried: false });
                self.gripper.set_wedged(Arm::Left, true);
                ev.push(Event::Wedge { arm: Arm::Left });
                return None;
            }
        }
        if cfg.springout_prob > 0.0 && self.rng.random_bool(cfg.springout_prob) {
            let v = springout_vector(cfg.springout_range, &mut self.rng);
            ev.push(Event::Springout { dx: v.x, dy: v.y });
            let d = moves::translate_within(&self.diagram, v, WORKSPACE);
            self.settle(d);
        }
        None
    }

    fn apply_reposing(&mut self, action: &BilateralAction, ev: &mut Vec<Event>) -> Option<TerminalCause> {
        let Some(a) = action.right else { return None };
        if a.point().dist(self.cfg.anchors.w_c) > self.cfg.dynamics.reach_radius {
            ev.push(Event::OutOfReach);
            return Some(TerminalCause::OutOfReach);
        }
        let r = self.grasp(&a, None, false);
        ev.push(Event::Grasp { arm: Arm::Right, report: r });
        if !r.outcome.is_ok() {
            return None;
        }
        let (pos, _, _) = nearest_on_cable(&self.diagram, a.point());
        let held = point_at(&self.diagram, pos);
        let mut d = self.diagram.translated(a.pull());
        if a.dtheta == 180.0 {
            d = moves::rotate_about(&d, held + a.pull(), 180.0);
        }
        let fix = d.shift_into(WORKSPACE);
        d = d.translated(fix);
        // lifted and set down, loose curls fall out
        let (d, count) = remove_curls(&d, WORKSPACE);
        if count > 0 {
            ev.push(Event::CurlsRemoved { count });
        }
        self.settle(d);
        None
    }

    fn apply_recovery(&mut self, action: &BilateralAction, ev: &mut Vec<Event>) {
        let Some(mut wedge) = self.wedge else { return };
        let stuck = wedge.arm;
        let Some(carrier) = action.arm(stuck).copied() else { return };
        if carrier.grasp_flag == 1 {
            // carry the bunched cable to the centre and let go
            let to = carrier.point() + carrier.pull();
            let d = moves::translate_within(&self.diagram, to - wedge.at, WORKSPACE);
            let shift = d.endpoint_left() - self.diagram.endpoint_left();
            wedge.at = wedge.at + shift;
            wedge.carried = true;
            self.wedge = Some(wedge);
            self.settle(d);
            return;
        }
        let Some(pin) = action.arm(stuck.other()).copied() else { return };
        let r = self.grasp(&pin, None, false);
        ev.push(Event::Grasp { arm: stuck.other(), report: r });
        let p = self.cfg.dynamics.recovery_success_prob;
        if r.outcome.is_ok() && (p >= 1.0 || self.rng.random_bool(p)) {
            self.wedge = None;
            self.gripper.set_wedged(stuck, false);
            ev.push(Event::Unwedged);
        } else {
            wedge.carried = false;
            self.wedge = Some(wedge);
            ev.push(Event::RecoveryFailed);
        }
    }
}

struct Runner<'a> {
    world: WorldState,
    policy: Policy,
    cmp: Comparator,
    est: AnalyticEstimator,
    frames: Option<Vec<Frame>>,
    cfg: &'a SimConfig,
}

impl Runner<'_> {
    fn refine(&self, img: &RasterImage, p: Point) -> Option<GraspRefinement> {
        self.policy.use_loki.then(|| refine_keypoint(img, p, &self.est))
    }

    fn pca_angle(img: &RasterImage, p: Point) -> f64 {
        pca_grasp_angle(img, p, PCA_CROP, DEFAULT_THRESHOLD).unwrap_or(90.0)
    }

    fn record(&mut self, action: BilateralAction, conditions: ConditionLog, events: Vec<Event>, marks: &[(&str, Point)]) {
        let g = build_graph(&self.world.diagram);
        let rec = ActionRecord {
            t: self.world.log.len(),
            t_prime: self.world.t_prime,
            kind: action.kind,
            left: action.left,
            right: action.right,
            conditions,
            events,
            crossings_after: self.world.diagram.crossing_count(),
            vertices_after: g.vertex_count(),
            edges_after: g.edge_count(),
        };
        if let Some(frames) = self.frames.as_mut() {
            let mut overlay = FrameOverlay { title: format!("t={} {:?}", rec.t + 1, rec.kind), ..FrameOverlay::default() };
            for (label, p) in marks {
                overlay.marker(label, *p, "#7fff7f");
            }
            for (arm, a) in [("l", action.left), ("r", action.right)] {
                if let Some(a) = a {
                    overlay.arrows.push((a.point(), a.point() + a.pull(), if a.grasp_flag == 1 { "#ff6060" } else { "#8080ff" }.into()));
                    overlay.marker(arm, a.point(), "#ffd966");
                }
            }
            overlay.notes.push(format!("crossings {}", rec.crossings_after));
            if let Some(v) = conditions.termination {
                overlay.notes.push(format!("termination no_progress={} reference={}", v.no_progress, v.reference));
            }
            for e in &rec.events {
                overlay.notes.push(serde_json::to_string(e).unwrap_or_default());
            }
            frames.push(Frame { diagram: self.world.view(), overlay });
        }
        self.world.log.push(rec);
    }

    fn observe_progress(&mut self) {
        let p = self.world.perceive();
        let t = self.world.t_prime;
        let obs = Observation { id: t as u64, density: p.observation_density };
        let crossings = self.world.diagram.crossing_count();
        self.world.history.push(t, obs, crossings).expect("t' only grows");
    }

    fn reidemeister(&mut self) {
        let w = &mut self.world;
        let p = w.perceive();
        let k = hulk_keypoints(&w.diagram, None, &self.cfg.noise, &mut w.rng);
        let a = self.cfg.anchors;
        let (l, r) = match (self.refine(&p.image, k.p_l), self.refine(&p.image, k.p_r)) {
            (Some(rl), Some(rr)) => ((rl.refined_point, rl.theta_hat), (rr.refined_point, rr.theta_hat)),
            _ => ((k.p_l, Self::pca_angle(&p.image, k.p_l)), (k.p_r, Self::pca_angle(&p.image, k.p_r))),
        };
        let action = BilateralAction {
            kind: MoveKind::Reidemeister,
            left: Some(ArmAction::grasp_pull(l.0, l.1, a.w_l - l.0, 0.0)),
            right: Some(ArmAction::grasp_pull(r.0, r.1, a.w_r - r.0, 0.0)),
        };
        let (ev, _) = self.world.apply(&action);
        self.record(action, ConditionLog::default(), ev, &[("p_l", k.p_l), ("p_r", k.p_r)]);
    }

    fn node_deletion(&mut self, conditions: ConditionLog) -> Option<TerminalCause> {
        let p = self.world.perceive();
        let g = build_graph(&self.world.diagram);
        let plan = plan_node_deletion(&g, &self.world.diagram, self.world.width()).ok();
        let w = &mut self.world;
        let k = hulk_keypoints(&w.diagram, plan.map(|p| (p.pull_point, p.hold_point)), &self.cfg.noise, &mut w.rng);
        w.plan = plan;
        let (pull, hold) = match (self.refine(&p.image, k.p_pull), self.refine(&p.image, k.p_hold)) {
            (Some(rp), Some(rh)) => ((rp.refined_point, rp.theta_hat), (rh.refined_point, rh.theta_hat)),
            _ => {
                let (tp, th) = grasp_angles_analytic(&k).unwrap_or((0.0, 90.0));
                ((k.p_pull, tp), (k.p_hold, th))
            }
        };
        let dir = match plan {
            Some(plan) if (pull.0 - hold.0).norm() == 0.0 => plan.pull_direction(),
            _ => (pull.0 - hold.0).normalized(),
        };
        let action = BilateralAction {
            kind: MoveKind::NodeDeletion,
            left: Some(ArmAction::grasp_pull(pull.0, pull.1, dir * self.cfg.dynamics.pull_magnitude, 0.0)),
            right: Some(ArmAction::hold(hold.0, hold.1)),
        };
        let (ev, terminal) = self.world.apply(&action);
        self.world.t_prime += 1;
        self.record(action, conditions, ev, &[("pull", k.p_pull), ("hold", k.p_hold)]);
        terminal
    }

    fn reposing(&mut self, p: &Percept, rotate: bool, conditions: ConditionLog) -> Option<TerminalCause> {
        let p_c = p.p_c?;
        let refinement = self.refine(&p.image, p_c);
        let action = plan_reposing(p_c, refinement.as_ref(), Self::pca_angle(&p.image, p_c), &self.cfg.anchors, rotate);
        let (ev, terminal) = self.world.apply(&action);
        self.record(action, conditions, ev, &[("p_c", p_c)]);
        terminal
    }

    /// Repeats Wedged Recovery while the wedge check fires. Returns a terminal
    /// cause once the attempts run out.
    fn wedge_loop(&mut self, conditions: &mut ConditionLog) -> Option<TerminalCause> {
        let thr = self.cfg.thresholds.wedge_px;
        let mut attempts = 0;
        loop {
            let p = self.world.perceive();
            let wedged = p.p_c.is_some_and(|c| wedged_condition(c, &self.world.gripper, thr));
            conditions.wedged.get_or_insert(wedged);
            if !wedged {
                return None;
            }
            if attempts == self.cfg.dynamics.max_recovery_attempts {
                return Some(TerminalCause::WedgeUnresolved);
            }
            attempts += 1;
            let c = p.p_c.expect("wedged implies a centre");
            let g = self.world.gripper;
            let stuck = g.stuck_arm().unwrap_or(if c.dist(g.g_l) <= c.dist(g.g_r) { Arm::Left } else { Arm::Right });
            let carry = wedged_carry(&self.cfg.anchors, stuck);
            let (ev, _) = self.world.apply(&carry);
            self.record(carry, std::mem::take(conditions), ev, &[("p_c", c)]);

            let p = self.world.perceive();
            let Some(contour) = p.contour.as_ref() else { continue };
            let Ok(hold) = wedged_hold_point(contour, &self.cfg.anchors, stuck) else { continue };
            let refinement = self.refine(&p.image, hold);
            let release = wedged_release(hold, refinement.as_ref(), Self::pca_angle(&p.image, hold), &self.cfg.anchors, stuck);
            let (ev, _) = self.world.apply(&release);
            self.record(release, ConditionLog::default(), ev, &[("hold", hold)]);
        }
    }

    fn run(&mut self) -> TrialEnd {
        self.reidemeister();
        self.observe_progress();
        let end = loop {
            let mut cond = ConditionLog::default();
            let verdict = termination_verdict(&self.world.history, &self.cmp);
            cond.termination = Some(verdict);
            if verdict.fires() {
                break TerminalCause::Terminated { verdict };
            }
            if self.world.log.len() >= self.cfg.dynamics.max_actions {
                break TerminalCause::ActionCap;
            }
            if self.policy.use_spiderman {
                if let Some(t) = self.wedge_loop(&mut cond) {
                    break t;
                }
                let p = self.world.perceive();
                cond.p_c = p.p_c;
                let rotate = rotate_condition(&self.world.history, &self.cmp);
                cond.rotate = Some(rotate);
                let p = if rotate {
                    if let Some(t) = self.reposing(&p, true, std::mem::take(&mut cond)) {
                        break t;
                    }
                    self.world.perceive()
                } else {
                    p
                };
                let leaving = p.p_c.is_some_and(|c| leaving_workspace_condition(c, self.cfg.anchors.w_c, self.cfg.thresholds.workspace_px));
                cond.leaving = Some(leaving);
                if leaving {
                    if let Some(t) = self.reposing(&p, false, std::mem::take(&mut cond)) {
                        break t;
                    }
                }
            }
            if let Some(t) = self.node_deletion(cond) {
                break t;
            }
            if !self.policy.use_spiderman && self.world.is_wedged() {
                break TerminalCause::WedgeUnresolved;
            }
            self.observe_progress();
        };
        TrialEnd { cause: end, wedged: self.world.is_wedged(), final_crossings: self.world.diagram.crossing_count() }
    }
}

/// Runs one trial of the untangling loop.
pub fn run_trial(d: &CableDiagram, policy: Policy, cfg: &SimConfig, seed: u64) -> TrialResult {
    run_trial_traced(d, policy, cfg, seed, false).0
}

/// As `run_trial`, also returning one frame per state when `trace` is set.
pub fn run_trial_traced(d: &CableDiagram, policy: Policy, cfg: &SimConfig, seed: u64, trace: bool) -> (TrialResult, Vec<Frame>) {
    let mut cmp = Comparator::new(cfg.noise.density_flip_prob, seed);
    cmp.margin = cfg.margin;
    cmp.forced = cfg.forced_flips;
    let mut initial = FrameOverlay { title: "t=0 initial".into(), ..FrameOverlay::default() };
    initial.notes.push(format!("crossings {}", d.crossing_count()));
    let frames = trace.then(|| vec![Frame { diagram: d.clone(), overlay: initial }]);
    let mut runner = Runner { world: WorldState::new(d, cfg, seed), policy, cmp, est: AnalyticEstimator::default(), frames, cfg };
    let end = runner.run();
    let log = std::mem::take(&mut runner.world.log);
    let failure_mode = classify_failure(&end);
    let result = TrialResult {
        schema_version: LOG_SCHEMA_VERSION,
        seed,
        policy,
        success: failure_mode.is_none() && end.final_crossings <= 1,
        failure_mode,
        node_deletions: log.iter().filter(|r| r.kind == MoveKind::NodeDeletion).count(),
        recovery_actions: log.iter().filter(|r| r.kind.is_recovery()).count(),
        total_actions: log.len(),
        initial_crossings: d.crossing_count(),
        final_crossings: end.final_crossings,
        end,
        log,
    };
    (result, runner.frames.unwrap_or_default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_cable_succeeds_without_deleting() {
        let d = CableDiagram::straight(Point::new(150.0, 240.0), Point::new(490.0, 240.0));
        for policy in Policy::ALL {
            let r = run_trial(&d, policy, &SimConfig::oracle(), 3);
            assert!(r.success, "{policy}: {:?}", r.end);
            assert_eq!(r.node_deletions, 0);
        }
    }

    #[test]
    fn oracle_untangles_overhand() {
        let d = knot_template(KnotSpec::new(TemplateName::Overhand), 2, 6.0).unwrap();
        let r = run_trial(&d, Policy::HLS, &SimConfig::oracle(), 1);
        assert!(r.success, "{:?}", r.end);
        assert_eq!(r.log[0].kind, MoveKind::Reidemeister);
        assert!(r.total_actions <= 2 * 3 + 2);
    }

    #[test]
    fn trials_are_deterministic() {
        let d = knot_template(KnotSpec::new(TemplateName::FigureEight), 5, 6.0).unwrap();
        let cfg = SimConfig::default();
        for policy in Policy::ALL {
            let a = run_trial(&d, policy, &cfg, 77);
            let b = run_trial(&d, policy, &cfg, 77);
            assert_eq!(a, b);
            assert_eq!(a.log_jsonl(), b.log_jsonl());
        }
    }

    #[test]
    fn classification_priority() {
        let v = TerminationVerdict { no_progress: true, no_progress_exact: false, ..Default::default() };
        let end = |cause, wedged, final_crossings| TrialEnd { cause, wedged, final_crossings };
        assert_eq!(classify_failure(&end(TerminalCause::Terminated { verdict: v }, true, 3)), Some(FailureMode::B));
        assert_eq!(classify_failure(&end(TerminalCause::Terminated { verdict: v }, false, 3)), Some(FailureMode::C));
        let exact = TerminationVerdict { no_progress: true, no_progress_exact: true, ..Default::default() };
        assert_eq!(classify_failure(&end(TerminalCause::Terminated { verdict: exact }, false, 3)), Some(FailureMode::D));
        assert_eq!(classify_failure(&end(TerminalCause::Terminated { verdict: exact }, false, 1)), None);
        assert_eq!(classify_failure(&end(TerminalCause::OutOfReach, false, 3)), Some(FailureMode::E));
        assert_eq!(classify_failure(&end(TerminalCause::Collision, false, 3)), Some(FailureMode::A));
        assert_eq!(classify_failure(&end(TerminalCause::ActionCap, false, 3)), Some(FailureMode::D));
    }

    #[test]
    fn policy_names_round_trip() {
        for p in Policy::ALL {
            assert_eq!(p.name().parse::<Policy>().unwrap(), p);
        }
        assert_eq!("hls".parse::<Policy>().unwrap(), Policy::HLS);
        assert!("X".parse::<Policy>().is_err());
    }
}
