//! Under-crossing reduction planner: Reidemeister and Node Deletion targets
//! from the cable graph, and a noiseless full rollout.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagram::{CableDiagram, CableGraph, EdgeId, Pass, VertexId};
use crate::executor::moves::{self, MoveError};
use crate::geom::{arc_lengths, point_segment_dist, Point, Rect};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BruceError {
    #[error("cable has no crossings")]
    Untangled,
    #[error("no under-crossing reachable from the right endpoint")]
    NoUnderCrossing,
    #[error("rollout needed more than {0} moves")]
    BoundExceeded(usize),
    #[error(transparent)]
    Move(#[from] MoveError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeDeletionPlan {
    pub crossing_id: u32,
    pub crossing_vertex: VertexId,
    /// Code position of the traced under pass.
    pub pass_index: usize,
    pub pull_edge: EdgeId,
    pub pull_layer: i8,
    pub hold_edge: EdgeId,
    pub pull_point: Point,
    pub hold_point: Point,
    /// Arc-length positions of the two grasp points along the cable.
    pub pull_s: f64,
    pub hold_s: f64,
}

impl NodeDeletionPlan {
    /// Unit direction from the hold point through the pull point.
    pub fn pull_direction(&self) -> Point {
        (self.pull_point - self.hold_point).normalized()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReidemeisterPlan {
    pub left_point: Point,
    pub right_point: Point,
    pub targets: (Point, Point),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Plan {
    Reidemeister(ReidemeisterPlan),
    NodeDeletion(NodeDeletionPlan),
}

/// Preferred distance of a grasp point from its crossing, pixels.
const GRASP_OFFSET: f64 = 12.0;
/// Grasp points never sit farther than this from the crossing.
const MAX_GRASP_OFFSET: f64 = 40.0;

/// Distance from `p` (at arc length `s`) to cable parts farther than `window`
/// along the cable.
fn foreign_clearance(pl: &[Point], acc: &[f64], p: Point, s: f64, window: f64) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..pl.len() - 1 {
        if acc[i + 1] >= s - window && acc[i] <= s + window {
            // segment overlaps the local window: only its far parts count
            let len = acc[i + 1] - acc[i];
            if len <= 0.0 {
                continue;
            }
            let lo = ((s - window - acc[i]) / len).clamp(0.0, 1.0);
            let hi = ((s + window - acc[i]) / len).clamp(0.0, 1.0);
            if lo > 0.0 {
                best = best.min(point_segment_dist(p, pl[i], pl[i].lerp(pl[i + 1], lo)));
            }
            if hi < 1.0 {
                best = best.min(point_segment_dist(p, pl[i].lerp(pl[i + 1], hi), pl[i + 1]));
            }
        } else {
            best = best.min(point_segment_dist(p, pl[i], pl[i + 1]));
        }
    }
    best
}

/// Grasp point on the arc leaving the pass at arc length `s0` in direction
/// `sign` (-1 towards the left end), bounded by the arc length `room`. Takes
/// the offset closest to the preferred one that keeps 1.5 widths from foreign
/// strands, or the clearest offset if none does.
fn grasp_on_arc(d: &CableDiagram, acc: &[f64], s0: f64, sign: f64, room: f64, cable_width: f64) -> (Point, f64) {
    let pl = d.polyline();
    let cap = (0.45 * room).min(MAX_GRASP_OFFSET);
    let want = 1.5 * cable_width;
    let lo = cable_width.min(cap);
    let steps = ((cap - lo) / 1.5).ceil().max(0.0) as usize;
    let mut offsets: Vec<f64> = (0..=steps).map(|i| (lo + i as f64 * 1.5).min(cap)).collect();
    offsets.sort_by(|a, b| (a - GRASP_OFFSET).abs().partial_cmp(&(b - GRASP_OFFSET).abs()).unwrap());
    let mut best: Option<(f64, Point, f64)> = None;
    for off in offsets {
        let s = s0 + sign * off;
        let p = moves::point_at_length(pl, acc, s);
        let clear = foreign_clearance(pl, acc, p, s, off.max(cable_width) * 0.9);
        if clear >= want {
            return (p, s);
        }
        if best.is_none_or(|b| clear > b.0) {
            best = Some((clear, p, s));
        }
    }
    let b = best.expect("offset list is nonempty");
    (b.1, b.2)
}

/// The first under pass met when tracing from the right endpoint.
pub fn traced_under_pass(g: &CableGraph) -> Option<(usize, i8)> {
    let n = g.edge_count() - 1;
    (0..n).rev().map(|k| (k, g.edges[k].end.layer)).find(|&(_, l)| l < 0)
}

pub fn plan_node_deletion(g: &CableGraph, d: &CableDiagram, cable_width: f64) -> Result<NodeDeletionPlan, BruceError> {
    if g.vertex_count() <= 2 {
        return Err(BruceError::Untangled);
    }
    let (p, layer) = traced_under_pass(g).ok_or(BruceError::NoUnderCrossing)?;
    let entry = d.code().entries()[p];
    debug_assert!(entry.pass == Pass::from_layer(layer).unwrap());
    let x = entry.crossing;
    let pass_v = d.pass_vertices();
    let pl = d.polyline();
    let acc = arc_lengths(pl);
    let s_at = |k: usize| acc[pass_v[k]];
    let total = *acc.last().unwrap();

    // pull on arc p, the edge the traced strand exits through towards v_l
    let arc_start = if p == 0 { 0.0 } else { s_at(p - 1) };
    let (pull_point, pull_s) = grasp_on_arc(d, &acc, s_at(p), -1.0, s_at(p) - arc_start, cable_width);

    // hold on one of the two +1 arcs at X, whichever lies farther from the pull
    let q = d.code().positions(x).into_iter().find(|&k| d.code().entries()[k].pass == Pass::Over).expect("X has an over pass");
    let mut options = Vec::new();
    for (edge, sign) in [(q, -1.0), (q + 1, 1.0)] {
        if edge == p {
            continue;
        }
        let room = if sign < 0.0 {
            s_at(q) - if q == 0 { 0.0 } else { s_at(q - 1) }
        } else {
            (if q + 1 < pass_v.len() { s_at(q + 1) } else { total }) - s_at(q)
        };
        let (pt, s) = grasp_on_arc(d, &acc, s_at(q), sign, room, cable_width);
        options.push((edge, pt, s));
    }
    let (hold_edge, hold_point, hold_s) = options
        .into_iter()
        .max_by(|a, b| a.1.dist(pull_point).partial_cmp(&b.1.dist(pull_point)).unwrap())
        .expect("an over arc differs from the pull arc");
    Ok(NodeDeletionPlan {
        crossing_id: x,
        crossing_vertex: VertexId::Crossing(x),
        pass_index: p,
        pull_edge: p,
        pull_layer: layer,
        hold_edge,
        pull_point,
        hold_point,
        pull_s,
        hold_s,
    })
}

pub fn plan_reidemeister(_g: &CableGraph, d: &CableDiagram, w_l: Point, w_r: Point) -> ReidemeisterPlan {
    ReidemeisterPlan { left_point: d.endpoint_left(), right_point: d.endpoint_right(), targets: (w_l, w_r) }
}

#[derive(Debug, Clone)]
pub struct RolloutStep {
    pub plan: Plan,
    pub after: CableDiagram,
}

/// Actions the noiseless rollout may take on a diagram with `crossings` crossings.
pub fn action_bound(crossings: usize) -> usize {
    2 * crossings + 2
}

/// One Reidemeister move, then Node Deletions under noiseless dynamics until
/// no crossing is left.
pub fn bruce_rollout(
    d: &CableDiagram,
    anchors: (Point, Point),
    cable_width: f64,
    pull_magnitude: f64,
    workspace: Rect,
) -> Result<Vec<RolloutStep>, BruceError> {
    let bound = action_bound(d.crossing_count());
    let mut steps = Vec::new();
    let (w_l, w_r) = anchors;
    let g = crate::diagram::build_graph(d);
    let r = plan_reidemeister(&g, d, w_l, w_r);
    let mut cur = moves::reidemeister(d, w_l, w_r, cable_width, workspace);
    steps.push(RolloutStep { plan: Plan::Reidemeister(r), after: cur.clone() });
    while cur.crossing_count() > 0 {
        if steps.len() + 1 > bound {
            return Err(BruceError::BoundExceeded(bound));
        }
        let g = crate::diagram::build_graph(&cur);
        let nd = plan_node_deletion(&g, &cur, cable_width)?;
        cur = moves::node_deletion(&cur, &nd, nd.pull_direction() * pull_magnitude, cable_width, workspace)?;
        steps.push(RolloutStep { plan: Plan::NodeDeletion(nd), after: cur.clone() });
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::{build_graph, knot_template, KnotSpec, TemplateName, WORKSPACE};

    #[test]
    fn overhand_targets_first_under_from_right() {
        let d = knot_template(KnotSpec::new(TemplateName::Overhand), 0, 6.0).unwrap();
        let g = build_graph(&d);
        let p = plan_node_deletion(&g, &d, 6.0).unwrap();
        // O1 U2 O3 U1 O2 U3: the last pass is under crossing 3
        assert_eq!((p.crossing_id, p.pass_index, p.pull_layer), (3, 5, -1));
        let ann = |e: EdgeId| {
            g.incidences(p.crossing_vertex).into_iter().filter(|&(i, _)| i == e).map(|(_, l)| l).collect::<Vec<_>>()
        };
        assert!(ann(p.pull_edge).contains(&-1));
        assert!(ann(p.hold_edge).contains(&1));
    }

    #[test]
    fn non_planar_pull_layer() {
        let d = knot_template(KnotSpec::new(TemplateName::DoubleOverhand), 0, 6.0).unwrap();
        let p = plan_node_deletion(&build_graph(&d), &d, 6.0).unwrap();
        assert_eq!(p.pull_layer, -2);
    }

    #[test]
    fn straight_cable_offers_no_deletion() {
        let d = CableDiagram::straight(Point::new(1.0, 1.0), Point::new(9.0, 1.0));
        assert_eq!(plan_node_deletion(&build_graph(&d), &d, 6.0), Err(BruceError::Untangled));
        let r = plan_reidemeister(&build_graph(&d), &d, Point::new(1.0, 1.0), Point::new(90.0, 1.0));
        assert_eq!(r.left_point, Point::new(1.0, 1.0));
    }

    #[test]
    fn grasp_points_sit_on_their_arcs() {
        let d = knot_template(KnotSpec::new(TemplateName::FigureEight), 4, 6.0).unwrap();
        let p = plan_node_deletion(&build_graph(&d), &d, 6.0).unwrap();
        let pl = d.polyline();
        let on = |q: Point| (0..pl.len() - 1).map(|i| point_segment_dist(q, pl[i], pl[i + 1])).fold(f64::INFINITY, f64::min);
        assert!(on(p.pull_point) < 3.0 && on(p.hold_point) < 3.0);
    }

    #[test]
    fn overhand_rollout() {
        let d = knot_template(KnotSpec::new(TemplateName::Overhand), 1, 6.0).unwrap();
        let steps = bruce_rollout(&d, (Point::new(100.0, 240.0), Point::new(540.0, 240.0)), 6.0, 80.0, WORKSPACE).unwrap();
        assert!(matches!(steps[0].plan, Plan::Reidemeister(_)));
        assert_eq!(steps.last().unwrap().after.crossing_count(), 0);
        assert!(steps.len() <= 2 * 3 + 2);
    }
}
