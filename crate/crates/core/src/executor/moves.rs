//! Deterministic geometry of each move. The stochastic layer in `dynamics`
//! decides which of these happens.

use thiserror::Error;

use crate::bruce::NodeDeletionPlan;
use crate::diagram::surgery::{self, cut_after, extend_end, pos_at_length, pull_end, remove_curls, End};
use crate::diagram::CableDiagram;
use crate::geom::{arc_lengths, Point, Rect};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MoveError {
    #[error("node deletion removed no crossing")]
    NoProgress,
    #[error(transparent)]
    Surgery(#[from] surgery::SurgeryError),
}

/// Largest straight run the retracted slack is laid out as.
pub const MAX_SLACK_RUN: f64 = 80.0;

pub fn point_at_length(pl: &[Point], acc: &[f64], s: f64) -> Point {
    let total = *acc.last().unwrap();
    let s = s.clamp(0.0, total);
    let i = match acc.binary_search_by(|a| a.partial_cmp(&s).unwrap()) {
        Ok(i) => return pl[i],
        Err(i) => i.clamp(1, pl.len() - 1) - 1,
    };
    let len = acc[i + 1] - acc[i];
    if len <= 0.0 {
        pl[i]
    } else {
        pl[i].lerp(pl[i + 1], (s - acc[i]) / len)
    }
}

/// Successful Node Deletion: the free right tail is drawn back under the held
/// strand. Everything past a cut just before the traced pass is retracted, and
/// the slack is laid out straight along `pull`.
pub fn node_deletion(
    d: &CableDiagram,
    plan: &NodeDeletionPlan,
    pull: Point,
    cable_width: f64,
    workspace: Rect,
) -> Result<CableDiagram, MoveError> {
    let pl = d.polyline();
    let acc = arc_lengths(pl);
    let total = *acc.last().unwrap();
    let pass_v = d.pass_vertices();
    let before = d.crossing_count();
    let mut p = plan.pass_index;
    loop {
        let s_pass = acc[pass_v[p]];
        let s_prev = if p == 0 { 0.0 } else { acc[pass_v[p - 1]] };
        let arc = s_pass - s_prev;
        let back = if arc > 3.0 * cable_width { 1.5 * cable_width } else { arc / 2.0 };
        let s_cut = s_pass - back;
        let at = pos_at_length(d, s_cut);
        let cut = cut_after(d, at, workspace)?;
        if cut.crossing_count() < before {
            let tip = d.polyline()[at.segment].lerp(d.polyline()[at.segment + 1], at.t);
            let end = if cut.endpoint_right() == tip { End::Right } else { End::Left };
            let slack = (total - s_cut).min(MAX_SLACK_RUN).min(pull.norm().max(cable_width));
            let out = extend_end(&cut, end, pull, slack, 1.5 * cable_width, workspace);
            return Ok(out);
        }
        // a three-strand crossing that survives as a two-strand one: keep retracting
        if p == 0 {
            return Err(MoveError::NoProgress);
        }
        p -= 1;
    }
}

/// Pulls both endpoints towards the side anchors and lets curls fall out.
pub fn reidemeister(d: &CableDiagram, w_l: Point, w_r: Point, cable_width: f64, workspace: Rect) -> CableDiagram {
    let clearance = 1.5 * cable_width;
    let l = pull_end(d, End::Left, w_l, clearance, workspace);
    let r = pull_end(&l, End::Right, w_r, clearance, workspace);
    remove_curls(&r, workspace).0
}

/// Rigid rotation about `c` by `deg` degrees. A half turn is done by point
/// reflection so it stays exact.
pub fn rotate_about(d: &CableDiagram, c: Point, deg: f64) -> CableDiagram {
    if deg.rem_euclid(360.0) == 180.0 {
        return d.map_points(|p| c - (p - c));
    }
    let a = deg.to_radians();
    d.map_points(|p| c + (p - c).rotated(a))
}

/// Translation followed by the smallest shift that brings the cable back inside `rect`.
pub fn translate_within(d: &CableDiagram, by: Point, rect: Rect) -> CableDiagram {
    let moved = d.translated(by);
    let fix = moved.shift_into(rect);
    if fix == Point::new(0.0, 0.0) {
        moved
    } else {
        moved.translated(fix)
    }
}

/// The cable bunched up on a gripper: scaled about the grasp point and carried
/// to `to`. Only used for observation; the topology is kept elsewhere.
pub fn bundle_view(d: &CableDiagram, grasp: Point, to: Point, scale: f64) -> CableDiagram {
    d.map_points(|p| to + (p - grasp) * scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bruce::plan_node_deletion;
    use crate::diagram::{build_graph, knot_template, KnotSpec, TemplateName, WORKSPACE};

    #[test]
    fn deletion_on_overhand_makes_progress() {
        let d = knot_template(KnotSpec::new(TemplateName::Overhand), 0, 6.0).unwrap();
        let g = build_graph(&d);
        let plan = plan_node_deletion(&g, &d, 6.0).unwrap();
        let out = node_deletion(&d, &plan, plan.pull_direction() * 80.0, 6.0, WORKSPACE).unwrap();
        let g2 = build_graph(&out);
        assert!(g2.vertex_count() < g.vertex_count());
        assert!(g2.edge_count() + 2 <= g.edge_count());
    }

    #[test]
    fn rotation_keeps_code() {
        let d = knot_template(KnotSpec::new(TemplateName::FigureEight), 0, 6.0).unwrap();
        let r = rotate_about(&d, Point::new(320.0, 240.0), 180.0);
        // a half turn swaps the endpoints, so the code reads backwards
        assert_eq!(r.code(), &d.code().reversed());
        r.validate(WORKSPACE).unwrap();
    }
}
