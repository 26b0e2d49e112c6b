//! Polyline cable diagrams with layered crossing records.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::gauss::{GaussCode, GaussEntry, GaussError, Pass};
use crate::geom::{arc_lengths, segments_intersect, Point, Rect};

/// One strand passing through a crossing: the polyline vertex sitting on the
/// crossing point and that strand's layer (+1 top, -1, -2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrandPass {
    pub vertex: usize,
    pub layer: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingRecord {
    pub id: u32,
    pub location: Point,
    pub strands: Vec<StrandPass>,
}

impl CrossingRecord {
    pub fn is_triple(&self) -> bool {
        self.strands.len() == 3
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagramError {
    #[error("polyline needs at least two points")]
    TooShort,
    #[error("polyline point {0} is not finite")]
    NonFinite(usize),
    #[error("polyline point {index} at ({x:.1}, {y:.1}) leaves the workspace")]
    OutsideWorkspace { index: usize, x: f64, y: f64 },
    #[error("endpoints are not ordered left to right")]
    EndpointOrder,
    #[error("crossing {0} has invalid strand layers")]
    BadLayers(u32),
    #[error("crossing {id}: strand vertex {vertex} is not an interior vertex at the crossing location")]
    BadStrandVertex { id: u32, vertex: usize },
    #[error("polyline vertex {0} is claimed by two crossing passes")]
    SharedVertex(usize),
    #[error("crossing {0}: strands do not cross transversally")]
    NotTransversal(u32),
    #[error("segments {0} and {1} intersect outside a recorded crossing")]
    StrayIntersection(usize, usize),
    #[error("duplicate crossing id {0}")]
    DuplicateId(u32),
    #[error(transparent)]
    Code(#[from] GaussError),
    #[error("serialized diagram: {0}")]
    Format(String),
}

/// Default image and workspace rectangle (pixels).
pub const IMAGE_WIDTH: usize = 640;
pub const IMAGE_HEIGHT: usize = 480;
pub const WORKSPACE: Rect = Rect::new(0.0, 0.0, 639.0, 479.0);

/// Cable geometry plus the layered crossing records that make its Gauss code.
#[derive(Debug, Clone, PartialEq)]
pub struct CableDiagram {
    polyline: Vec<Point>,
    crossings: Vec<CrossingRecord>,
    code: GaussCode,
}

impl CableDiagram {
    /// Builds and fully validates a diagram inside `workspace`.
    pub fn new(
        polyline: Vec<Point>,
        mut crossings: Vec<CrossingRecord>,
        workspace: Rect,
    ) -> Result<Self, DiagramError> {
        crossings.sort_by_key(|c| c.id);
        let code = read_gauss(&polyline, &crossings)?;
        let d = CableDiagram { polyline, crossings, code };
        d.validate(workspace)?;
        Ok(d)
    }

    /// Like `new`, but reads the cable from the other end first when the
    /// endpoints are out of order.
    pub fn new_oriented(
        mut polyline: Vec<Point>,
        mut crossings: Vec<CrossingRecord>,
        workspace: Rect,
    ) -> Result<Self, DiagramError> {
        let n = polyline.len();
        if n >= 2 && !left_of(polyline[0], polyline[n - 1]) {
            polyline.reverse();
            for c in &mut crossings {
                for s in &mut c.strands {
                    s.vertex = n - 1 - s.vertex;
                }
            }
        }
        Self::new(polyline, crossings, workspace)
    }

    /// Builds a diagram without the workspace check; geometry is still validated.
    pub fn new_unbounded(polyline: Vec<Point>, crossings: Vec<CrossingRecord>) -> Result<Self, DiagramError> {
        let r = Rect::new(f64::MIN, f64::MIN, f64::MAX, f64::MAX);
        Self::new(polyline, crossings, r)
    }

    pub fn straight(a: Point, b: Point) -> Self {
        let (a, b) = if left_of(a, b) { (a, b) } else { (b, a) };
        CableDiagram { polyline: vec![a, b], crossings: Vec::new(), code: GaussCode::empty() }
    }

    pub fn polyline(&self) -> &[Point] {
        &self.polyline
    }

    pub fn crossings(&self) -> &[CrossingRecord] {
        &self.crossings
    }

    pub fn code(&self) -> &GaussCode {
        &self.code
    }

    pub fn crossing_count(&self) -> usize {
        self.crossings.len()
    }

    pub fn endpoint_left(&self) -> Point {
        self.polyline[0]
    }

    pub fn endpoint_right(&self) -> Point {
        *self.polyline.last().expect("polyline is never empty")
    }

    pub fn crossing(&self, id: u32) -> Option<&CrossingRecord> {
        self.crossings.iter().find(|c| c.id == id)
    }

    pub fn length(&self) -> f64 {
        *arc_lengths(&self.polyline).last().unwrap_or(&0.0)
    }

    pub fn bounds(&self) -> Rect {
        Rect::bounding(&self.polyline).expect("polyline is never empty")
    }

    /// Polyline vertex index of every crossing pass, keyed by vertex.
    pub fn pass_at_vertex(&self) -> HashMap<usize, (u32, i8)> {
        let mut m = HashMap::new();
        for c in &self.crossings {
            for s in &c.strands {
                m.insert(s.vertex, (c.id, s.layer));
            }
        }
        m
    }

    /// Sorted polyline indices of all crossing passes.
    pub fn pass_vertices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.crossings.iter().flat_map(|c| c.strands.iter().map(|s| s.vertex)).collect();
        v.sort_unstable();
        v
    }

    pub fn validate(&self, workspace: Rect) -> Result<(), DiagramError> {
        let pl = &self.polyline;
        if pl.len() < 2 {
            return Err(DiagramError::TooShort);
        }
        for (i, p) in pl.iter().enumerate() {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(DiagramError::NonFinite(i));
            }
            if !workspace.contains(*p) {
                return Err(DiagramError::OutsideWorkspace { index: i, x: p.x, y: p.y });
            }
        }
        if !left_of(pl[0], pl[pl.len() - 1]) {
            return Err(DiagramError::EndpointOrder);
        }
        let mut owner: HashMap<usize, u32> = HashMap::new();
        for c in &self.crossings {
            let mut layers: Vec<i8> = c.strands.iter().map(|s| s.layer).collect();
            layers.sort_unstable();
            let ok = match layers.as_slice() {
                [-1, 1] | [-2, -1, 1] => true,
                _ => false,
            };
            if !ok {
                return Err(DiagramError::BadLayers(c.id));
            }
            for s in &c.strands {
                if s.vertex == 0 || s.vertex + 1 >= pl.len() || pl[s.vertex] != c.location {
                    return Err(DiagramError::BadStrandVertex { id: c.id, vertex: s.vertex });
                }
                if owner.insert(s.vertex, c.id).is_some() {
                    return Err(DiagramError::SharedVertex(s.vertex));
                }
            }
            if !transversal(pl, c) {
                return Err(DiagramError::NotTransversal(c.id));
            }
        }
        check_stray_intersections(pl, &owner)
    }

    /// The diagram traced from the other end, i.e. with the polyline reversed.
    pub fn reversed(&self) -> CableDiagram {
        let n = self.polyline.len();
        let mut polyline = self.polyline.clone();
        polyline.reverse();
        let crossings = self
            .crossings
            .iter()
            .map(|c| CrossingRecord {
                id: c.id,
                location: c.location,
                strands: c.strands.iter().map(|s| StrandPass { vertex: n - 1 - s.vertex, layer: s.layer }).collect(),
            })
            .collect();
        CableDiagram { polyline, crossings, code: self.code.reversed() }
    }

    /// Maps every point through `f`. The caller guarantees `f` is a similarity
    /// (it preserves the arrangement); endpoint order is restored afterwards.
    pub fn map_points(&self, f: impl Fn(Point) -> Point) -> CableDiagram {
        let polyline: Vec<Point> = self.polyline.iter().map(|&p| f(p)).collect();
        let crossings = self
            .crossings
            .iter()
            .map(|c| CrossingRecord { id: c.id, location: polyline[c.strands[0].vertex], strands: c.strands.clone() })
            .collect();
        CableDiagram { polyline, crossings, code: self.code.clone() }.oriented()
    }

    pub fn translated(&self, by: Point) -> CableDiagram {
        self.map_points(|p| p + by)
    }

    /// Restores the left-to-right endpoint order by reversing if needed.
    pub fn oriented(self) -> CableDiagram {
        let n = self.polyline.len();
        if left_of(self.polyline[0], self.polyline[n - 1]) {
            self
        } else {
            self.reversed()
        }
    }

    /// Smallest shift that moves the bounding box inside `rect` (zero if it already fits).
    pub fn shift_into(&self, rect: Rect) -> Point {
        let b = self.bounds();
        let fix = |lo: f64, hi: f64, rlo: f64, rhi: f64| {
            if hi - lo > rhi - rlo {
                (rlo + rhi) / 2.0 - (lo + hi) / 2.0
            } else if lo < rlo {
                rlo - lo
            } else if hi > rhi {
                rhi - hi
            } else {
                0.0
            }
        };
        Point::new(fix(b.min.x, b.max.x, rect.min.x, rect.max.x), fix(b.min.y, b.max.y, rect.min.y, rect.max.y))
    }

    pub(crate) fn into_parts(self) -> (Vec<Point>, Vec<CrossingRecord>) {
        (self.polyline, self.crossings)
    }
}

/// Endpoint order: smaller x is left, ties go to smaller y.
pub fn left_of(a: Point, b: Point) -> bool {
    a.x < b.x || (a.x == b.x && a.y <= b.y)
}

/// Reads the Gauss code off the crossing records by sorting passes along the polyline.
pub fn read_gauss(polyline: &[Point], crossings: &[CrossingRecord]) -> Result<GaussCode, DiagramError> {
    let mut passes: Vec<(usize, GaussEntry)> = Vec::new();
    let mut ids = std::collections::HashSet::new();
    for c in crossings {
        if !ids.insert(c.id) {
            return Err(DiagramError::DuplicateId(c.id));
        }
        for s in &c.strands {
            if s.vertex >= polyline.len() {
                return Err(DiagramError::BadStrandVertex { id: c.id, vertex: s.vertex });
            }
            let pass = Pass::from_layer(s.layer).ok_or(DiagramError::BadLayers(c.id))?;
            passes.push((s.vertex, GaussEntry { crossing: c.id, pass }));
        }
    }
    passes.sort_by_key(|(v, _)| *v);
    Ok(GaussCode::new(passes.into_iter().map(|(_, e)| e).collect())?)
}

fn angle_of(v: Point) -> f64 {
    v.y.atan2(v.x)
}

/// Every pair of strands at the crossing must interleave around the crossing point.
fn transversal(pl: &[Point], c: &CrossingRecord) -> bool {
    let o = c.location;
    let dirs: Vec<(f64, f64)> = c
        .strands
        .iter()
        .map(|s| (angle_of(pl[s.vertex - 1] - o), angle_of(pl[s.vertex + 1] - o)))
        .collect();
    for s in &c.strands {
        if pl[s.vertex - 1] == o || pl[s.vertex + 1] == o {
            return false;
        }
    }
    let mut all: Vec<f64> = dirs.iter().flat_map(|&(a, b)| [a, b]).collect();
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if all.windows(2).any(|w| (w[1] - w[0]).abs() < 1e-9) {
        return false;
    }
    let between = |x: f64, lo: f64, hi: f64| {
        let (lo, hi) = if lo < hi { (lo, hi) } else { (hi, lo) };
        x > lo && x < hi
    };
    for i in 0..dirs.len() {
        for j in (i + 1)..dirs.len() {
            let (a0, a1) = dirs[i];
            let (b0, b1) = dirs[j];
            if between(b0, a0, a1) == between(b1, a0, a1) {
                return false;
            }
        }
    }
    true
}

fn check_stray_intersections(pl: &[Point], owner: &HashMap<usize, u32>) -> Result<(), DiagramError> {
    let n = pl.len() - 1;
    let boxes: Vec<Rect> = (0..n).map(|i| Rect::bounding(&pl[i..=i + 1]).unwrap()).collect();
    for i in 0..n {
        // consecutive segments may only meet at their shared vertex
        if i + 1 < n {
            let a = pl[i] - pl[i + 1];
            let b = pl[i + 2] - pl[i + 1];
            if a.cross(b) == 0.0 && a.dot(b) > 0.0 {
                return Err(DiagramError::StrayIntersection(i, i + 1));
            }
        }
        for j in (i + 2)..n {
            let (bi, bj) = (&boxes[i], &boxes[j]);
            if bi.max.x < bj.min.x || bj.max.x < bi.min.x || bi.max.y < bj.min.y || bj.max.y < bi.min.y {
                continue;
            }
            if !segments_intersect(pl[i], pl[i + 1], pl[j], pl[j + 1]) {
                continue;
            }
            if shared_crossing_touch(pl, owner, i, j) {
                continue;
            }
            return Err(DiagramError::StrayIntersection(i, j));
        }
    }
    Ok(())
}

/// Segments `i` and `j` meet only at a crossing point both of them end on.
fn shared_crossing_touch(pl: &[Point], owner: &HashMap<usize, u32>, i: usize, j: usize) -> bool {
    for vi in [i, i + 1] {
        for vj in [j, j + 1] {
            if vi == vj {
                continue;
            }
            match (owner.get(&vi), owner.get(&vj)) {
                (Some(a), Some(b)) if a == b && pl[vi] == pl[vj] => {
                    // the other ends must not touch the opposite segment
                    let oi = if vi == i { i + 1 } else { i };
                    let oj = if vj == j { j + 1 } else { j };
                    let (a0, a1) = (pl[vi], pl[oi]);
                    let (b0, b1) = (pl[vj], pl[oj]);
                    let d1 = (a1 - a0).cross(b1 - b0);
                    return d1 != 0.0;
                }
                _ => {}
            }
        }
    }
    false
}

#[derive(Serialize, Deserialize)]
struct DiagramJson {
    v: u32,
    polyline: Vec<[f64; 2]>,
    crossings: Vec<CrossingJson>,
    endpoints: EndpointsJson,
    code: String,
}

#[derive(Serialize, Deserialize)]
struct CrossingJson {
    id: u32,
    location: [f64; 2],
    strands: Vec<StrandPass>,
}

#[derive(Serialize, Deserialize)]
struct EndpointsJson {
    left: [f64; 2],
    right: [f64; 2],
}

fn arr(p: Point) -> [f64; 2] {
    [p.x, p.y]
}

fn pt(a: [f64; 2]) -> Point {
    Point::new(a[0], a[1])
}

impl CableDiagram {
    /// Version 1 JSON: `{"v":1, "polyline":[[x,y]..], "crossings":[{id, location, strands:[{vertex, layer}]}],
    /// "endpoints":{"left":[x,y],"right":[x,y]}, "code":"O1 U2 .."}`.
    pub fn to_json(&self) -> serde_json::Value {
        let j = DiagramJson {
            v: 1,
            polyline: self.polyline.iter().map(|&p| arr(p)).collect(),
            crossings: self
                .crossings
                .iter()
                .map(|c| CrossingJson { id: c.id, location: arr(c.location), strands: c.strands.clone() })
                .collect(),
            endpoints: EndpointsJson { left: arr(self.endpoint_left()), right: arr(self.endpoint_right()) },
            code: self.code.to_string(),
        };
        serde_json::to_value(j).expect("diagram json is always serializable")
    }

    pub fn from_json(value: &serde_json::Value, workspace: Rect) -> Result<CableDiagram, DiagramError> {
        let j: DiagramJson =
            serde_json::from_value(value.clone()).map_err(|e| DiagramError::Format(e.to_string()))?;
        if j.v != 1 {
            return Err(DiagramError::Format(format!("unsupported version {}", j.v)));
        }
        let polyline: Vec<Point> = j.polyline.into_iter().map(pt).collect();
        let crossings = j
            .crossings
            .into_iter()
            .map(|c| CrossingRecord { id: c.id, location: pt(c.location), strands: c.strands })
            .collect();
        let d = CableDiagram::new(polyline, crossings, workspace)?;
        if pt(j.endpoints.left) != d.endpoint_left() || pt(j.endpoints.right) != d.endpoint_right() {
            return Err(DiagramError::Format("endpoints disagree with polyline".into()));
        }
        if j.code != d.code.to_string() {
            return Err(DiagramError::Format("stored code disagrees with crossings".into()));
        }
        Ok(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// A hand-built curl: along the x axis with one loop above it.
    pub(crate) fn curl() -> CableDiagram {
        let c = Point::new(100.0, 100.0);
        let pl = vec![
            Point::new(40.0, 100.0),
            c,
            Point::new(110.0, 90.0),
            Point::new(110.0, 70.0),
            Point::new(90.0, 70.0),
            Point::new(90.0, 90.0),
            c,
            Point::new(110.0, 110.0),
            Point::new(160.0, 100.0),
        ];
        let strands = vec![StrandPass { vertex: 1, layer: 1 }, StrandPass { vertex: 6, layer: -1 }];
        CableDiagram::new(pl, vec![CrossingRecord { id: 1, location: c, strands }], WORKSPACE).unwrap()
    }

    #[test]
    fn curl_reads_back() {
        let d = curl();
        assert_eq!(d.code().to_string(), "O1 U1");
        assert_eq!(d.reversed().oriented(), d);
    }

    #[test]
    fn json_round_trip() {
        let d = curl();
        let j = d.to_json();
        assert_eq!(j["v"], 1);
        assert_eq!(CableDiagram::from_json(&j, WORKSPACE).unwrap(), d);
    }

    #[test]
    fn stray_intersection_detected() {
        let pl = vec![
            Point::new(10.0, 10.0),
            Point::new(50.0, 50.0),
            Point::new(50.0, 10.0),
            Point::new(10.0, 50.0),
            Point::new(60.0, 60.0),
        ];
        assert!(matches!(
            CableDiagram::new(pl, vec![], WORKSPACE),
            Err(DiagramError::StrayIntersection(0, 2))
        ));
    }

    #[test]
    fn tangent_touch_is_not_a_crossing() {
        // second strand bounces off the crossing point instead of passing through
        let c = Point::new(50.0, 50.0);
        let pl = vec![
            Point::new(10.0, 50.0),
            c,
            Point::new(90.0, 50.0),
            Point::new(90.0, 90.0),
            Point::new(60.0, 90.0),
            c,
            Point::new(40.0, 90.0),
            Point::new(45.0, 120.0),
        ];
        let strands = vec![StrandPass { vertex: 1, layer: 1 }, StrandPass { vertex: 5, layer: -1 }];
        let r = CableDiagram::new(pl, vec![CrossingRecord { id: 1, location: c, strands }], WORKSPACE);
        assert!(matches!(r, Err(DiagramError::NotTransversal(1))));
    }

    #[test]
    fn workspace_and_order_checked() {
        let pl = vec![Point::new(-5.0, 1.0), Point::new(10.0, 1.0)];
        assert!(matches!(CableDiagram::new(pl, vec![], WORKSPACE), Err(DiagramError::OutsideWorkspace { .. })));
        let pl = vec![Point::new(20.0, 1.0), Point::new(10.0, 1.0)];
        assert!(matches!(CableDiagram::new(pl, vec![], WORKSPACE), Err(DiagramError::EndpointOrder)));
        // equal x: smaller y is left
        let pl = vec![Point::new(10.0, 1.0), Point::new(10.0, 30.0)];
        assert!(CableDiagram::new(pl, vec![], WORKSPACE).is_ok());
    }
}
