//! Local geometric edits used by the dynamics: tail retraction, tail
//! extension, curl insertion and removal, endpoint pulls.
//!
//! Every edit returns a fully validated diagram. Edits that cannot be carried
//! out without breaking the arrangement report an error and leave the input
//! untouched.

use thiserror::Error;

use super::cable::{CableDiagram, CrossingRecord, DiagramError, StrandPass};
use crate::geom::{arc_lengths, point_segment_dist, segment_segment_dist, Point, Rect};

const UNBOUNDED: Rect = Rect::new(f64::MIN, f64::MIN, f64::MAX, f64::MAX);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SurgeryError {
    #[error("no room for the edit")]
    NoRoom,
    #[error("edit position is off the cable")]
    OffCable,
    #[error(transparent)]
    Invalid(#[from] DiagramError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    Left,
    Right,
}

/// A point on the cable: segment index and parameter along it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CablePos {
    pub segment: usize,
    pub t: f64,
}

pub fn point_at(d: &CableDiagram, at: CablePos) -> Point {
    let pl = d.polyline();
    pl[at.segment].lerp(pl[at.segment + 1], at.t)
}

/// Position at arc length `s` from the left end, clamped to the cable.
pub fn pos_at_length(d: &CableDiagram, s: f64) -> CablePos {
    let pl = d.polyline();
    let acc = arc_lengths(pl);
    let total = *acc.last().unwrap();
    let s = s.clamp(0.0, total);
    for i in 0..pl.len() - 1 {
        if s <= acc[i + 1] || i == pl.len() - 2 {
            let len = acc[i + 1] - acc[i];
            let t = if len > 0.0 { (s - acc[i]) / len } else { 0.0 };
            return CablePos { segment: i, t: t.clamp(0.0, 1.0) };
        }
    }
    CablePos { segment: 0, t: 0.0 }
}

/// Nearest point on the cable to `p`: (segment, t, distance, arc length).
pub fn nearest_on_cable(d: &CableDiagram, p: Point) -> (CablePos, f64, f64) {
    let pl = d.polyline();
    let acc = arc_lengths(pl);
    let mut best = (CablePos { segment: 0, t: 0.0 }, f64::INFINITY, 0.0);
    for i in 0..pl.len() - 1 {
        let (t, dist) = crate::geom::project_to_segment(p, pl[i], pl[i + 1]);
        if dist < best.1 {
            best = (CablePos { segment: i, t }, dist, acc[i] + t * (acc[i + 1] - acc[i]));
        }
    }
    best
}

/// Keeps the cable up to `at` (exclusive of everything after it). Passes cut
/// away disappear; a crossing left with one pass disappears, a three-strand
/// crossing left with two passes is relabelled +1/-1.
pub fn cut_after(d: &CableDiagram, at: CablePos, workspace: Rect) -> Result<CableDiagram, SurgeryError> {
    let pl = d.polyline();
    if at.segment + 1 >= pl.len() {
        return Err(SurgeryError::OffCable);
    }
    let end = point_at(d, at);
    let mut poly: Vec<Point> = pl[..=at.segment].to_vec();
    if end != *poly.last().unwrap() {
        poly.push(end);
    }
    if poly.len() < 2 {
        return Err(SurgeryError::OffCable);
    }
    let last = poly.len() - 1;
    let mut crossings = Vec::new();
    for c in d.crossings() {
        let mut kept: Vec<StrandPass> = c.strands.iter().copied().filter(|s| s.vertex < last).collect();
        if kept.len() < 2 {
            continue;
        }
        if kept.len() < c.strands.len() {
            kept.sort_by_key(|s| -s.layer);
            kept[0].layer = 1;
            kept[1].layer = -1;
        }
        crossings.push(CrossingRecord { id: c.id, location: c.location, strands: kept });
    }
    // the cut end may now be the left one
    Ok(CableDiagram::new_oriented(poly, crossings, workspace)?)
}

/// Longest straight extension of `end` along `dir` (up to `length`) that keeps
/// `clearance` from the rest of the cable and stays inside `bounds`.
pub fn extend_end(
    d: &CableDiagram,
    end: End,
    dir: Point,
    length: f64,
    clearance: f64,
    bounds: Rect,
) -> CableDiagram {
    let work = match end {
        End::Right => d.clone(),
        End::Left => d.reversed(),
    };
    let pl = work.polyline();
    let tip = *pl.last().unwrap();
    let dir = dir.normalized();
    let acc = arc_lengths(pl);
    let total = *acc.last().unwrap();
    // the stretch right behind the tip is allowed to be near the extension
    let cutoff = total - 2.5 * clearance;
    let far: Vec<(Point, Point)> = (0..pl.len() - 1)
        .filter(|&i| acc[i] < cutoff)
        .map(|i| {
            let len = acc[i + 1] - acc[i];
            let b = if acc[i + 1] > cutoff && len > 0.0 { pl[i].lerp(pl[i + 1], (cutoff - acc[i]) / len) } else { pl[i + 1] };
            (pl[i], b)
        })
        .collect();
    let clear = |len: f64| {
        let q = tip + dir * len;
        if !bounds.contains(q) {
            return false;
        }
        far.iter().all(|&(a, b)| segment_segment_dist(tip, q, a, b) >= clearance)
    };
    let mut lo = 0.0;
    let mut hi = length;
    if clear(hi) {
        lo = hi;
    } else {
        for _ in 0..20 {
            let mid = 0.5 * (lo + hi);
            if clear(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    if lo < 1.0 {
        return d.clone();
    }
    let (mut poly, crossings) = work.into_parts();
    // a collinear continuation would only add a redundant vertex
    let q = tip + dir * lo;
    let prev = poly[poly.len() - 2];
    if (tip - prev).cross(q - tip).abs() < 1e-12 && (tip - prev).dot(q - tip) > 0.0 {
        *poly.last_mut().unwrap() = q;
    } else {
        poly.push(q);
    }
    let fixed = match CableDiagram::new_oriented(poly, crossings, UNBOUNDED) {
        Ok(x) => x,
        Err(_) => return d.clone(),
    };
    let fixed = match end {
        End::Right => fixed,
        End::Left => fixed.reversed(),
    };
    let out = fixed.oriented();
    if out.validate(bounds).is_ok() {
        out
    } else {
        d.clone()
    }
}

/// Inserts a small curl (a one-crossing loop) centred on the cable at arc
/// length `s`. `side` picks the loop side, `over_first` whether the first pass
/// along the cable is the over pass.
pub fn insert_curl(
    d: &CableDiagram,
    s: f64,
    side: f64,
    over_first: bool,
    radius: f64,
    workspace: Rect,
) -> Result<CableDiagram, SurgeryError> {
    let pl = d.polyline();
    let acc = arc_lengths(pl);
    let total = *acc.last().unwrap();
    let span = 3.0 * radius;
    if s - span <= 0.0 || s + span >= total {
        return Err(SurgeryError::NoRoom);
    }
    let passes = d.pass_vertices();
    let first_keep = (0..pl.len()).rev().find(|&i| acc[i] <= s - span).ok_or(SurgeryError::OffCable)?;
    let last_keep = (0..pl.len()).find(|&i| acc[i] >= s + span).ok_or(SurgeryError::OffCable)?;
    // the replaced stretch must hold no crossing passes
    if passes.iter().any(|&v| v > first_keep && v < last_keep) {
        return Err(SurgeryError::NoRoom);
    }
    let at = pos_at_length(d, s);
    let c = point_at(d, at);
    let t = (pl[at.segment + 1] - pl[at.segment]).normalized();
    let n = t.perp() * side.signum();
    let r = radius;
    let local = |x: f64, y: f64| c + t * (x * r) + n * (y * r);
    let loop_pts = [
        local(0.0, 0.0),
        local(0.7, 0.7),
        local(1.0, 1.6),
        local(0.5, 2.2),
        local(-0.5, 2.2),
        local(-1.0, 1.6),
        local(-0.7, 0.7),
        local(0.0, 0.0),
        local(0.7, -0.7),
    ];
    let shift = loop_pts.len() as isize - (last_keep as isize - first_keep as isize - 1);
    let mut poly: Vec<Point> = pl[..=first_keep].to_vec();
    let a = poly.len();
    poly.extend_from_slice(&loop_pts);
    let b = a + 7;
    poly.extend_from_slice(&pl[last_keep..]);
    let mut crossings: Vec<CrossingRecord> = d
        .crossings()
        .iter()
        .map(|cr| CrossingRecord {
            id: cr.id,
            location: cr.location,
            strands: cr
                .strands
                .iter()
                .map(|s| StrandPass {
                    vertex: if s.vertex >= last_keep { (s.vertex as isize + shift) as usize } else { s.vertex },
                    layer: s.layer,
                })
                .collect(),
        })
        .collect();
    let id = d.crossings().iter().map(|c| c.id).max().unwrap_or(0) + 1;
    let (la, lb) = if over_first { (1, -1) } else { (-1, 1) };
    crossings.push(CrossingRecord {
        id,
        location: c,
        strands: vec![StrandPass { vertex: a, layer: la }, StrandPass { vertex: b, layer: lb }],
    });
    let out = CableDiagram::new(poly, crossings, workspace)?;
    // keep the loop visibly clear of other strands
    let opl = out.polyline();
    for i in a..b + 1 {
        for j in 0..opl.len() - 1 {
            if j + 2 >= a && j <= b + 1 {
                continue;
            }
            if point_segment_dist(opl[i], opl[j], opl[j + 1]) < 0.8 * r {
                return Err(SurgeryError::NoRoom);
            }
        }
    }
    Ok(out)
}

/// Removes every curl (a two-pass crossing whose passes have no other pass
/// between them), innermost first. Returns the new diagram and how many went.
pub fn remove_curls(d: &CableDiagram, workspace: Rect) -> (CableDiagram, usize) {
    let mut cur = d.clone();
    let mut removed = 0;
    loop {
        let passes = cur.pass_vertices();
        let mut found = None;
        for c in cur.crossings() {
            if c.strands.len() != 2 {
                continue;
            }
            let (mut i, mut j) = (c.strands[0].vertex, c.strands[1].vertex);
            if i > j {
                std::mem::swap(&mut i, &mut j);
            }
            if !passes.iter().any(|&v| v > i && v < j) {
                found = Some((c.id, i, j));
                break;
            }
        }
        let Some((id, i, j)) = found else { break };
        let pl = cur.polyline();
        let mut poly: Vec<Point> = pl[..=i].to_vec();
        poly.extend_from_slice(&pl[j + 1..]);
        let crossings: Vec<CrossingRecord> = cur
            .crossings()
            .iter()
            .filter(|c| c.id != id)
            .map(|c| CrossingRecord {
                id: c.id,
                location: c.location,
                strands: c
                    .strands
                    .iter()
                    .map(|s| StrandPass { vertex: if s.vertex > j { s.vertex - (j - i) } else { s.vertex }, layer: s.layer })
                    .collect(),
            })
            .collect();
        match CableDiagram::new_oriented(poly, crossings, workspace) {
            Ok(next) => {
                cur = next.oriented();
                removed += 1;
            }
            Err(_) => break,
        }
    }
    (cur, removed)
}

/// Pulls one endpoint towards `target`. Prefers re-routing the free tail (the
/// stretch before the first crossing) as a straight run to `target`; falls back
/// to a straight extension of the current tip.
pub fn pull_end(d: &CableDiagram, end: End, target: Point, clearance: f64, workspace: Rect) -> CableDiagram {
    let work = match end {
        End::Left => d.clone(),
        End::Right => d.reversed(),
    };
    let pl = work.polyline();
    let first_pass = work.pass_vertices().first().copied();
    let rerouted = match first_pass {
        None => Some(CableDiagram::straight(target, *pl.last().unwrap())),
        Some(v) => {
            let keep = v - 1;
            let mut poly = vec![target];
            poly.extend_from_slice(&pl[keep..]);
            let shift = keep as isize - 1;
            let crossings: Vec<CrossingRecord> = work
                .crossings()
                .iter()
                .map(|c| CrossingRecord {
                    id: c.id,
                    location: c.location,
                    strands: c
                        .strands
                        .iter()
                        .map(|s| StrandPass { vertex: (s.vertex as isize - shift) as usize, layer: s.layer })
                        .collect(),
                })
                .collect();
            let clear = (2..poly.len() - 1).all(|j| segment_segment_dist(poly[0], poly[1], poly[j], poly[j + 1]) >= clearance);
            if clear {
                CableDiagram::new_oriented(poly, crossings, UNBOUNDED).ok()
            } else {
                None
            }
        }
    };
    let candidate = rerouted.map(|x| match end {
        End::Left => x,
        End::Right => x.reversed(),
    });
    if let Some(c) = candidate {
        let c = c.oriented();
        if c.validate(workspace).is_ok() && c.crossing_count() == d.crossing_count() {
            return c;
        }
    }
    let tip = match end {
        End::Left => d.endpoint_left(),
        End::Right => d.endpoint_right(),
    };
    let gap = target - tip;
    if gap.norm() < 1.0 {
        return d.clone();
    }
    extend_end(d, end_of(d, tip), gap, gap.norm(), clearance, workspace)
}

fn end_of(d: &CableDiagram, tip: Point) -> End {
    if d.endpoint_left() == tip {
        End::Left
    } else {
        End::Right
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::cable::WORKSPACE;
    use crate::diagram::embed::embed;
    use crate::diagram::gauss::parse_gauss_code;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn overhand() -> CableDiagram {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        embed(&parse_gauss_code("O1 U2 O3 U1 O2 U3").unwrap(), WORKSPACE, &mut rng).unwrap()
    }

    #[test]
    fn cutting_keeps_a_prefix_code() {
        let d = overhand();
        let v = d.pass_vertices()[5];
        let cut = cut_after(&d, CablePos { segment: v - 1, t: 0.5 }, WORKSPACE).unwrap();
        // passes 0..5 remain; crossing 3 lost its partner and vanished
        assert_eq!(cut.crossing_count() + 1, d.crossing_count());
    }

    #[test]
    fn curl_insert_then_remove() {
        let d = CableDiagram::straight(Point::new(100.0, 200.0), Point::new(400.0, 200.0));
        let c = insert_curl(&d, 150.0, 1.0, true, 10.0, WORKSPACE).unwrap();
        assert_eq!(c.code().to_string(), "O1 U1");
        let (r, n) = remove_curls(&c, WORKSPACE);
        assert_eq!((r.crossing_count(), n), (0, 1));
    }

    #[test]
    fn curl_refused_on_crossings() {
        let d = overhand();
        let v = d.pass_vertices()[2];
        let s = arc_lengths(d.polyline())[v];
        assert!(insert_curl(&d, s, 1.0, true, 10.0, WORKSPACE).is_err());
    }

    #[test]
    fn extension_stops_short_of_strands() {
        let d = CableDiagram::straight(Point::new(100.0, 200.0), Point::new(200.0, 200.0));
        let e = extend_end(&d, End::Right, Point::new(1.0, 0.0), 50.0, 6.0, WORKSPACE);
        assert!((e.endpoint_right().x - 250.0).abs() < 1e-9);
        // pointing back along itself: clearance blocks almost everything
        let e = extend_end(&d, End::Right, Point::new(-1.0, 0.05), 50.0, 6.0, WORKSPACE);
        assert!(e.length() < 120.0);
    }

    #[test]
    fn pulling_ends_keeps_code() {
        let d = overhand();
        let l = pull_end(&d, End::Left, Point::new(100.0, 240.0), 6.0, WORKSPACE);
        let r = pull_end(&l, End::Right, Point::new(540.0, 240.0), 6.0, WORKSPACE);
        assert_eq!(r.code(), d.code());
    }
}
