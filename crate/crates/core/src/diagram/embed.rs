//! Layout engine: turns a Gauss code into a planar polyline whose crossings
//! reproduce the code.
//!
//! Pipeline: search crossing rotation systems for a planar one (Euler check on
//! traced faces), subdivide arcs, triangulate every face, solve a Tutte
//! barycentric embedding with a convex outer ring, relax with moves that never
//! change the arrangement, then smooth arcs. Canonical layouts are memoised per
//! code and each seed only applies a similarity transform.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::Rng;
use thiserror::Error;

use super::cable::{CableDiagram, CrossingRecord, DiagramError, StrandPass, WORKSPACE};
use super::gauss::GaussCode;
use crate::geom::{point_in_triangle, segments_intersect, Point, Rect};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmbedError {
    #[error("code has no planar realization")]
    NotRealizable,
    #[error("rotation search over {0} crossings exceeds the search budget")]
    TooComplex(usize),
    #[error("layout needs {needed:.0} px but the workspace offers {available:.0} px")]
    Capacity { needed: f64, available: f64 },
    #[error("layout failed after {0} attempts: {1}")]
    Failed(usize, DiagramError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbedOptions {
    pub cable_width: f64,
    /// Largest extent of the laid-out knot before jitter, in pixels.
    pub size: f64,
    pub center: Point,
    pub workspace: Rect,
    /// Rotation jitter bound in degrees.
    pub max_tilt_deg: f64,
    pub mirror: bool,
}

impl Default for EmbedOptions {
    fn default() -> Self {
        EmbedOptions {
            cable_width: 6.0,
            size: 220.0,
            center: Point::new(320.0, 240.0),
            workspace: WORKSPACE,
            max_tilt_deg: 12.0,
            mirror: true,
        }
    }
}

const DUMMIES_PER_ARC: usize = 3;
const SEARCH_BUDGET: u64 = 1 << 20;
const ATTEMPTS: usize = 8;

/// Unit-scale layout shared by every seed of a code.
#[derive(Debug, Clone)]
pub struct CanonicalLayout {
    pub polyline: Vec<Point>,
    pub crossings: Vec<(u32, Vec<StrandPass>)>,
    /// Smallest distance between two distinct crossing points.
    pub min_crossing_sep: f64,
}

fn cache() -> &'static Mutex<HashMap<String, Arc<CanonicalLayout>>> {
    static CACHE: OnceLock<Mutex<HashMap<String, Arc<CanonicalLayout>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

pub fn canonical_layout(code: &GaussCode) -> Result<Arc<CanonicalLayout>, EmbedError> {
    let key = code.to_string();
    if let Some(c) = cache().lock().unwrap().get(&key) {
        return Ok(c.clone());
    }
    let layout = Arc::new(compute_canonical(code)?);
    cache().lock().unwrap().insert(key, layout.clone());
    Ok(layout)
}

pub fn embed(code: &GaussCode, workspace: Rect, rng: &mut impl Rng) -> Result<CableDiagram, EmbedError> {
    let opts = EmbedOptions { workspace, center: workspace.center(), ..EmbedOptions::default() };
    embed_with(code, &opts, rng)
}

pub fn embed_with(code: &GaussCode, opts: &EmbedOptions, rng: &mut impl Rng) -> Result<CableDiagram, EmbedError> {
    if code.is_empty() {
        let half = (opts.size / 2.0).min(opts.workspace.width() / 2.0 - 1.0);
        let dy: f64 = rng.random_range(-5.0..=5.0);
        let c = opts.workspace.clamp(opts.center + Point::new(0.0, dy));
        let a = opts.workspace.clamp(c - Point::new(half, 0.0));
        let b = opts.workspace.clamp(c + Point::new(half, 0.0));
        return Ok(CableDiagram::straight(a, b));
    }
    let canon = canonical_layout(code)?;
    let min_scale = if canon.min_crossing_sep > 0.0 {
        2.0 * opts.cable_width * 1.05 / canon.min_crossing_sep
    } else {
        0.0
    };
    let mut last_err = None;
    for _ in 0..ATTEMPTS {
        let tilt = rng.random_range(-opts.max_tilt_deg..=opts.max_tilt_deg).to_radians();
        let jitter: f64 = rng.random_range(0.92..=1.08);
        let flip = opts.mirror && rng.random_bool(0.5);
        let shift = Point::new(rng.random_range(-8.0..=8.0), rng.random_range(-8.0..=8.0));
        let scale = (opts.size * jitter).max(min_scale);
        let needed = scale;
        if needed > opts.workspace.width().min(opts.workspace.height()) * 1.4 {
            return Err(EmbedError::Capacity {
                needed,
                available: opts.workspace.width().min(opts.workspace.height()),
            });
        }
        let map = |p: Point| {
            let q = if flip { Point::new(p.x, -p.y) } else { p };
            q.rotated(tilt) * scale + opts.center + shift
        };
        let polyline: Vec<Point> = canon.polyline.iter().map(|&p| map(p)).collect();
        let crossings: Vec<CrossingRecord> = canon
            .crossings
            .iter()
            .map(|(id, strands)| CrossingRecord { id: *id, location: polyline[strands[0].vertex], strands: strands.clone() })
            .collect();
        let placed = match CableDiagram::new_unbounded(polyline, crossings) {
            Ok(d) => d,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let shift_in = placed.shift_into(opts.workspace.inflate(-opts.cable_width));
        let placed = placed.translated(shift_in);
        let b = placed.bounds();
        if b.width() > opts.workspace.width() || b.height() > opts.workspace.height() {
            return Err(EmbedError::Capacity {
                needed: b.width().max(b.height()),
                available: opts.workspace.width().min(opts.workspace.height()),
            });
        }
        match placed.validate(opts.workspace) {
            Ok(()) => {
                if placed.code() == code {
                    return Ok(placed);
                }
                // a scale that creates exact coincidences can reorder passes; retry
                last_err = Some(DiagramError::Format("read-off mismatch".into()));
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(EmbedError::Failed(ATTEMPTS, last_err.unwrap_or(DiagramError::TooShort)))
}

/// Cyclic dart structure of a code. Dart `2k` leaves the start of arc `k`,
/// dart `2k+1` leaves its end; arc `k` runs from pass `k-1` to pass `k`.
struct Word {
    len: usize,
    /// crossing index of every pass
    event_crossing: Vec<usize>,
    ids: Vec<u32>,
    layers: Vec<i8>,
    events_of: Vec<Vec<usize>>,
}

impl Word {
    fn new(code: &GaussCode) -> Word {
        let ids = code.crossing_ids();
        let index: HashMap<u32, usize> = ids.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let event_crossing: Vec<usize> = code.entries().iter().map(|e| index[&e.crossing]).collect();
        let layers = code.entries().iter().map(|e| e.pass.layer()).collect();
        let mut events_of = vec![Vec::new(); ids.len()];
        for (e, &c) in event_crossing.iter().enumerate() {
            events_of[c].push(e);
        }
        Word { len: code.len(), event_crossing, ids, layers, events_of }
    }

    fn dart_count(&self) -> usize {
        2 * (self.len + 1)
    }

    fn choices(&self, c: usize) -> usize {
        if self.events_of[c].len() == 3 {
            8
        } else {
            2
        }
    }

    /// Counter-clockwise rotation system for a choice vector.
    fn rotation(&self, choice: &[usize]) -> Vec<usize> {
        let mut rot: Vec<usize> = (0..self.dart_count()).collect();
        let inc = |e: usize| 2 * e + 1;
        let out = |e: usize| 2 * e + 2;
        for (c, evs) in self.events_of.iter().enumerate() {
            let order: Vec<usize> = if evs.len() == 2 {
                let (a, b) = (evs[0], evs[1]);
                if choice[c] == 0 {
                    vec![inc(a), inc(b), out(a), out(b)]
                } else {
                    vec![inc(a), out(b), out(a), inc(b)]
                }
            } else {
                let (a, b, cc) = (evs[0], evs[1], evs[2]);
                let k = choice[c];
                let (s1, s2) = if k & 1 == 0 { (b, cc) } else { (cc, b) };
                let (p1, q1) = if k & 2 == 0 { (inc(s1), out(s1)) } else { (out(s1), inc(s1)) };
                let (p2, q2) = if k & 4 == 0 { (inc(s2), out(s2)) } else { (out(s2), inc(s2)) };
                vec![inc(a), p1, p2, out(a), q1, q2]
            };
            for i in 0..order.len() {
                rot[order[i]] = order[(i + 1) % order.len()];
            }
        }
        rot
    }

    fn faces(&self, rot: &[usize]) -> Vec<Vec<usize>> {
        let n = self.dart_count();
        let mut seen = vec![false; n];
        let mut faces = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut f = Vec::new();
            let mut d = start;
            while !seen[d] {
                seen[d] = true;
                f.push(d);
                d = rot[d ^ 1];
            }
            faces.push(f);
        }
        faces
    }

    fn is_planar(&self, faces: &[Vec<usize>]) -> bool {
        let v = self.ids.len() as i64 + 2;
        let e = self.len as i64 + 1;
        v - e + faces.len() as i64 == 2
    }
}

struct Embedding {
    faces: Vec<Vec<usize>>,
    outer: usize,
}

fn search_rotation(word: &Word) -> Result<Embedding, EmbedError> {
    let n = word.ids.len();
    let mut total: u64 = 1;
    for c in 0..n {
        total = total.saturating_mul(word.choices(c) as u64);
    }
    if total > SEARCH_BUDGET {
        return Err(EmbedError::TooComplex(n));
    }
    let left = 0usize;
    let right = 2 * word.len + 1;
    let mut best: Option<(usize, Embedding)> = None;
    let mut fallback: Option<Embedding> = None;
    let mut choice = vec![0usize; n];
    for mut k in 0..total {
        for (c, slot) in choice.iter_mut().enumerate() {
            let m = word.choices(c) as u64;
            *slot = (k % m) as usize;
            k /= m;
        }
        let rot = word.rotation(&choice);
        let faces = word.faces(&rot);
        if !word.is_planar(&faces) {
            continue;
        }
        let face_of = |d: usize| faces.iter().position(|f| f.contains(&d)).unwrap();
        let (fl, fr) = (face_of(left), face_of(right));
        if fl == fr {
            let score = faces[fl].len();
            if best.as_ref().map_or(true, |(s, _)| score > *s) {
                best = Some((score, Embedding { faces, outer: fl }));
            }
        } else if fallback.is_none() {
            fallback = Some(Embedding { faces, outer: fr });
        }
    }
    best.map(|(_, e)| e).or(fallback).ok_or(EmbedError::NotRealizable)
}

/// Node numbering: crossings `0..n`, left end `n`, right end `n+1`, then the
/// dummies of arc `k` at `n + 2 + k*DUMMIES_PER_ARC ..`.
struct Skeleton {
    node_count: usize,
    /// polyline as node ids, left to right
    path: Vec<usize>,
    /// face walks as node ids
    faces: Vec<Vec<usize>>,
    outer: usize,
}

fn skeleton(word: &Word, emb: &Embedding) -> Skeleton {
    let n = word.ids.len();
    let l = word.len;
    let dummy = |k: usize, j: usize| n + 2 + k * DUMMIES_PER_ARC + j;
    let origin = |d: usize| {
        let (k, side) = (d / 2, d % 2);
        if side == 0 {
            if k == 0 {
                n
            } else {
                word.event_crossing[k - 1]
            }
        } else if k == l {
            n + 1
        } else {
            word.event_crossing[k]
        }
    };
    let mut path = vec![n];
    for k in 0..=l {
        for j in 0..DUMMIES_PER_ARC {
            path.push(dummy(k, j));
        }
        path.push(if k == l { n + 1 } else { word.event_crossing[k] });
    }
    let faces = emb
        .faces
        .iter()
        .map(|f| {
            let mut walk = Vec::new();
            for &d in f {
                walk.push(origin(d));
                let k = d / 2;
                if d % 2 == 0 {
                    walk.extend((0..DUMMIES_PER_ARC).map(|j| dummy(k, j)));
                } else {
                    walk.extend((0..DUMMIES_PER_ARC).rev().map(|j| dummy(k, j)));
                }
            }
            walk
        })
        .collect();
    Skeleton { node_count: n + 2 + (l + 1) * DUMMIES_PER_ARC, path, faces, outer: emb.outer }
}

/// Tutte embedding of the skeleton with every face triangulated by a ring of
/// helper vertices plus a hub, and the outer face bounded by a fixed circle.
fn tutte(sk: &Skeleton, ccw: bool) -> Vec<Point> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); sk.node_count];
    let add_node = |adj: &mut Vec<Vec<usize>>| {
        adj.push(Vec::new());
        adj.len() - 1
    };
    let link = |adj: &mut Vec<Vec<usize>>, a: usize, b: usize| {
        adj[a].push(b);
        adj[b].push(a);
    };
    for w in sk.path.windows(2) {
        link(&mut adj, w[0], w[1]);
    }
    let mut fixed: HashMap<usize, Point> = HashMap::new();
    for (fi, walk) in sk.faces.iter().enumerate() {
        let m = walk.len();
        let ring: Vec<usize> = (0..m).map(|_| add_node(&mut adj)).collect();
        for i in 0..m {
            link(&mut adj, ring[i], walk[i]);
            link(&mut adj, ring[i], walk[(i + 1) % m]);
            link(&mut adj, ring[i], ring[(i + 1) % m]);
        }
        if fi == sk.outer {
            // which sense matches the walk is decided by the caller's planarity check
            let sense = if ccw { 1.0 } else { -1.0 };
            for (i, &r) in ring.iter().enumerate() {
                let a = sense * std::f64::consts::TAU * (i as f64 + 0.5) / m as f64;
                fixed.insert(r, Point::new(a.cos(), a.sin()));
            }
        } else {
            let hub = add_node(&mut adj);
            for &r in &ring {
                link(&mut adj, hub, r);
            }
        }
    }
    let total = adj.len();
    let free: Vec<usize> = (0..total).filter(|v| !fixed.contains_key(v)).collect();
    let mut slot = vec![usize::MAX; total];
    for (i, &v) in free.iter().enumerate() {
        slot[v] = i;
    }
    let mut pos = vec![Point::default(); total];
    for (&v, &p) in &fixed {
        pos[v] = p;
    }
    let sx = solve_laplacian(&adj, &free, &slot, &pos, |p| p.x);
    let sy = solve_laplacian(&adj, &free, &slot, &pos, |p| p.y);
    for (i, &v) in free.iter().enumerate() {
        pos[v] = Point::new(sx[i], sy[i]);
    }
    pos.truncate(sk.node_count);
    pos
}

/// Conjugate gradients on the free-vertex Laplacian, one coordinate at a time.
fn solve_laplacian(
    adj: &[Vec<usize>],
    free: &[usize],
    slot: &[usize],
    pos: &[Point],
    coord: impl Fn(Point) -> f64,
) -> Vec<f64> {
    let n = free.len();
    let mut b = vec![0.0; n];
    for (i, &v) in free.iter().enumerate() {
        for &u in &adj[v] {
            if slot[u] == usize::MAX {
                b[i] += coord(pos[u]);
            }
        }
    }
    let apply = |x: &[f64], out: &mut [f64]| {
        for (i, &v) in free.iter().enumerate() {
            let mut s = adj[v].len() as f64 * x[i];
            for &u in &adj[v] {
                if slot[u] != usize::MAX {
                    s -= x[slot[u]];
                }
            }
            out[i] = s;
        }
    };
    let mut x = vec![0.0; n];
    let mut r = b.clone();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    for _ in 0..(4 * n + 50) {
        if rr < 1e-24 {
            break;
        }
        apply(&p, &mut ap);
        let alpha = rr / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr2: f64 = r.iter().map(|v| v * v).sum();
        let beta = rr2 / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr2;
    }
    x
}

fn straight_line_planar(pos: &[Point], path: &[usize]) -> bool {
    let g = PlaneGraph::new(pos.to_vec(), path);
    for (i, &(a, b)) in g.edges.iter().enumerate() {
        for &(c, d) in &g.edges[i + 1..] {
            if a == c || a == d || b == c || b == d {
                continue;
            }
            if segments_intersect(pos[a], pos[b], pos[c], pos[d]) {
                return false;
            }
        }
    }
    true
}

/// Straight-segment plane graph used during relaxation.
struct PlaneGraph {
    pos: Vec<Point>,
    edges: Vec<(usize, usize)>,
    incident: Vec<Vec<usize>>,
}

impl PlaneGraph {
    fn new(pos: Vec<Point>, path: &[usize]) -> PlaneGraph {
        let edges: Vec<(usize, usize)> = path.windows(2).map(|w| (w[0], w[1])).collect();
        let mut incident = vec![Vec::new(); pos.len()];
        for (i, &(a, b)) in edges.iter().enumerate() {
            incident[a].push(i);
            incident[b].push(i);
        }
        PlaneGraph { pos, edges, incident }
    }

    fn other(&self, e: usize, v: usize) -> usize {
        let (a, b) = self.edges[e];
        if a == v {
            b
        } else {
            a
        }
    }

    fn min_gap_ok(&self, v: usize, at: Point, moved: usize, moved_to: Point) -> bool {
        let p = |u: usize| if u == moved { moved_to } else { self.pos[u] };
        let mut angles: Vec<f64> = self.incident[v]
            .iter()
            .map(|&e| {
                let u = self.other(e, v);
                let d = p(u) - at;
                d.y.atan2(d.x)
            })
            .collect();
        if angles.len() < 2 {
            return true;
        }
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let min_gap = 12f64.to_radians();
        for i in 0..angles.len() {
            let next = if i + 1 < angles.len() { angles[i + 1] } else { angles[0] + std::f64::consts::TAU };
            if next - angles[i] < min_gap {
                return false;
            }
        }
        true
    }

    /// True when sliding `v` straight to `to` keeps the arrangement unchanged.
    fn move_ok(&self, v: usize, to: Point) -> bool {
        let from = self.pos[v];
        if !self.min_gap_ok(v, to, v, to) {
            return false;
        }
        for &e in &self.incident[v] {
            let u = self.other(e, v);
            if !self.min_gap_ok(u, self.pos[u], v, to) {
                return false;
            }
            let pu = self.pos[u];
            let (sx0, sx1) = (to.x.min(pu.x), to.x.max(pu.x));
            let (sy0, sy1) = (to.y.min(pu.y), to.y.max(pu.y));
            for (f, &(a, b)) in self.edges.iter().enumerate() {
                if f == e || a == v || b == v {
                    continue;
                }
                if a == u || b == u {
                    continue;
                }
                let (pa, pb) = (self.pos[a], self.pos[b]);
                if pa.x.max(pb.x) < sx0 || pa.x.min(pb.x) > sx1 || pa.y.max(pb.y) < sy0 || pa.y.min(pb.y) > sy1 {
                    continue;
                }
                if segments_intersect(to, pu, pa, pb) {
                    return false;
                }
            }
            let (tx0, tx1) = (sx0.min(from.x), sx1.max(from.x));
            let (ty0, ty1) = (sy0.min(from.y), sy1.max(from.y));
            for (w, &pw) in self.pos.iter().enumerate() {
                if pw.x < tx0 || pw.x > tx1 || pw.y < ty0 || pw.y > ty1 {
                    continue;
                }
                if w != v && w != u && point_in_triangle(pw, from, to, pu) {
                    return false;
                }
            }
        }
        true
    }
}

fn relax(g: &mut PlaneGraph, crossings: usize, path: &[usize], iterations: usize) {
    let n = g.pos.len();
    // path neighbours per occurrence, for straightening through crossings
    let mut passes: Vec<(usize, usize, usize)> = Vec::new();
    for i in 1..path.len() - 1 {
        passes.push((path[i - 1], path[i], path[i + 1]));
    }
    let mut adjacent = vec![vec![false; n]; n];
    for &(a, b) in &g.edges {
        adjacent[a][b] = true;
        adjacent[b][a] = true;
    }
    for it in 0..iterations {
        let cool = 1.0 - it as f64 / iterations as f64;
        let max_step = 0.02 + 0.18 * cool;
        let centroid = g.pos.iter().fold(Point::default(), |a, &p| a + p) * (1.0 / n as f64);
        let mut force = vec![Point::default(); n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = g.pos[i] - g.pos[j];
                let r = d.norm().max(1e-3);
                let both_cross = i < crossings && j < crossings;
                let reach = if both_cross { 4.0 } else { 2.5 };
                if r < reach && !adjacent[i][j] {
                    let k = if both_cross { 0.5 } else { 0.12 };
                    let f = d * (k * (1.0 / (r * r) - 1.0 / (reach * reach)) / r);
                    force[i] += f;
                    force[j] += -f;
                }
            }
            force[i] += (centroid - g.pos[i]) * 0.004;
        }
        for &(a, b) in &g.edges {
            let d = g.pos[b] - g.pos[a];
            let r = d.norm().max(1e-6);
            let f = d * (0.25 * (r - 1.0) / r);
            force[a] += f;
            force[b] += -f;
        }
        for &(p, x, q) in &passes {
            if x < crossings {
                let k = 0.25;
                force[p] += ((g.pos[x] * 2.0 - g.pos[q]) - g.pos[p]) * (0.5 * k);
                force[q] += ((g.pos[x] * 2.0 - g.pos[p]) - g.pos[q]) * (0.5 * k);
                force[x] += ((g.pos[p] + g.pos[q]) * 0.5 - g.pos[x]) * k;
            } else {
                force[x] += ((g.pos[p] + g.pos[q]) * 0.5 - g.pos[x]) * 0.15;
            }
        }
        for v in 0..n {
            let mut step = force[v];
            let s = step.norm();
            if s > max_step {
                step = step * (max_step / s);
            }
            for _ in 0..3 {
                let to = g.pos[v] + step;
                if g.move_ok(v, to) {
                    g.pos[v] = to;
                    break;
                }
                step = step * 0.4;
            }
        }
    }
}

/// Open-curve corner cutting on one arc; both ends stay put.
fn chaikin(pts: &[Point]) -> Vec<Point> {
    if pts.len() < 3 {
        return pts.to_vec();
    }
    let mut out = vec![pts[0]];
    for w in pts.windows(2) {
        let q = w[0].lerp(w[1], 0.25);
        let r = w[0].lerp(w[1], 0.75);
        out.push(q);
        out.push(r);
    }
    out.push(*pts.last().unwrap());
    // the duplicated lead/tail points keep the arc tangents at crossings
    out.remove(1);
    let l = out.len();
    out.remove(l - 2);
    out
}

fn build_polyline(
    word: &Word,
    sk: &Skeleton,
    pos: &[Point],
    rounds: usize,
) -> (Vec<Point>, Vec<(u32, Vec<StrandPass>)>) {
    let n = word.ids.len();
    let mut poly = Vec::new();
    let mut strands: Vec<Vec<StrandPass>> = vec![Vec::new(); n];
    let step = DUMMIES_PER_ARC + 1;
    for k in 0..=word.len {
        let arc: Vec<Point> = sk.path[k * step..=(k + 1) * step].iter().map(|&v| pos[v]).collect();
        let mut arc = arc;
        for _ in 0..rounds {
            arc = chaikin(&arc);
        }
        if k == 0 {
            poly.extend_from_slice(&arc);
        } else {
            poly.extend_from_slice(&arc[1..]);
        }
        if k < word.len {
            let c = word.event_crossing[k];
            strands[c].push(StrandPass { vertex: poly.len() - 1, layer: word.layers[k] });
        }
    }
    let crossings = word.ids.iter().copied().zip(strands).collect();
    (poly, crossings)
}

fn compute_canonical(code: &GaussCode) -> Result<CanonicalLayout, EmbedError> {
    let word = Word::new(code);
    let emb = search_rotation(&word)?;
    let sk = skeleton(&word, &emb);
    let mut pos = [true, false]
        .into_iter()
        .map(|ccw| tutte(&sk, ccw))
        .find(|p| straight_line_planar(p, &sk.path))
        .ok_or(EmbedError::NotRealizable)?;
    // unit median segment length before relaxing
    let mut lens: Vec<f64> = sk.path.windows(2).map(|w| pos[w[0]].dist(pos[w[1]])).collect();
    lens.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let med = lens[lens.len() / 2].max(1e-9);
    for p in pos.iter_mut() {
        *p = *p * (1.0 / med);
    }
    let mut g = PlaneGraph::new(pos, &sk.path);
    relax(&mut g, word.ids.len(), &sk.path, 500);
    let pos = g.pos;

    // orient so the left end sits left of the right end, then normalise the extent
    let n = word.ids.len();
    let axis = pos[n + 1] - pos[n];
    let turn = -axis.y.atan2(axis.x);
    let mut last_err = DiagramError::TooShort;
    for rounds in [2usize, 1, 0] {
        let (poly, crossings) = build_polyline(&word, &sk, &pos, rounds);
        let poly: Vec<Point> = poly.iter().map(|p| p.rotated(turn)).collect();
        let bounds = Rect::bounding(&poly).unwrap();
        let extent = bounds.width().max(bounds.height()).max(1e-9);
        let c = bounds.center();
        let poly: Vec<Point> = poly.iter().map(|&p| (p - c) * (1.0 / extent)).collect();
        let records: Vec<CrossingRecord> = crossings
            .iter()
            .map(|(id, s)| CrossingRecord { id: *id, location: poly[s[0].vertex], strands: s.clone() })
            .collect();
        match CableDiagram::new_unbounded(poly.clone(), records) {
            Ok(d) if d.code() == code => {
                let locs: Vec<Point> = d.crossings().iter().map(|c| c.location).collect();
                let mut sep = f64::INFINITY;
                for i in 0..locs.len() {
                    for j in (i + 1)..locs.len() {
                        sep = sep.min(locs[i].dist(locs[j]));
                    }
                }
                let (polyline, recs) = d.into_parts();
                return Ok(CanonicalLayout {
                    polyline,
                    crossings: recs.into_iter().map(|r| (r.id, r.strands)).collect(),
                    min_crossing_sep: if sep.is_finite() { sep } else { 0.0 },
                });
            }
            Ok(_) => last_err = DiagramError::Format("read-off mismatch".into()),
            Err(e) => last_err = e,
        }
    }
    Err(EmbedError::Failed(1, last_err))
}

/// Whether any planar rotation system exists for the code.
pub fn is_realizable(code: &GaussCode) -> Result<bool, EmbedError> {
    match search_rotation(&Word::new(code)) {
        Ok(_) => Ok(true),
        Err(EmbedError::NotRealizable) => Ok(false),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::gauss::parse_gauss_code;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn code(s: &str) -> GaussCode {
        parse_gauss_code(s).unwrap()
    }

    #[test]
    fn realizability_matches_parity_argument() {
        assert!(is_realizable(&code("O1 U2 O3 U1 O2 U3")).unwrap());
        // two loops meeting at one crossing point only: Jordan parity forbids it
        assert!(!is_realizable(&code("O1 U2 U1 U3 O2 O3")).unwrap());
        assert!(is_realizable(&code("O1 U1")).unwrap());
    }

    #[test]
    fn empty_code_is_horizontal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = embed(&GaussCode::empty(), WORKSPACE, &mut rng).unwrap();
        assert_eq!(d.crossing_count(), 0);
        let (a, b) = (d.endpoint_left(), d.endpoint_right());
        assert_eq!(a.y, b.y);
        assert!(a.x < b.x);
    }

    #[test]
    fn overhand_round_trips() {
        let c = code("O1 U2 O3 U1 O2 U3");
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = embed(&c, WORKSPACE, &mut rng).unwrap();
            assert_eq!(d.code(), &c);
            let locs: Vec<Point> = d.crossings().iter().map(|x| x.location).collect();
            for i in 0..locs.len() {
                for j in (i + 1)..locs.len() {
                    assert!(locs[i].dist(locs[j]) >= 12.0);
                }
            }
        }
    }

    #[test]
    fn curl_and_triple_embed() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for s in ["O1 U1", "O1 U2 W1 O2 U1", "O1 O2 U1 U2"] {
            let c = code(s);
            if is_realizable(&c).unwrap() {
                let d = embed(&c, WORKSPACE, &mut rng).unwrap();
                assert_eq!(d.code(), &c, "{s}");
            }
        }
    }

    #[test]
    fn tiny_workspace_is_a_capacity_error() {
        let c = code("O1 U2 O3 U1 O2 U3 O4 U5 O6 U4 O5 U6");
        let opts = EmbedOptions {
            workspace: Rect::new(0.0, 0.0, 40.0, 40.0),
            center: Point::new(20.0, 20.0),
            size: 30.0,
            ..EmbedOptions::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(embed_with(&c, &opts, &mut rng), Err(EmbedError::Capacity { .. })));
    }
}
