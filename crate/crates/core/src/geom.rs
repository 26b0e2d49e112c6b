//! Small planar geometry kit shared by the diagram, perception and dynamics code.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y).sqrt()
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    pub fn normalized(self) -> Point {
        let n = self.norm();
        if n > 0.0 {
            self * (1.0 / n)
        } else {
            Point::new(1.0, 0.0)
        }
    }

    /// Counter-clockwise quarter turn in a y-up frame (clockwise on screen).
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    pub fn rotated(self, radians: f64) -> Point {
        let (s, c) = radians.sin_cos();
        Point::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn lerp(self, o: Point, t: f64) -> Point {
        self + (o - self) * t
    }

    /// Direction angle in degrees folded into [0, 180).
    pub fn axis_angle_deg(self) -> f64 {
        fold_180(self.y.atan2(self.x).to_degrees())
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Point {
    fn add_assign(&mut self, o: Point) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Folds an angle in degrees into [0, 180).
pub fn fold_180(deg: f64) -> f64 {
    let r = deg.rem_euclid(180.0);
    if r >= 180.0 {
        0.0
    } else {
        r
    }
}

/// Distance between two axis angles (degrees, period 180), in [0, 90].
pub fn axis_angle_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(180.0);
    d.min(180.0 - d)
}

/// Axis-aligned rectangle, `min` inclusive and `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub const fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { min: Point::new(x0, y0), max: Point::new(x1, y1) }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn center(&self) -> Point {
        self.min.lerp(self.max, 0.5)
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn clamp(&self, p: Point) -> Point {
        Point::new(p.x.clamp(self.min.x, self.max.x), p.y.clamp(self.min.y, self.max.y))
    }

    pub fn bounding(points: &[Point]) -> Option<Rect> {
        let first = *points.first()?;
        let mut r = Rect { min: first, max: first };
        for p in points {
            r.min.x = r.min.x.min(p.x);
            r.min.y = r.min.y.min(p.y);
            r.max.x = r.max.x.max(p.x);
            r.max.y = r.max.y.max(p.y);
        }
        Some(r)
    }

    pub fn inflate(&self, m: f64) -> Rect {
        Rect { min: self.min - Point::new(m, m), max: self.max + Point::new(m, m) }
    }
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test, touching and collinear overlap included.
pub fn segments_intersect(p1: Point, p2: Point, p3: Point, p4: Point) -> bool {
    let d1 = orient(p3, p4, p1);
    let d2 = orient(p3, p4, p2);
    let d3 = orient(p1, p2, p3);
    let d4 = orient(p1, p2, p4);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(p3, p4, p1))
        || (d2 == 0.0 && on_segment(p3, p4, p2))
        || (d3 == 0.0 && on_segment(p1, p2, p3))
        || (d4 == 0.0 && on_segment(p1, p2, p4))
}

/// Parameter and distance of the closest point of segment `ab` to `p`.
pub fn project_to_segment(p: Point, a: Point, b: Point) -> (f64, f64) {
    let ab = b - a;
    let l2 = ab.dot(ab);
    let t = if l2 > 0.0 { ((p - a).dot(ab) / l2).clamp(0.0, 1.0) } else { 0.0 };
    (t, p.dist(a + ab * t))
}

pub fn point_segment_dist(p: Point, a: Point, b: Point) -> f64 {
    project_to_segment(p, a, b).1
}

pub fn segment_segment_dist(a: Point, b: Point, c: Point, d: Point) -> f64 {
    if segments_intersect(a, b, c, d) {
        return 0.0;
    }
    point_segment_dist(a, c, d)
        .min(point_segment_dist(b, c, d))
        .min(point_segment_dist(c, a, b))
        .min(point_segment_dist(d, a, b))
}

/// Strict interior test for triangle `abc` (either orientation).
pub fn point_in_triangle(p: Point, a: Point, b: Point, c: Point) -> bool {
    let d1 = orient(a, b, p);
    let d2 = orient(b, c, p);
    let d3 = orient(c, a, p);
    (d1 > 0.0 && d2 > 0.0 && d3 > 0.0) || (d1 < 0.0 && d2 < 0.0 && d3 < 0.0)
}

/// Cumulative arc length at every vertex of a polyline.
pub fn arc_lengths(poly: &[Point]) -> Vec<f64> {
    let mut out = Vec::with_capacity(poly.len());
    let mut acc = 0.0;
    for (i, p) in poly.iter().enumerate() {
        if i > 0 {
            acc += p.dist(poly[i - 1]);
        }
        out.push(acc);
    }
    out
}

/// 2x2 symmetric principal axis of a point cloud: returns (mean, unit major axis).
pub fn principal_axis(points: impl Iterator<Item = Point>) -> Option<(Point, Point)> {
    let mut n = 0.0;
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for p in points {
        n += 1.0;
        sx += p.x;
        sy += p.y;
        sxx += p.x * p.x;
        syy += p.y * p.y;
        sxy += p.x * p.y;
    }
    if n < 2.0 {
        return None;
    }
    let mx = sx / n;
    let my = sy / n;
    let cxx = sxx / n - mx * mx;
    let cyy = syy / n - my * my;
    let cxy = sxy / n - mx * my;
    // major-axis angle of the covariance ellipse
    let phi = 0.5 * (2.0 * cxy).atan2(cxx - cyy);
    Some((Point::new(mx, my), Point::new(phi.cos(), phi.sin())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_segments_intersect() {
        let a = Point::new(0.0, 0.0);
        let b = Point::new(2.0, 2.0);
        assert!(segments_intersect(a, b, Point::new(0.0, 2.0), Point::new(2.0, 0.0)));
        assert!(!segments_intersect(a, b, Point::new(3.0, 0.0), Point::new(4.0, 1.0)));
        // shared endpoint counts as touching
        assert!(segments_intersect(a, b, b, Point::new(5.0, 0.0)));
    }

    #[test]
    fn axis_angles_fold() {
        assert_eq!(fold_180(-30.0), 150.0);
        assert_eq!(fold_180(180.0), 0.0);
        assert!((axis_angle_dist(179.0, 1.0) - 2.0).abs() < 1e-12);
        assert!((Point::new(1.0, 1.0).axis_angle_deg() - 45.0).abs() < 1e-12);
    }

    #[test]
    fn principal_axis_of_diagonal() {
        let pts = (0..20).map(|i| Point::new(i as f64, i as f64));
        let (_, d) = principal_axis(pts).unwrap();
        assert!((d.axis_angle_deg() - 45.0).abs() < 1e-9);
    }
}
