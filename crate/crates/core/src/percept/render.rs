//! Single-channel rasterizer. Strands are drawn as a bright core inside a
//! darker rim; at crossings the upper strand is painted last so its rim cuts
//! the core of the strands below.

use crate::diagram::{CableDiagram, IMAGE_HEIGHT, IMAGE_WIDTH};
use crate::geom::{arc_lengths, point_segment_dist, Point};

pub const CORE_VALUE: u8 = 255;
pub const RIM_VALUE: u8 = 140;
pub const DEFAULT_THRESHOLD: u8 = 128;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl RasterImage {
    pub fn blank(width: usize, height: usize) -> Self {
        RasterImage { width, height, data: vec![0; width * height] }
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    /// Value at integer coordinates, zero outside the image.
    pub fn at(&self, x: i64, y: i64) -> u8 {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            0
        } else {
            self.get(x as usize, y as usize)
        }
    }

    /// Bilinear sample; outside pixels read as background.
    pub fn sample(&self, p: Point) -> f64 {
        let x0 = p.x.floor();
        let y0 = p.y.floor();
        let fx = p.x - x0;
        let fy = p.y - y0;
        let (x0, y0) = (x0 as i64, y0 as i64);
        if x0 >= 0 && y0 >= 0 && ((x0 + 1) as usize) < self.width && ((y0 + 1) as usize) < self.height {
            let i = y0 as usize * self.width + x0 as usize;
            let d = &self.data;
            let (a, b, c, e) = (d[i] as f64, d[i + 1] as f64, d[i + self.width] as f64, d[i + self.width + 1] as f64);
            return a * (1.0 - fx) * (1.0 - fy) + b * fx * (1.0 - fy) + c * (1.0 - fx) * fy + e * fx * fy;
        }
        let v = |x, y| self.at(x, y) as f64;
        v(x0, y0) * (1.0 - fx) * (1.0 - fy)
            + v(x0 + 1, y0) * fx * (1.0 - fy)
            + v(x0, y0 + 1) * (1.0 - fx) * fy
            + v(x0 + 1, y0 + 1) * fx * fy
    }

    pub fn mask(&self, threshold: u8) -> Vec<bool> {
        self.data.iter().map(|&v| v >= threshold).collect()
    }

    pub fn count_at_least(&self, threshold: u8) -> usize {
        self.data.iter().filter(|&&v| v >= threshold).count()
    }

    /// Binary PGM (P5).
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    pub fn from_pgm(bytes: &[u8]) -> Option<RasterImage> {
        // header: magic, width, height, maxval, each separated by whitespace
        let mut fields = Vec::new();
        let mut i = 0;
        while fields.len() < 4 {
            while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            let start = i;
            while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            if start == i {
                return None;
            }
            fields.push(std::str::from_utf8(&bytes[start..i]).ok()?.to_string());
        }
        if fields[0] != "P5" || fields[3] != "255" {
            return None;
        }
        let width: usize = fields[1].parse().ok()?;
        let height: usize = fields[2].parse().ok()?;
        let data = bytes.get(i + 1..i + 1 + width * height)?.to_vec();
        Some(RasterImage { width, height, data })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderStyle {
    pub cable_width: f64,
    /// Core diameter as a fraction of the cable width.
    pub core_frac: f64,
    pub width: usize,
    pub height: usize,
}

impl RenderStyle {
    pub fn new(cable_width: f64) -> Self {
        RenderStyle { cable_width, core_frac: 0.6, width: IMAGE_WIDTH, height: IMAGE_HEIGHT }
    }
}

struct Piece {
    a: Point,
    b: Point,
    z: i8,
    s: f64,
}

pub fn render(d: &CableDiagram, cable_width: f64) -> RasterImage {
    render_with(d, &RenderStyle::new(cable_width))
}

pub fn render_with(d: &CableDiagram, style: &RenderStyle) -> RasterImage {
    let w = style.cable_width;
    let pl = d.polyline();
    let acc = arc_lengths(pl);
    let passes: Vec<(f64, i8)> = d
        .crossings()
        .iter()
        .flat_map(|c| c.strands.iter().map(|s| (acc[s.vertex], s.layer)))
        .collect();
    let layer_at = |s: f64| {
        passes
            .iter()
            .filter(|(ps, _)| (ps - s).abs() <= 2.0 * w)
            .min_by(|a, b| (a.0 - s).abs().partial_cmp(&(b.0 - s).abs()).unwrap())
            .map(|p| p.1)
            .unwrap_or(0)
    };
    let step = (w / 2.0).max(0.5);
    let mut pieces = Vec::new();
    for i in 0..pl.len() - 1 {
        let len = acc[i + 1] - acc[i];
        let n = ((len / step).ceil() as usize).max(1);
        for k in 0..n {
            let t0 = k as f64 / n as f64;
            let t1 = (k + 1) as f64 / n as f64;
            let s = acc[i] + len * (t0 + t1) / 2.0;
            pieces.push(Piece { a: pl[i].lerp(pl[i + 1], t0), b: pl[i].lerp(pl[i + 1], t1), z: layer_at(s), s });
        }
    }
    pieces.sort_by(|p, q| p.z.cmp(&q.z).then(p.s.partial_cmp(&q.s).unwrap()));

    let mut img = RasterImage::blank(style.width, style.height);
    let outer = w / 2.0;
    // arc position of whoever painted each core pixel, over the cable's bounding box
    let (bx, by) = pl.iter().fold((f64::INFINITY, f64::INFINITY), |(x, y), p| (x.min(p.x), y.min(p.y)));
    let bx = (bx - outer).floor().max(0.0) as usize;
    let by = (by - outer).floor().max(0.0) as usize;
    let bw = style.width.saturating_sub(bx);
    let bh = style.height.saturating_sub(by);
    let mut owner = vec![f64::NAN; bw * bh];
    let core = outer * style.core_frac;
    let near_along = 1.5 * w;
    for p in &pieces {
        let x0 = (p.a.x.min(p.b.x) - outer).floor().max(0.0) as usize;
        let x1 = ((p.a.x.max(p.b.x) + outer).ceil() as usize).min(style.width - 1);
        let y0 = (p.a.y.min(p.b.y) - outer).floor().max(0.0) as usize;
        let y1 = ((p.a.y.max(p.b.y) + outer).ceil() as usize).min(style.height - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let dist = point_segment_dist(Point::new(x as f64, y as f64), p.a, p.b);
                if dist > outer {
                    continue;
                }
                let idx = y * style.width + x;
                let oi = (y - by) * bw + (x - bx);
                if dist <= core {
                    img.data[idx] = CORE_VALUE;
                    owner[oi] = p.s;
                } else {
                    let o = owner[oi];
                    // the rim never eats the core of the same strand nearby
                    if !(o.is_finite() && (o - p.s).abs() < near_along) {
                        img.data[idx] = RIM_VALUE;
                        owner[oi] = f64::NAN;
                    }
                }
            }
        }
    }
    img
}

/// Paints one stroke (rim first, then core) so its own rim never covers its
/// core. Later strokes cover earlier ones.
pub fn paint_stroke(img: &mut RasterImage, pts: &[Point], width: f64, core_frac: f64) {
    let outer = width / 2.0;
    let core = outer * core_frac;
    for (radius, value) in [(outer, RIM_VALUE), (core, CORE_VALUE)] {
        for seg in pts.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let x0 = (a.x.min(b.x) - radius).floor().max(0.0) as usize;
            let y0 = (a.y.min(b.y) - radius).floor().max(0.0) as usize;
            let x1 = (a.x.max(b.x) + radius).ceil().min(img.width as f64 - 1.0);
            let y1 = (a.y.max(b.y) + radius).ceil().min(img.height as f64 - 1.0);
            if x1 < 0.0 || y1 < 0.0 {
                continue;
            }
            for y in y0..=y1 as usize {
                for x in x0..=x1 as usize {
                    if point_segment_dist(Point::new(x as f64, y as f64), a, b) <= radius {
                        img.set(x, y, value);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::{knot_template, KnotSpec, TemplateName};

    #[test]
    fn straight_strip_area() {
        let d = CableDiagram::straight(Point::new(100.0, 200.5), Point::new(400.0, 200.5));
        let img = render(&d, 6.0);
        let fg = img.count_at_least(DEFAULT_THRESHOLD) as f64;
        let expect = 300.0 * 6.0;
        assert!((fg - expect).abs() / expect < 0.1, "{fg}");
    }

    #[test]
    fn deterministic_and_covering() {
        let d = knot_template(KnotSpec::new(TemplateName::Overhand), 1, 6.0).unwrap();
        let a = render(&d, 6.0);
        assert_eq!(a, render(&d, 6.0));
        for p in d.polyline() {
            assert!(a.get(p.x.round() as usize, p.y.round() as usize) >= DEFAULT_THRESHOLD);
        }
    }

    #[test]
    fn over_strand_core_is_continuous_at_crossings() {
        let d = knot_template(KnotSpec::new(TemplateName::Overhand), 2, 6.0).unwrap();
        let img = render(&d, 6.0);
        for c in d.crossings() {
            let l = c.location;
            assert_eq!(img.get(l.x.round() as usize, l.y.round() as usize), CORE_VALUE);
        }
    }

    #[test]
    fn pgm_round_trip() {
        let d = CableDiagram::straight(Point::new(10.0, 10.0), Point::new(50.0, 30.0));
        let img = render(&d, 6.0);
        assert_eq!(RasterImage::from_pgm(&img.to_pgm()).unwrap(), img);
    }
}
