//! Connected components and Moore-neighbour border following on thresholded
//! images.

use super::render::RasterImage;
use super::PerceptError;
use crate::geom::Point;

pub const MIN_CONTOUR_AREA: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    /// Outer boundary pixels in tracing order (clockwise in image coordinates).
    pub points: Vec<Point>,
    /// Pixel count of the component the boundary encloses.
    pub area: usize,
}

const UNLABELLED: u32 = u32::MAX;

/// 8-connected labelling of `mask`. Labels count up in raster order of each
/// component's first pixel; returns the labels and the component sizes.
pub fn label_components(mask: &[bool], width: usize, height: usize) -> (Vec<u32>, Vec<usize>) {
    let (label, sizes, _) = label_with_starts(mask, width, height);
    (label, sizes)
}

/// First set index at or after `from`. Whole blocks of background are
/// rejected with one branch.
fn next_set(mask: &[bool], mut from: usize) -> Option<usize> {
    const BLOCK: usize = 32;
    while from + BLOCK <= mask.len() && !mask[from..from + BLOCK].iter().fold(false, |a, &m| a | m) {
        from += BLOCK;
    }
    mask[from..].iter().position(|&m| m).map(|k| from + k)
}

/// Labels, sizes and the raster-first pixel of each component.
fn label_with_starts(mask: &[bool], width: usize, height: usize) -> (Vec<u32>, Vec<usize>, Vec<usize>) {
    let mut label = vec![UNLABELLED; mask.len()];
    let mut sizes = Vec::new();
    let mut starts = Vec::new();
    let mut stack: Vec<(usize, usize)> = Vec::new();
    let mut from = 0;
    while let Some(start) = next_set(mask, from) {
        from = start + 1;
        if label[start] != UNLABELLED {
            continue;
        }
        let id = sizes.len() as u32;
        let mut size = 0;
        label[start] = id;
        stack.push((start % width, start / width));
        while let Some((x, y)) = stack.pop() {
            size += 1;
            let (xa, xb) = (x.saturating_sub(1), (x + 1).min(width - 1));
            let (ya, yb) = (y.saturating_sub(1), (y + 1).min(height - 1));
            for ny in ya..=yb {
                let row = ny * width;
                for nx in xa..=xb {
                    let j = row + nx;
                    if mask[j] && label[j] == UNLABELLED {
                        label[j] = id;
                        stack.push((nx, ny));
                    }
                }
            }
        }
        sizes.push(size);
        starts.push(start);
    }
    (label, sizes, starts)
}

/// The 8-connected component of `mask` containing `seed`, in raster order.
pub fn component_at(mask: &[bool], width: usize, height: usize, seed: usize) -> Vec<usize> {
    if !mask[seed] {
        return Vec::new();
    }
    let mut seen = vec![false; mask.len()];
    seen[seed] = true;
    let mut out = Vec::new();
    let mut stack = vec![(seed % width, seed / width)];
    while let Some((x, y)) = stack.pop() {
        out.push(y * width + x);
        for ny in y.saturating_sub(1)..=(y + 1).min(height - 1) {
            for nx in x.saturating_sub(1)..=(x + 1).min(width - 1) {
                let j = ny * width + nx;
                if mask[j] && !seen[j] {
                    seen[j] = true;
                    stack.push((nx, ny));
                }
            }
        }
    }
    out.sort_unstable();
    out
}

/// 8-connected components of `mask` as (pixel indices in raster order).
pub fn components(mask: &[bool], width: usize, height: usize) -> Vec<Vec<usize>> {
    let (label, sizes) = label_components(mask, width, height);
    let mut out: Vec<Vec<usize>> = sizes.iter().map(|&n| Vec::with_capacity(n)).collect();
    for (i, &l) in label.iter().enumerate() {
        if l != UNLABELLED {
            out[l as usize].push(i);
        }
    }
    out
}

// clockwise from west, image coordinates (y down)
const DIRS: [(i64, i64); 8] = [(-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1)];

/// Traces the outer border of the component containing `start`, which must be
/// its first pixel in raster order. Stops when the first move repeats, which
/// also handles one-pixel-wide runs.
pub fn trace_border(inside: impl Fn(i64, i64) -> bool, start: (i64, i64)) -> Vec<(i64, i64)> {
    let step = |c: (i64, i64), back: usize| {
        for k in 1..=8 {
            let d = (back + k) % 8;
            let n = (c.0 + DIRS[d].0, c.1 + DIRS[d].1);
            if inside(n.0, n.1) {
                // backtrack becomes the last outside neighbour scanned, seen from `n`
                let b = (c.0 + DIRS[(d + 7) % 8].0, c.1 + DIRS[(d + 7) % 8].1);
                let rel = (b.0 - n.0, b.1 - n.1);
                let back = DIRS.iter().position(|&o| o == rel).expect("backtrack is a neighbour");
                return Some((n, back));
            }
        }
        None
    };
    let mut out = vec![start];
    // the raster-first pixel always has background to its west
    let Some(first) = step(start, 0) else { return out };
    let (mut cur, mut back) = first;
    loop {
        out.push(cur);
        let (n, b) = step(cur, back).expect("traced pixel has a neighbour");
        if cur == start && (n, b) == first {
            break;
        }
        cur = n;
        back = b;
    }
    if out.len() > 1 && *out.last().unwrap() == start {
        out.pop();
    }
    out
}

/// All contours with area at least `min_area`, largest first.
pub fn extract_contours(img: &RasterImage, threshold: u8, min_area: usize) -> Vec<Contour> {
    let mask = img.mask(threshold);
    let (w, h) = (img.width, img.height);
    let mut out: Vec<Contour> = Vec::new();
    let (label, sizes, first) = label_with_starts(&mask, w, h);
    for (id, &area) in sizes.iter().enumerate() {
        if area < min_area {
            continue;
        }
        let s = first[id];
        let inside = |x: i64, y: i64| {
            x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h && label[y as usize * w + x as usize] == id as u32
        };
        let pts = trace_border(inside, ((s % w) as i64, (s / w) as i64));
        out.push(Contour {
            points: pts.into_iter().map(|(x, y)| Point::new(x as f64, y as f64)).collect(),
            area,
        });
    }
    out.sort_by(|a, b| b.area.cmp(&a.area));
    out
}

pub fn extract_cable_contour(img: &RasterImage, threshold: u8) -> Result<Contour, PerceptError> {
    extract_contours(img, threshold, MIN_CONTOUR_AREA).into_iter().next().ok_or(PerceptError::NoForeground)
}

/// Contour point closest to the contour mean; ties go to the lowest index.
pub fn cable_center(c: &Contour) -> Point {
    let n = c.points.len() as f64;
    let mean = c.points.iter().fold(Point::new(0.0, 0.0), |a, &p| a + p) * (1.0 / n);
    let mut best = (f64::INFINITY, c.points[0]);
    for &p in &c.points {
        let d = p.dist(mean);
        if d < best.0 {
            best = (d, p);
        }
    }
    best.1
}
