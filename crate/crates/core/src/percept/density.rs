//! Density metric and the binary "denser" comparator that stands in for the
//! learned progress classifier.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::render::{RasterImage, DEFAULT_THRESHOLD};
use crate::diagram::CableDiagram;
use crate::geom::Rect;

pub const DEFAULT_LAMBDA: f64 = 1.0;
pub const DEFAULT_MARGIN: f64 = 1e-6;

/// crossings + lambda * (foreground fraction of the knot bounding box). The box
/// spans the crossing points inflated by two cable widths, or all foreground
/// for a crossing-free cable.
pub fn density(d: &CableDiagram, img: &RasterImage, cable_width: f64, lambda: f64) -> f64 {
    let locs: Vec<_> = d.crossings().iter().map(|c| c.location).collect();
    let bbox = match Rect::bounding(&locs) {
        Some(r) => r.inflate(2.0 * cable_width),
        None => match foreground_bounds(img) {
            Some(r) => r,
            None => return 0.0,
        },
    };
    let x0 = bbox.min.x.floor().max(0.0) as usize;
    let y0 = bbox.min.y.floor().max(0.0) as usize;
    let x1 = (bbox.max.x.ceil().max(0.0) as usize).min(img.width - 1);
    let y1 = (bbox.max.y.ceil().max(0.0) as usize).min(img.height - 1);
    let mut fg = 0usize;
    for y in y0..=y1 {
        for x in x0..=x1 {
            if img.get(x, y) >= DEFAULT_THRESHOLD {
                fg += 1;
            }
        }
    }
    let area = ((x1 - x0 + 1) * (y1 - y0 + 1)) as f64;
    d.crossing_count() as f64 + lambda * fg as f64 / area
}

fn foreground_bounds(img: &RasterImage) -> Option<Rect> {
    let mut r: Option<Rect> = None;
    for y in 0..img.height {
        for x in 0..img.width {
            if img.get(x, y) >= DEFAULT_THRESHOLD {
                let p = crate::geom::Point::new(x as f64, y as f64);
                r = Some(match r {
                    None => Rect::new(p.x, p.y, p.x, p.y),
                    Some(b) => Rect::new(b.min.x.min(p.x), b.min.y.min(p.y), b.max.x.max(p.x), b.max.y.max(p.y)),
                });
            }
        }
    }
    r
}

/// One observation as the comparator sees it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Unique within a trial; the reference image uses `REFERENCE_ID`.
    pub id: u64,
    pub density: f64,
}

pub const REFERENCE_ID: u64 = u64::MAX;

/// Which comparisons to invert regardless of the flip probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ForcedFlips {
    /// Invert every comparison against the reference image.
    pub reference: bool,
    /// Invert every comparison of consecutive observations.
    pub consecutive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparator {
    pub flip_prob: f64,
    pub margin: f64,
    pub seed: u64,
    pub forced: ForcedFlips,
}

impl Comparator {
    pub fn new(flip_prob: f64, seed: u64) -> Self {
        Comparator { flip_prob, margin: DEFAULT_MARGIN, seed, forced: ForcedFlips::default() }
    }

    pub fn exact() -> Self {
        Comparator::new(0.0, 0)
    }

    fn flipped(&self, a: u64, b: u64) -> bool {
        if a == REFERENCE_ID || b == REFERENCE_ID {
            if self.forced.reference {
                return true;
            }
        } else if self.forced.consecutive && a.abs_diff(b) == 1 {
            return true;
        }
        if self.flip_prob <= 0.0 {
            return false;
        }
        // same pair, same verdict: the noise is a function of the pair
        let key = self.seed ^ a.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ b.wrapping_mul(0xc2b2_ae3d_27d4_eb4f).rotate_left(17);
        ChaCha8Rng::seed_from_u64(key).random_bool(self.flip_prob.min(1.0))
    }

    /// 1 iff `a` is denser than `b` by more than the margin, then possibly flipped.
    pub fn denser(&self, a: &Observation, b: &Observation) -> bool {
        let raw = a.density > b.density + self.margin;
        raw != self.flipped(a.id, b.id)
    }

    /// The no-progress reading: `a` is at least as dense as `b`, up to the margin.
    pub fn not_looser(&self, a: &Observation, b: &Observation) -> bool {
        let raw = a.density >= b.density - self.margin;
        raw != self.flipped(a.id, b.id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(id: u64, density: f64) -> Observation {
        Observation { id, density }
    }

    #[test]
    fn exact_comparator_is_strict() {
        let c = Comparator::exact();
        assert!(c.denser(&obs(1, 3.2), &obs(2, 0.1)));
        assert!(!c.denser(&obs(1, 1.0), &obs(1, 1.0)));
        assert!(!c.denser(&obs(1, 0.1), &obs(2, 3.2)));
        assert!(c.not_looser(&obs(1, 1.0), &obs(2, 1.0)));
    }

    #[test]
    fn flips_are_repeatable() {
        let c = Comparator::new(0.5, 99);
        let a = obs(3, 1.0);
        let b = obs(4, 2.0);
        let first: Vec<bool> = (0..10).map(|_| c.denser(&a, &b)).collect();
        assert!(first.iter().all(|&v| v == first[0]));
        let flips = (0..2000u64).filter(|&i| c.denser(&obs(i, 0.0), &obs(i + 5000, 1.0))).count();
        assert!((800..1200).contains(&flips), "{flips}");
    }

    #[test]
    fn forced_reference_flip() {
        let mut c = Comparator::exact();
        c.forced.reference = true;
        assert!(c.denser(&obs(REFERENCE_ID, 1.0), &obs(0, 3.0)));
        assert!(!c.denser(&obs(1, 1.0), &obs(0, 3.0)));
    }
}
