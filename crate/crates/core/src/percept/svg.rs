//! SVG overlay frames: cable polyline, crossings, keypoints, contour centre
//! and a caption line per state.

use std::fmt::Write;

use crate::diagram::{CableDiagram, IMAGE_HEIGHT, IMAGE_WIDTH};
use crate::geom::Point;

#[derive(Debug, Clone, Default)]
pub struct FrameOverlay {
    pub title: String,
    /// (label, point, colour)
    pub markers: Vec<(String, Point, String)>,
    /// Arrows as (from, to, colour).
    pub arrows: Vec<(Point, Point, String)>,
    pub notes: Vec<String>,
}

impl FrameOverlay {
    pub fn marker(&mut self, label: &str, p: Point, colour: &str) {
        self.markers.push((label.to_string(), p, colour.to_string()));
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn frame_svg(d: &CableDiagram, cable_width: f64, overlay: &FrameOverlay) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{IMAGE_WIDTH}" height="{IMAGE_HEIGHT}" viewBox="0 0 {IMAGE_WIDTH} {IMAGE_HEIGHT}">"#
    );
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#1b1b1b"/>"##);
    let pts: Vec<String> = d.polyline().iter().map(|p| format!("{:.1},{:.1}", p.x, p.y)).collect();
    let _ = writeln!(
        s,
        r##"<polyline points="{}" fill="none" stroke="#e8e2d0" stroke-width="{cable_width:.1}" stroke-linejoin="round" stroke-linecap="round"/>"##,
        pts.join(" ")
    );
    for c in d.crossings() {
        let colour = if c.is_triple() { "#ff7f50" } else { "#6fa8dc" };
        let _ = writeln!(
            s,
            r#"<circle cx="{:.1}" cy="{:.1}" r="{:.1}" fill="none" stroke="{colour}" stroke-width="1"/>"#,
            c.location.x,
            c.location.y,
            cable_width
        );
    }
    for (a, b, colour) in &overlay.arrows {
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{colour}" stroke-width="2" stroke-dasharray="4 3"/>"#,
            a.x,
            a.y,
            b.x,
            b.y
        );
    }
    for (label, p, colour) in &overlay.markers {
        let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="4" fill="{colour}"/>"#, p.x, p.y);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" fill="{colour}" font-size="11" font-family="monospace">{}</text>"#,
            p.x + 6.0,
            p.y - 6.0,
            escape(label)
        );
    }
    let mut y = 16.0;
    for line in std::iter::once(&overlay.title).chain(overlay.notes.iter()) {
        let _ = writeln!(
            s,
            r#"<text x="8" y="{y:.0}" fill="white" font-size="12" font-family="monospace">{}</text>"#,
            escape(line)
        );
        y += 14.0;
    }
    s.push_str("</svg>\n");
    s
}
