//! The knot template library. Each template is a Gauss code shipped as a data
//! file; a seed picks one concrete embedding near the workspace centre.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::cable::{CableDiagram, WORKSPACE};
use super::embed::{embed_with, EmbedError, EmbedOptions};
use super::gauss::{parse_gauss_code, GaussCode};
use super::surgery::{extend_end, End};
use crate::geom::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateName {
    Straight,
    SingleCrossing,
    Overhand,
    FigureEight,
    TwoOverhand,
    OverhandPlusFigureEight,
    DoubleOverhand,
    Square,
    Granny,
    Stevedore,
    Bowline,
    AshleyStopper,
    HeavingLine,
}

impl TemplateName {
    pub const ALL: [TemplateName; 13] = [
        TemplateName::Straight,
        TemplateName::SingleCrossing,
        TemplateName::Overhand,
        TemplateName::FigureEight,
        TemplateName::TwoOverhand,
        TemplateName::OverhandPlusFigureEight,
        TemplateName::DoubleOverhand,
        TemplateName::Square,
        TemplateName::Granny,
        TemplateName::Stevedore,
        TemplateName::Bowline,
        TemplateName::AshleyStopper,
        TemplateName::HeavingLine,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateName::Straight => "straight",
            TemplateName::SingleCrossing => "single_crossing",
            TemplateName::Overhand => "overhand",
            TemplateName::FigureEight => "figure_eight",
            TemplateName::TwoOverhand => "two_overhand",
            TemplateName::OverhandPlusFigureEight => "overhand_plus_figure_eight",
            TemplateName::DoubleOverhand => "double_overhand",
            TemplateName::Square => "square",
            TemplateName::Granny => "granny",
            TemplateName::Stevedore => "stevedore",
            TemplateName::Bowline => "bowline",
            TemplateName::AshleyStopper => "ashley_stopper",
            TemplateName::HeavingLine => "heaving_line",
        }
    }

    fn source(self) -> &'static str {
        match self {
            TemplateName::Straight => include_str!("../../data/templates/straight.gauss"),
            TemplateName::SingleCrossing => include_str!("../../data/templates/single_crossing.gauss"),
            TemplateName::Overhand => include_str!("../../data/templates/overhand.gauss"),
            TemplateName::FigureEight => include_str!("../../data/templates/figure_eight.gauss"),
            TemplateName::TwoOverhand => include_str!("../../data/templates/two_overhand.gauss"),
            TemplateName::OverhandPlusFigureEight => {
                include_str!("../../data/templates/overhand_plus_figure_eight.gauss")
            }
            TemplateName::DoubleOverhand => include_str!("../../data/templates/double_overhand.gauss"),
            TemplateName::Square => include_str!("../../data/templates/square.gauss"),
            TemplateName::Granny => include_str!("../../data/templates/granny.gauss"),
            TemplateName::Stevedore => include_str!("../../data/templates/stevedore.gauss"),
            TemplateName::Bowline => include_str!("../../data/templates/bowline.gauss"),
            TemplateName::AshleyStopper => include_str!("../../data/templates/ashley_stopper.gauss"),
            TemplateName::HeavingLine => include_str!("../../data/templates/heaving_line.gauss"),
        }
    }

    pub fn code(self) -> GaussCode {
        parse_gauss_code(self.source()).expect("shipped templates parse")
    }
}

impl fmt::Display for TemplateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A template plus the `dense` flag (same code, laid out at 0.6x size).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KnotSpec {
    pub name: TemplateName,
    pub dense: bool,
}

pub const DENSE_SCALE: f64 = 0.6;
const BASE_SIZE: f64 = 220.0;
const TAIL_EXTENSION: f64 = 40.0;

impl KnotSpec {
    pub fn new(name: TemplateName) -> Self {
        KnotSpec { name, dense: false }
    }

    pub fn dense(name: TemplateName) -> Self {
        KnotSpec { name, dense: true }
    }
}

impl fmt::Display for KnotSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dense {
            write!(f, "dense_{}", self.name)
        } else {
            write!(f, "{}", self.name)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TemplateError {
    #[error("unknown template `{0}`")]
    Unknown(String),
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

impl FromStr for TemplateName {
    type Err = TemplateError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TemplateName::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| TemplateError::Unknown(s.to_string()))
    }
}

impl FromStr for KnotSpec {
    type Err = TemplateError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.strip_prefix("dense_") {
            Some(rest) => Ok(KnotSpec::dense(rest.parse()?)),
            None => Ok(KnotSpec::new(s.parse()?)),
        }
    }
}

/// Embeds the template for `seed` around the workspace centre, with the free
/// tails lengthened where there is room.
pub fn knot_template(spec: KnotSpec, seed: u64, cable_width: f64) -> Result<CableDiagram, TemplateError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6b6e_6f74);
    let size = if spec.dense { BASE_SIZE * DENSE_SCALE } else { BASE_SIZE };
    let opts = EmbedOptions { cable_width, size, ..EmbedOptions::default() };
    let d = embed_with(&spec.name.code(), &opts, &mut rng)?;
    if d.crossing_count() == 0 {
        return Ok(d);
    }
    let bounds = WORKSPACE.inflate(-10.0);
    let clearance = 2.0 * cable_width;
    let pl = d.polyline();
    let dir_r = pl[pl.len() - 1] - pl[pl.len() - 2];
    let code = d.code().clone();
    // an extension that swaps which endpoint is leftmost would relabel the code
    let keep = |e: CableDiagram, prev: CableDiagram| if e.code() == &code { e } else { prev };
    let d = keep(extend_end(&d, End::Right, dir_r, TAIL_EXTENSION, clearance, bounds), d);
    let pl = d.polyline();
    let dir_l = pl[0] - pl[1];
    let d = keep(extend_end(&d, End::Left, dir_l, TAIL_EXTENSION, clearance, bounds), d);
    Ok(d)
}

/// Convenience for callers that only have a name string.
pub fn knot_template_named(name: &str, seed: u64, cable_width: f64) -> Result<CableDiagram, TemplateError> {
    knot_template(name.parse()?, seed, cable_width)
}

/// Centre used for generated knots.
pub fn template_center() -> Point {
    EmbedOptions::default().center
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for t in TemplateName::ALL {
            assert_eq!(t.as_str().parse::<TemplateName>().unwrap(), t);
            let d = KnotSpec::dense(t);
            assert_eq!(d.to_string().parse::<KnotSpec>().unwrap(), d);
        }
        assert!("reef".parse::<TemplateName>().is_err());
    }

    #[test]
    fn crossing_counts() {
        let expect = [0, 1, 3, 4, 6, 7, 7, 8, 8, 8, 8, 8, 9];
        for (t, n) in TemplateName::ALL.into_iter().zip(expect) {
            assert_eq!(t.code().crossing_count(), n, "{t}");
        }
    }

    #[test]
    fn overhand_embeds_with_its_code() {
        let d = knot_template(KnotSpec::new(TemplateName::Overhand), 3, 6.0).unwrap();
        assert_eq!(d.code(), &TemplateName::Overhand.code());
        assert!(WORKSPACE.contains(d.endpoint_left()));
    }
}
