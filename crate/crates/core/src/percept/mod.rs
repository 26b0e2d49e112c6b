//! Image-space observations: rasterizer, contour tracing, keypoint oracle,
//! analytic grasp angles and the density comparator.

use thiserror::Error;

pub mod contour;
pub mod density;
pub mod hulk;
pub mod render;
pub mod svg;

pub use contour::{cable_center, extract_cable_contour, extract_contours, Contour, MIN_CONTOUR_AREA};
pub use density::{density, Comparator, ForcedFlips, Observation, DEFAULT_LAMBDA, DEFAULT_MARGIN, REFERENCE_ID};
pub use hulk::{grasp_angles_analytic, hulk_keypoints, noisy_point, pca_grasp_angle, reidemeister_angles, Keypoints, PerceptionNoise};
pub use render::{render, render_with, RasterImage, RenderStyle, CORE_VALUE, DEFAULT_THRESHOLD, RIM_VALUE};
pub use svg::{frame_svg, FrameOverlay};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PerceptError {
    #[error("observation has no foreground")]
    NoForeground,
    #[error("crop holds no cable pixels")]
    EmptyCrop,
    #[error("pull and hold keypoints coincide")]
    DegenerateKeypoints,
}
