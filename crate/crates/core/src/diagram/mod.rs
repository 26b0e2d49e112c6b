//! Cable state as annotated knot diagrams: Gauss codes, polyline embeddings,
//! the endpoint/crossing graph and the template library.

pub mod cable;
pub mod embed;
pub mod gauss;
pub mod graph;
pub mod surgery;
pub mod templates;

pub use cable::{
    left_of, read_gauss, CableDiagram, CrossingRecord, DiagramError, StrandPass, IMAGE_HEIGHT, IMAGE_WIDTH,
    WORKSPACE,
};
pub use embed::{embed, embed_with, is_realizable, EmbedError, EmbedOptions};
pub use gauss::{parse_gauss_code, parse_gauss_lines, GaussCode, GaussEntry, GaussError, Pass};
pub use graph::{build_graph, is_untangled, CableGraph, Edge, EdgeId, Incidence, VertexId};
pub use surgery::{CablePos, End, SurgeryError};
pub use templates::{knot_template, KnotSpec, TemplateError, TemplateName, DENSE_SCALE};
