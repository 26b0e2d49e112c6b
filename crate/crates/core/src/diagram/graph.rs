//! The endpoint/crossing graph with per-incidence layer annotations.

use serde::{Deserialize, Serialize};

use super::cable::CableDiagram;
use super::gauss::GaussCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VertexId {
    Left,
    Right,
    Crossing(u32),
}

/// Edge ids are arc indices: arc `k` joins pass `k-1` and pass `k` along the
/// cable, arc 0 starts at the left endpoint and the last arc ends at the right one.
pub type EdgeId = usize;

/// One end of an edge at a vertex, with the annotation X(v, e) for that end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Incidence {
    pub vertex: VertexId,
    pub layer: i8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub start: Incidence,
    pub end: Incidence,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CableGraph {
    pub vertices: Vec<VertexId>,
    pub edges: Vec<Edge>,
}

impl CableGraph {
    pub fn from_code(code: &GaussCode) -> CableGraph {
        let mut vertices = vec![VertexId::Left, VertexId::Right];
        vertices.extend(code.crossing_ids().into_iter().map(VertexId::Crossing));
        let ends: Vec<Incidence> = code
            .entries()
            .iter()
            .map(|e| Incidence { vertex: VertexId::Crossing(e.crossing), layer: e.pass.layer() })
            .collect();
        let mut edges = Vec::with_capacity(ends.len() + 1);
        let mut prev = Incidence { vertex: VertexId::Left, layer: 1 };
        for inc in ends {
            edges.push(Edge { start: prev, end: inc });
            prev = inc;
        }
        edges.push(Edge { start: prev, end: Incidence { vertex: VertexId::Right, layer: 1 } });
        CableGraph { vertices, edges }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// All edge ends at `v` as (edge, annotation); loops contribute two entries.
    pub fn incidences(&self, v: VertexId) -> Vec<(EdgeId, i8)> {
        let mut out = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            if e.start.vertex == v {
                out.push((i, e.start.layer));
            }
            if e.end.vertex == v {
                out.push((i, e.end.layer));
            }
        }
        out
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.incidences(v).len()
    }

    pub fn max_degree(&self) -> usize {
        self.vertices.iter().map(|&v| self.degree(v)).max().unwrap_or(0)
    }
}

pub fn build_graph(d: &CableDiagram) -> CableGraph {
    CableGraph::from_code(d.code())
}

pub fn is_untangled(g: &CableGraph) -> bool {
    g.vertex_count() == 2
}
