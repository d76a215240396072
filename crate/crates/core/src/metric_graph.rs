//! Finite metric graphs with genus decorations, points and germs.
//!
//! Every edge carries an orientation (`tail -> head`). Interior points are
//! addressed by their offset from the tail; rays of infinite length always
//! run from a skeletal tail to a puncture head.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::rational::{is_positive, DisplayQ, Ext, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub u32);

impl VertexId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl EdgeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VertexKind {
    Skeletal,
    Puncture,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vertex {
    pub name: String,
    pub genus: u32,
    pub kind: VertexKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub name: String,
    pub tail: VertexId,
    pub head: VertexId,
    pub length: Ext,
}

impl Edge {
    pub fn is_loop(&self) -> bool {
        self.tail == self.head
    }

    /// The endpoint reached by leaving `v` along this edge in the given direction.
    pub fn end(&self, forward: bool) -> VertexId {
        if forward {
            self.head
        } else {
            self.tail
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GraphPoint {
    Vertex(VertexId),
    /// A point strictly inside an edge, at `offset` from its tail.
    Interior { edge: EdgeId, offset: Q },
}

/// A tangent direction at a point.
///
/// At a vertex `v` the germ `(e, forward = true)` is the edge-end of `e` at
/// its tail and `(e, forward = false)` the edge-end at its head, so a loop
/// contributes two germs. At an interior point of `e` the two germs are the
/// two directions along `e`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Germ {
    pub base: GraphPoint,
    pub edge: EdgeId,
    pub forward: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("graph has no vertices")]
    Empty,
    #[error("duplicate vertex id {0:?}")]
    DuplicateVertex(String),
    #[error("duplicate edge id {0:?}")]
    DuplicateEdge(String),
    #[error("edge {edge:?} refers to unknown vertex {endpoint:?}")]
    DanglingEndpoint { edge: String, endpoint: String },
    #[error("edge {0:?} has non-positive length")]
    NonPositiveLength(String),
    #[error("infinite edge {0:?} must join a skeletal vertex to a puncture")]
    InfiniteEdgeEnds(String),
    #[error("puncture {0:?} must have genus 0")]
    PunctureGenus(String),
    #[error("puncture {vertex:?} has valence {valence}, expected 1")]
    PunctureValence { vertex: String, valence: usize },
    #[error("graph is disconnected")]
    Disconnected,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PointError {
    #[error("point does not lie on the graph")]
    NotOnGraph,
    #[error("offset {offset} is outside the open edge {edge:?}")]
    OffsetOutOfRange { edge: String, offset: String },
    #[error("expected an interior point")]
    NotInterior,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetricGraph {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    germs: Vec<Vec<(EdgeId, bool)>>,
    vertex_names: BTreeMap<String, VertexId>,
    edge_names: BTreeMap<String, EdgeId>,
}

impl MetricGraph {
    /// Builds a graph and checks every structural invariant. Infinite edges
    /// written puncture-first are reoriented.
    pub fn new(vertices: Vec<Vertex>, mut edges: Vec<Edge>) -> Result<Self, GraphError> {
        if vertices.is_empty() {
            return Err(GraphError::Empty);
        }
        let mut vertex_names = BTreeMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if vertex_names.insert(v.name.clone(), VertexId(i as u32)).is_some() {
                return Err(GraphError::DuplicateVertex(v.name.clone()));
            }
            if v.kind == VertexKind::Puncture && v.genus != 0 {
                return Err(GraphError::PunctureGenus(v.name.clone()));
            }
        }
        let mut edge_names = BTreeMap::new();
        let mut germs = vec![Vec::new(); vertices.len()];
        for (i, e) in edges.iter_mut().enumerate() {
            if edge_names.insert(e.name.clone(), EdgeId(i as u32)).is_some() {
                return Err(GraphError::DuplicateEdge(e.name.clone()));
            }
            for end in [e.tail, e.head] {
                if end.index() >= vertices.len() {
                    return Err(GraphError::DanglingEndpoint {
                        edge: e.name.clone(),
                        endpoint: format!("#{}", end.0),
                    });
                }
            }
            match e.length {
                Ext::Finite(l) if !is_positive(l) => {
                    return Err(GraphError::NonPositiveLength(e.name.clone()))
                }
                Ext::Infinite => {
                    let kt = vertices[e.tail.index()].kind;
                    let kh = vertices[e.head.index()].kind;
                    match (kt, kh) {
                        (VertexKind::Skeletal, VertexKind::Puncture) => {}
                        (VertexKind::Puncture, VertexKind::Skeletal) => {
                            core::mem::swap(&mut e.tail, &mut e.head)
                        }
                        _ => return Err(GraphError::InfiniteEdgeEnds(e.name.clone())),
                    }
                }
                Ext::Finite(_) => {}
            }
            germs[e.tail.index()].push((EdgeId(i as u32), true));
            germs[e.head.index()].push((EdgeId(i as u32), false));
        }
        for (i, v) in vertices.iter().enumerate() {
            if v.kind == VertexKind::Puncture && germs[i].len() != 1 {
                // a lone puncture vertex with no edges is not a valid skeleton either
                return Err(GraphError::PunctureValence {
                    vertex: v.name.clone(),
                    valence: germs[i].len(),
                });
            }
        }
        let g = MetricGraph { vertices, edges, germs, vertex_names, edge_names };
        if g.component_count() != 1 {
            return Err(GraphError::Disconnected);
        }
        Ok(g)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex(&self, v: VertexId) -> &Vertex {
        &self.vertices[v.index()]
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e.index()]
    }

    pub fn vertices(&self) -> impl ExactSizeIterator<Item = (VertexId, &Vertex)> + '_ {
        self.vertices.iter().enumerate().map(|(i, v)| (VertexId(i as u32), v))
    }

    pub fn edges(&self) -> impl ExactSizeIterator<Item = (EdgeId, &Edge)> + '_ {
        self.edges.iter().enumerate().map(|(i, e)| (EdgeId(i as u32), e))
    }

    pub fn vertex_ids(&self) -> impl ExactSizeIterator<Item = VertexId> {
        (0..self.vertices.len() as u32).map(VertexId)
    }

    pub fn edge_ids(&self) -> impl ExactSizeIterator<Item = EdgeId> {
        (0..self.edges.len() as u32).map(EdgeId)
    }

    pub fn vertex_by_name(&self, name: &str) -> Option<VertexId> {
        self.vertex_names.get(name).copied()
    }

    pub fn edge_by_name(&self, name: &str) -> Option<EdgeId> {
        self.edge_names.get(name).copied()
    }

    pub fn kind(&self, v: VertexId) -> VertexKind {
        self.vertices[v.index()].kind
    }

    /// Edge-ends at `v` as `(edge, forward)` pairs, in edge order.
    pub fn edge_ends(&self, v: VertexId) -> &[(EdgeId, bool)] {
        &self.germs[v.index()]
    }

    pub fn valence(&self, v: VertexId) -> usize {
        self.germs[v.index()].len()
    }

    pub fn contains(&self, p: GraphPoint) -> Result<(), PointError> {
        match p {
            GraphPoint::Vertex(v) if v.index() < self.vertices.len() => Ok(()),
            GraphPoint::Vertex(_) => Err(PointError::NotOnGraph),
            GraphPoint::Interior { edge, offset } => {
                let e = self.edges.get(edge.index()).ok_or(PointError::NotOnGraph)?;
                if is_positive(offset) && Ext::Finite(offset) < e.length {
                    Ok(())
                } else {
                    Err(PointError::OffsetOutOfRange {
                        edge: e.name.clone(),
                        offset: format!("{}", DisplayQ(offset)),
                    })
                }
            }
        }
    }

    /// First Betti number `|E| - |V| + #components`.
    pub fn genus(&self) -> u64 {
        (self.edges.len() + self.component_count()) as u64 - self.vertices.len() as u64
    }

    fn component_count(&self) -> usize {
        let mut uf = UnionFind::new(self.vertices.len());
        for e in &self.edges {
            uf.union(e.tail.index(), e.head.index());
        }
        uf.count()
    }

    pub fn tangent_germs(&self, p: GraphPoint) -> Result<Vec<Germ>, PointError> {
        self.contains(p)?;
        Ok(match p {
            GraphPoint::Vertex(v) => self.germs[v.index()]
                .iter()
                .map(|&(edge, forward)| Germ { base: p, edge, forward })
                .collect(),
            GraphPoint::Interior { edge, .. } => vec![
                Germ { base: p, edge, forward: true },
                Germ { base: p, edge, forward: false },
            ],
        })
    }

    /// Number of germs at `p`.
    pub fn germ_count(&self, p: GraphPoint) -> usize {
        match p {
            GraphPoint::Vertex(v) => self.valence(v),
            GraphPoint::Interior { .. } => 2,
        }
    }

    /// Splits the edge through `p` at `p`, inserting a genus-0 skeletal vertex.
    ///
    /// The two halves keep the orientation of the original edge and take
    /// the ids `<edge>#0` (tail side) and `<edge>#1`; the old edge id is
    /// retired. Returns the new graph and the id of the inserted vertex.
    pub fn subdivide_at(&self, p: GraphPoint) -> Result<(MetricGraph, VertexId), PointError> {
        let (edge, offset) = match p {
            GraphPoint::Interior { edge, offset } => (edge, offset),
            GraphPoint::Vertex(_) => return Err(PointError::NotInterior),
        };
        self.contains(p)?;
        let old = &self.edges[edge.index()];
        let mut vertices = self.vertices.clone();
        let name = self.fresh_vertex_name(&format!("{}@{}", old.name, DisplayQ(offset)));
        let nv = VertexId(vertices.len() as u32);
        vertices.push(Vertex { name, genus: 0, kind: VertexKind::Skeletal });
        let mut edges = Vec::with_capacity(self.edges.len() + 1);
        for (i, e) in self.edges.iter().enumerate() {
            if i != edge.index() {
                edges.push(e.clone());
            }
        }
        let rest = match old.length {
            Ext::Finite(l) => Ext::Finite(l - offset),
            Ext::Infinite => Ext::Infinite,
        };
        edges.push(Edge {
            name: format!("{}#0", old.name),
            tail: old.tail,
            head: nv,
            length: Ext::Finite(offset),
        });
        edges.push(Edge { name: format!("{}#1", old.name), tail: nv, head: old.head, length: rest });
        let g = MetricGraph::new(vertices, edges).expect("subdivision preserves graph invariants");
        Ok((g, nv))
    }

    fn fresh_vertex_name(&self, base: &str) -> String {
        let mut name = String::from(base);
        let mut k = 1;
        while self.vertex_names.contains_key(&name) {
            name = format!("{base}~{k}");
            k += 1;
        }
        name
    }

    /// Human-readable name of a point: a vertex id or `edge@offset`.
    pub fn point_label(&self, p: GraphPoint) -> String {
        match p {
            GraphPoint::Vertex(v) => self.vertices[v.index()].name.clone(),
            GraphPoint::Interior { edge, offset } => {
                format!("{}@{}", self.edges[edge.index()].name, DisplayQ(offset))
            }
        }
    }

    pub fn germ_label(&self, g: Germ) -> String {
        let e = &self.edges[g.edge.index()].name;
        let arrow = if g.forward { "->" } else { "<-" };
        format!("{}:{}{}", self.point_label(g.base), e, arrow)
    }
}

/// Convenience builder addressing vertices by id string.
#[derive(Clone, Debug, Default)]
pub struct GraphBuilder {
    vertices: Vec<Vertex>,
    edges: Vec<(String, String, String, Ext)>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vertex(mut self, name: &str, genus: u32, kind: VertexKind) -> Self {
        self.vertices.push(Vertex { name: String::from(name), genus, kind });
        self
    }

    pub fn skeletal(self, name: &str) -> Self {
        self.vertex(name, 0, VertexKind::Skeletal)
    }

    pub fn puncture(self, name: &str) -> Self {
        self.vertex(name, 0, VertexKind::Puncture)
    }

    pub fn edge(mut self, name: &str, tail: &str, head: &str, length: Ext) -> Self {
        self.edges.push((String::from(name), String::from(tail), String::from(head), length));
        self
    }

    pub fn build(self) -> Result<MetricGraph, GraphError> {
        let index: BTreeMap<&str, VertexId> = self
            .vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name.as_str(), VertexId(i as u32)))
            .collect();
        let mut edges = Vec::with_capacity(self.edges.len());
        for (name, tail, head, length) in &self.edges {
            let lookup = |end: &String| {
                index.get(end.as_str()).copied().ok_or_else(|| GraphError::DanglingEndpoint {
                    edge: name.clone(),
                    endpoint: end.clone(),
                })
            };
            edges.push(Edge { name: name.clone(), tail: lookup(tail)?, head: lookup(head)?, length: *length });
        }
        MetricGraph::new(self.vertices, edges)
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
    comps: usize,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), comps: n }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        self.comps -= 1;
        true
    }

    pub(crate) fn count(&self) -> usize {
        self.comps
    }
}

impl fmt::Display for VertexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VertexKind::Skeletal => "skeletal",
            VertexKind::Puncture => "puncture",
        })
    }
}
