//! Retraction flows onto a connected core, path lifting, forward branching
//! and the compatible-skeleton construction.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::cover::{CoverError, DecoratedCover};
use crate::metric_graph::{EdgeId, Germ, GraphPoint, MetricGraph, PointError, UnionFind, VertexId, VertexKind};
use crate::rational::{q, Ext};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum FlowError {
    #[error("core is empty")]
    EmptyCore,
    #[error("core refers to an unknown vertex or edge")]
    UnknownId,
    #[error("core edge {0:?} has an endpoint outside the core")]
    DanglingCoreEdge(String),
    #[error("core is disconnected")]
    CoreDisconnected,
    #[error("complement of the core is not a forest of trees attached at single points")]
    NotTreeComplement,
    #[error("flow lives on a different graph than the cover")]
    GraphMismatch,
    #[error(transparent)]
    Point(#[from] PointError),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RetractionError {
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Cover(#[from] CoverError),
    #[error("path start does not lie under the given source point")]
    StartNotOver,
    #[error("ramified puncture {0:?} lies over a puncture outside the initial core")]
    RamifiedOutsideCore(String),
}

/// A traversed piece of an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Segment {
    pub edge: EdgeId,
    pub forward: bool,
    pub length: Ext,
}

/// Alternating points and segments; `points.len() == segments.len() + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Path {
    pub points: Vec<GraphPoint>,
    pub segments: Vec<Segment>,
}

impl Path {
    pub fn trivial(p: GraphPoint) -> Self {
        Path { points: vec![p], segments: Vec::new() }
    }

    pub fn start(&self) -> GraphPoint {
        self.points[0]
    }

    pub fn end(&self) -> GraphPoint {
        *self.points.last().expect("paths are nonempty")
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn length(&self) -> Ext {
        self.segments.iter().fold(Ext::Finite(q(0)), |acc, s| acc + s.length)
    }

    /// The germ by which the path leaves its `i`-th point.
    pub fn outgoing_germ(&self, i: usize) -> Germ {
        let s = self.segments[i];
        Germ { base: self.points[i], edge: s.edge, forward: s.forward }
    }

    /// The germ at the `i`-th point (i ≥ 1) pointing back along the path.
    pub fn incoming_germ(&self, i: usize) -> Germ {
        let s = self.segments[i - 1];
        Germ { base: self.points[i], edge: s.edge, forward: !s.forward }
    }

    fn push(&mut self, edge: EdgeId, forward: bool, length: Ext, to: GraphPoint) {
        self.segments.push(Segment { edge, forward, length });
        self.points.push(to);
    }
}

/// A connected core `Δ` of a graph whose complement is a disjoint union of
/// trees, each attached to `Δ` at a single vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RetractionFlow {
    ambient: MetricGraph,
    core_vertices: Vec<bool>,
    core_edges: Vec<bool>,
    /// For vertices outside the core: the edge-end leading one step closer.
    parent: Vec<Option<(EdgeId, bool)>>,
}

impl RetractionFlow {
    pub fn new(
        ambient: MetricGraph,
        vertices: impl IntoIterator<Item = VertexId>,
        edges: impl IntoIterator<Item = EdgeId>,
    ) -> Result<Self, FlowError> {
        let mut core_vertices = vec![false; ambient.vertex_count()];
        let mut core_edges = vec![false; ambient.edge_count()];
        for v in vertices {
            *core_vertices.get_mut(v.index()).ok_or(FlowError::UnknownId)? = true;
        }
        for e in edges {
            *core_edges.get_mut(e.index()).ok_or(FlowError::UnknownId)? = true;
        }
        Self::from_masks(ambient, core_vertices, core_edges)
    }

    /// The flow whose core is all of `ambient`.
    pub fn whole(ambient: MetricGraph) -> Self {
        let (n, m) = (ambient.vertex_count(), ambient.edge_count());
        Self::from_masks(ambient, vec![true; n], vec![true; m]).expect("a connected graph is its own core")
    }

    /// The smallest core containing `required` obtained by repeatedly pruning
    /// leaves that are not required. With nothing required on a tree, a
    /// single vertex is kept.
    pub fn pruned(ambient: MetricGraph, required: &BTreeSet<VertexId>) -> Self {
        let n = ambient.vertex_count();
        let mut alive_v = vec![true; n];
        let mut alive_e = vec![true; ambient.edge_count()];
        let mut deg: Vec<usize> = ambient.vertex_ids().map(|v| ambient.valence(v)).collect();
        let mut alive_count = n;
        let mut queue: VecDeque<VertexId> = ambient.vertex_ids().filter(|v| deg[v.index()] <= 1).collect();
        while let Some(v) = queue.pop_front() {
            if !alive_v[v.index()] || required.contains(&v) || deg[v.index()] > 1 || alive_count == 1 {
                continue;
            }
            alive_v[v.index()] = false;
            alive_count -= 1;
            for &(e, fwd) in ambient.edge_ends(v) {
                if alive_e[e.index()] {
                    alive_e[e.index()] = false;
                    let other = ambient.edge(e).end(fwd);
                    deg[other.index()] -= 1;
                    deg[v.index()] -= 1;
                    if deg[other.index()] <= 1 {
                        queue.push_back(other);
                    }
                }
            }
        }
        Self::from_masks(ambient, alive_v, alive_e).expect("leaf pruning leaves a valid core")
    }

    fn from_masks(ambient: MetricGraph, core_vertices: Vec<bool>, core_edges: Vec<bool>) -> Result<Self, FlowError> {
        if !core_vertices.iter().any(|&b| b) {
            return Err(FlowError::EmptyCore);
        }
        let mut uf = UnionFind::new(ambient.vertex_count());
        for (id, e) in ambient.edges() {
            if core_edges[id.index()] {
                if !core_vertices[e.tail.index()] || !core_vertices[e.head.index()] {
                    return Err(FlowError::DanglingCoreEdge(e.name.clone()));
                }
                uf.union(e.tail.index(), e.head.index());
            }
        }
        let core_count = core_vertices.iter().filter(|&&b| b).count();
        let outside = ambient.vertex_count() - core_count;
        if uf.count() - outside != 1 {
            return Err(FlowError::CoreDisconnected);
        }
        let noncore_edges = core_edges.iter().filter(|&&b| !b).count();
        if noncore_edges != outside {
            return Err(FlowError::NotTreeComplement);
        }
        // breadth-first from the core; a connected graph with the core
        // collapsed and |E| = |V| edges is a tree, so every vertex is reached once
        let mut parent = vec![None; ambient.vertex_count()];
        let mut seen = core_vertices.clone();
        let mut queue: VecDeque<VertexId> = ambient.vertex_ids().filter(|v| core_vertices[v.index()]).collect();
        while let Some(v) = queue.pop_front() {
            for &(e, fwd) in ambient.edge_ends(v) {
                if core_edges[e.index()] {
                    continue;
                }
                let w = ambient.edge(e).end(fwd);
                if !seen[w.index()] {
                    seen[w.index()] = true;
                    parent[w.index()] = Some((e, !fwd));
                    queue.push_back(w);
                }
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(FlowError::NotTreeComplement);
        }
        Ok(RetractionFlow { ambient, core_vertices, core_edges, parent })
    }

    /// The flow on the cover's source whose core is the preimage of this
    /// flow's core.
    pub fn preimage(&self, c: &DecoratedCover) -> Result<RetractionFlow, FlowError> {
        if c.target() != &self.ambient {
            return Err(FlowError::GraphMismatch);
        }
        let s = c.source();
        let cv = s.vertex_ids().map(|v| self.core_vertices[c.vertex_map(v).index()]).collect();
        let ce = s.edge_ids().map(|e| self.core_edges[c.edge_map(e).index()]).collect();
        RetractionFlow::from_masks(s.clone(), cv, ce)
    }

    pub fn ambient(&self) -> &MetricGraph {
        &self.ambient
    }

    pub fn in_core(&self, v: VertexId) -> bool {
        self.core_vertices[v.index()]
    }

    pub fn edge_in_core(&self, e: EdgeId) -> bool {
        self.core_edges[e.index()]
    }

    pub fn core_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.ambient.vertex_ids().filter(move |v| self.in_core(*v))
    }

    pub fn core_edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.ambient.edge_ids().filter(move |e| self.edge_in_core(*e))
    }

    pub fn point_in_core(&self, p: GraphPoint) -> bool {
        match p {
            GraphPoint::Vertex(v) => self.in_core(v),
            GraphPoint::Interior { edge, .. } => self.edge_in_core(edge),
        }
    }

    /// The germ at a vertex outside the core pointing toward the core.
    pub fn forward_germ(&self, v: VertexId) -> Option<Germ> {
        self.parent[v.index()].map(|(edge, forward)| Germ { base: GraphPoint::Vertex(v), edge, forward })
    }

    /// The unique geodesic from `p` to the core; trivial when `p` is in it.
    pub fn retraction_path(&self, p: GraphPoint) -> Result<Path, FlowError> {
        self.ambient.contains(p)?;
        let mut path = Path::trivial(p);
        let mut v = match p {
            _ if self.point_in_core(p) => return Ok(path),
            GraphPoint::Vertex(v) => v,
            GraphPoint::Interior { edge, offset } => {
                let e = self.ambient.edge(edge);
                // the edge is the parent edge of exactly one of its endpoints
                let toward_head = self.parent[e.tail.index()].map(|(pe, _)| pe) == Some(edge)
                    && self.parent[e.head.index()].map(|(pe, _)| pe) != Some(edge);
                let (to, length) = if toward_head {
                    let rest = match e.length {
                        Ext::Finite(l) => Ext::Finite(l - offset),
                        Ext::Infinite => Ext::Infinite,
                    };
                    (e.head, rest)
                } else {
                    (e.tail, Ext::Finite(offset))
                };
                path.push(edge, toward_head, length, GraphPoint::Vertex(to));
                to
            }
        };
        while let Some((edge, forward)) = self.parent[v.index()] {
            let e = self.ambient.edge(edge);
            let to = e.end(forward);
            path.push(edge, forward, e.length, GraphPoint::Vertex(to));
            v = to;
        }
        Ok(path)
    }

    /// The core vertex where `p` lands.
    pub fn attachment(&self, p: GraphPoint) -> Result<GraphPoint, FlowError> {
        Ok(self.retraction_path(p)?.end())
    }
}

/// All maximal lifts of `path` starting at the source point `start`.
pub fn lift_path(c: &DecoratedCover, path: &Path, start: GraphPoint) -> Result<Vec<Path>, RetractionError> {
    c.source().contains(start).map_err(FlowError::from)?;
    c.target().contains(path.start()).map_err(FlowError::from)?;
    if c.map_point(start) != path.start() {
        return Err(RetractionError::StartNotOver);
    }
    let mut out = Vec::new();
    let mut stack = vec![Path::trivial(start)];
    while let Some(lift) = stack.pop() {
        let i = lift.segments.len();
        if i == path.segments.len() {
            out.push(lift);
            continue;
        }
        let seg = path.segments[i];
        let here = lift.end();
        let candidates: Vec<EdgeId> = match here {
            GraphPoint::Vertex(v) => c
                .source()
                .edge_ends(v)
                .iter()
                .filter(|&&(e, fwd)| c.edge_map(e) == seg.edge && fwd == seg.forward)
                .map(|&(e, _)| e)
                .collect(),
            GraphPoint::Interior { edge, .. } if c.edge_map(edge) == seg.edge => vec![edge],
            GraphPoint::Interior { .. } => Vec::new(),
        };
        if candidates.is_empty() {
            out.push(lift);
            continue;
        }
        // push in reverse so lifts come out in edge order
        for &e in candidates.iter().rev() {
            let next = match path.points[i + 1] {
                GraphPoint::Vertex(_) => GraphPoint::Vertex(c.source().edge(e).end(seg.forward)),
                GraphPoint::Interior { offset, .. } => {
                    GraphPoint::Interior { edge: e, offset: offset / q(c.ram(e) as i64) }
                }
            };
            let mut l = lift.clone();
            l.push(e, seg.forward, seg.length.div_int(c.ram(e) as u64), next);
            stack.push(l);
        }
    }
    Ok(out)
}

/// Source vertices outside the preimage of the core carrying at least two
/// germs over the forward germ of their image.
pub fn forward_branching_points(c: &DecoratedCover, flow: &RetractionFlow) -> Result<BTreeSet<VertexId>, FlowError> {
    if c.target() != flow.ambient() {
        return Err(FlowError::GraphMismatch);
    }
    let mut out = BTreeSet::new();
    for v in c.source().vertex_ids() {
        let base = c.vertex_map(v);
        if let Some((edge, forward)) = flow.parent[base.index()] {
            let lifts = c
                .source()
                .edge_ends(v)
                .iter()
                .filter(|&&(e, fwd)| c.edge_map(e) == edge && fwd == forward)
                .count();
            if lifts >= 2 {
                out.insert(v);
            }
        }
    }
    Ok(out)
}

/// Outcome of the checks on the vertex sets of a compatible pair of cores.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VertexSetConditions {
    /// Source core vertices are exactly the preimages of target core vertices.
    pub preimage: bool,
    /// Every graph vertex lying on a core is a core vertex.
    pub contains_vertices: bool,
    /// Every point of a core with at least three branches inside the core
    /// is a vertex.
    pub branch_points: bool,
}

impl VertexSetConditions {
    pub fn all(&self) -> bool {
        self.preimage && self.contains_vertices && self.branch_points
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompatibleSkeleton {
    pub target: RetractionFlow,
    pub source: RetractionFlow,
    /// Forward branching points of the initial flow, all removed.
    pub eliminated: BTreeSet<VertexId>,
    /// Target edges added to reconnect the preimage, one list per bridge.
    pub bridges: Vec<Vec<EdgeId>>,
}

impl CompatibleSkeleton {
    pub fn conditions(&self, c: &DecoratedCover) -> VertexSetConditions {
        let preimage = c.source().vertex_ids().all(|v| self.source.in_core(v) == self.target.in_core(c.vertex_map(v)));
        let contains = |f: &RetractionFlow| {
            f.core_edges().all(|e| {
                let ed = f.ambient().edge(e);
                f.in_core(ed.tail) && f.in_core(ed.head)
            })
        };
        // interior points of a core edge have exactly two branches, so only
        // vertices can have three or more
        let branch = |f: &RetractionFlow| {
            let g = f.ambient();
            f.core_vertices().chain(g.vertex_ids().filter(|&v| !f.in_core(v))).all(|v| {
                let inside = g.edge_ends(v).iter().filter(|(e, _)| f.edge_in_core(*e)).count();
                inside < 3 || f.in_core(v)
            })
        };
        VertexSetConditions {
            preimage,
            contains_vertices: contains(&self.target) && contains(&self.source),
            branch_points: branch(&self.target) && branch(&self.source),
        }
    }
}

/// Enlarges the core of `initial` until its preimage is connected and has
/// no forward branching points.
///
/// Each round first absorbs the images of all forward branching points
/// together with their retraction paths, then, while the preimage is
/// disconnected, finds the shortest source geodesic from the component
/// holding the smallest vertex id to any other component (ties broken by
/// smallest vertex id) and absorbs its image.
pub fn compatible_skeleton(c: &DecoratedCover, initial: &RetractionFlow) -> Result<CompatibleSkeleton, RetractionError> {
    let violations = c.validate();
    if !violations.is_empty() {
        return Err(CoverError::Invalid(violations).into());
    }
    if c.target() != initial.ambient() {
        return Err(FlowError::GraphMismatch.into());
    }
    let s = c.source();
    for (v, vx) in s.vertices() {
        if vx.kind == VertexKind::Puncture && c.puncture_ram(v).unwrap_or(1) > 1 && !initial.in_core(c.vertex_map(v)) {
            return Err(RetractionError::RamifiedOutsideCore(vx.name.clone()));
        }
    }
    let eliminated = forward_branching_points(c, initial)?;
    let mut flow = initial.clone();
    let mut bridges = Vec::new();
    loop {
        let fb = forward_branching_points(c, &flow)?;
        if !fb.is_empty() {
            let mut cv = flow.core_vertices.clone();
            let mut ce = flow.core_edges.clone();
            for v in fb {
                let path = flow.retraction_path(GraphPoint::Vertex(c.vertex_map(v)))?;
                absorb(&path, &mut cv, &mut ce, flow.ambient());
            }
            flow = RetractionFlow::from_masks(flow.ambient.clone(), cv, ce)?;
            continue;
        }
        match bridge(c, &flow) {
            None => break,
            Some(edges) => {
                let mut cv = flow.core_vertices.clone();
                let mut ce = flow.core_edges.clone();
                for &e in &edges {
                    let ed = flow.ambient().edge(e);
                    ce[e.index()] = true;
                    cv[ed.tail.index()] = true;
                    cv[ed.head.index()] = true;
                }
                flow = RetractionFlow::from_masks(flow.ambient.clone(), cv, ce)?;
                bridges.push(edges);
            }
        }
    }
    let source = flow.preimage(c)?;
    Ok(CompatibleSkeleton { target: flow, source, eliminated, bridges })
}

fn absorb(path: &Path, cv: &mut [bool], ce: &mut [bool], g: &MetricGraph) {
    for p in &path.points {
        if let GraphPoint::Vertex(v) = p {
            cv[v.index()] = true;
        }
    }
    for s in &path.segments {
        let e = g.edge(s.edge);
        ce[s.edge.index()] = true;
        cv[e.tail.index()] = true;
        cv[e.head.index()] = true;
    }
}

/// Image edges of a shortest source geodesic joining two components of the
/// preimage of the core, or `None` when the preimage is connected.
fn bridge(c: &DecoratedCover, flow: &RetractionFlow) -> Option<Vec<EdgeId>> {
    let s = c.source();
    let n = s.vertex_count();
    let in_pre: Vec<bool> = s.vertex_ids().map(|v| flow.in_core(c.vertex_map(v))).collect();
    let mut uf = UnionFind::new(n);
    for (id, e) in s.edges() {
        if flow.edge_in_core(c.edge_map(id)) {
            uf.union(e.tail.index(), e.head.index());
        }
    }
    let pre: Vec<VertexId> = s.vertex_ids().filter(|v| in_pre[v.index()]).collect();
    let by_name = |a: &VertexId, b: &VertexId| s.vertex(*a).name.cmp(&s.vertex(*b).name);
    let seed = *pre.iter().min_by(|a, b| by_name(a, b))?;
    let root = uf.find(seed.index());
    if pre.iter().all(|v| uf.find(v.index()) == root) {
        return None;
    }
    // multi-source Dijkstra from the seed component; the graph is small, so
    // the quadratic scan is fine
    let mut dist: Vec<Option<Ext>> = vec![None; n];
    let mut prev: Vec<Option<EdgeId>> = vec![None; n];
    let mut done = vec![false; n];
    for v in &pre {
        if uf.find(v.index()) == root {
            dist[v.index()] = Some(Ext::Finite(q(0)));
        }
    }
    loop {
        let next = s
            .vertex_ids()
            .filter(|v| !done[v.index()] && dist[v.index()].is_some())
            .min_by(|a, b| dist[a.index()].cmp(&dist[b.index()]).then_with(|| by_name(a, b)))?;
        done[next.index()] = true;
        if in_pre[next.index()] && uf.find(next.index()) != root {
            let mut edges = Vec::new();
            let mut v = next;
            while let Some(e) = prev[v.index()] {
                edges.push(c.edge_map(e));
                let ed = s.edge(e);
                v = if ed.tail == v { ed.head } else { ed.tail };
            }
            edges.sort();
            edges.dedup();
            return Some(edges);
        }
        let d = dist[next.index()].expect("scanned vertices have a distance");
        for &(e, fwd) in s.edge_ends(next) {
            let w = s.edge(e).end(fwd);
            let nd = d + s.edge(e).length;
            let better = match dist[w.index()] {
                None => true,
                Some(old) => nd < old,
            };
            if !done[w.index()] && better {
                dist[w.index()] = Some(nd);
                prev[w.index()] = Some(e);
            }
        }
    }
}
