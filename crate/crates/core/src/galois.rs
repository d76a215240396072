//! Deck-group actions on covers and the Galois fiber formulas.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::cover::{CoverError, DecoratedCover};
use crate::metric_graph::{EdgeId, Germ, GraphPoint, MetricGraph, VertexId, VertexKind};
use crate::retraction::{FlowError, Path, RetractionFlow, Segment};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum GaloisError {
    #[error("deck group is empty")]
    EmptyGroup,
    #[error("group element {index} is not an automorphism of the cover: {reason}")]
    NotAutomorphism { index: usize, reason: String },
    #[error("group is not closed under composition")]
    NotClosed,
    #[error("group does not act transitively on the fiber over {0:?}")]
    NotTransitive(String),
    #[error("unknown id {0:?} in permutation table")]
    UnknownId(String),
    #[error("source and target flows are not compatible")]
    IncompatibleFlows,
    #[error("{0:?} is not a source puncture")]
    NotPuncture(String),
    #[error("vertex {vertex:?} is not on the retraction path of {puncture:?}")]
    NotOnPath { vertex: String, puncture: String },
    #[error("retraction classes over {0:?} have different sizes")]
    ClassSizeNotConstant(String),
    #[error("lifts of germ {0:?} carry different ramification")]
    RamNotConstant(String),
    #[error("germ must be based at a target vertex")]
    NotAtVertex,
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Cover(#[from] CoverError),
}

/// A permutation of the source vertices and edges, stored as image tables.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DeckTransformation {
    pub vertices: Vec<VertexId>,
    pub edges: Vec<EdgeId>,
}

impl DeckTransformation {
    pub fn identity(g: &MetricGraph) -> Self {
        DeckTransformation { vertices: g.vertex_ids().collect(), edges: g.edge_ids().collect() }
    }

    /// Builds a permutation from `(from, to)` id pairs; unlisted ids are fixed.
    pub fn from_names(g: &MetricGraph, vertices: &[(&str, &str)], edges: &[(&str, &str)]) -> Result<Self, GaloisError> {
        let mut t = Self::identity(g);
        let vid = |n: &str| g.vertex_by_name(n).ok_or_else(|| GaloisError::UnknownId(String::from(n)));
        let eid = |n: &str| g.edge_by_name(n).ok_or_else(|| GaloisError::UnknownId(String::from(n)));
        for &(a, b) in vertices {
            t.vertices[vid(a)?.index()] = vid(b)?;
        }
        for &(a, b) in edges {
            t.edges[eid(a)?.index()] = eid(b)?;
        }
        Ok(t)
    }

    pub fn vertex(&self, v: VertexId) -> VertexId {
        self.vertices[v.index()]
    }

    pub fn edge(&self, e: EdgeId) -> EdgeId {
        self.edges[e.index()]
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &DeckTransformation) -> DeckTransformation {
        DeckTransformation {
            vertices: other.vertices.iter().map(|&v| self.vertex(v)).collect(),
            edges: other.edges.iter().map(|&e| self.edge(e)).collect(),
        }
    }

    pub fn point(&self, p: GraphPoint) -> GraphPoint {
        match p {
            GraphPoint::Vertex(v) => GraphPoint::Vertex(self.vertex(v)),
            GraphPoint::Interior { edge, offset } => GraphPoint::Interior { edge: self.edge(edge), offset },
        }
    }

    pub fn germ(&self, g: Germ) -> Germ {
        Germ { base: self.point(g.base), edge: self.edge(g.edge), forward: g.forward }
    }

    pub fn path(&self, p: &Path) -> Path {
        Path {
            points: p.points.iter().map(|&x| self.point(x)).collect(),
            segments: p
                .segments
                .iter()
                .map(|s| Segment { edge: self.edge(s.edge), forward: s.forward, length: s.length })
                .collect(),
        }
    }
}

/// A cover together with a finite group of deck transformations acting
/// transitively on every vertex fiber and every germ fiber.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GaloisCoverModel {
    cover: DecoratedCover,
    group: Vec<DeckTransformation>,
}

fn check_automorphism(c: &DecoratedCover, s: &DeckTransformation) -> Result<(), String> {
    let g = c.source();
    if s.vertices.len() != g.vertex_count() || s.edges.len() != g.edge_count() {
        return Err(String::from("table sizes differ from the source graph"));
    }
    let vs: BTreeSet<_> = s.vertices.iter().collect();
    let es: BTreeSet<_> = s.edges.iter().collect();
    if vs.len() != g.vertex_count() || es.len() != g.edge_count() {
        return Err(String::from("not a bijection"));
    }
    if s.vertices.iter().any(|v| v.index() >= g.vertex_count()) || s.edges.iter().any(|e| e.index() >= g.edge_count()) {
        return Err(String::from("image out of range"));
    }
    for (v, vx) in g.vertices() {
        let w = s.vertex(v);
        let wx = g.vertex(w);
        if wx.kind != vx.kind || wx.genus != vx.genus {
            return Err(format!("{} -> {} changes kind or genus", vx.name, wx.name));
        }
        if c.vertex_map(w) != c.vertex_map(v) {
            return Err(format!("{} -> {} does not commute with the cover", vx.name, wx.name));
        }
        let deco = |x: VertexId| {
            (c.local_degree(x), c.insep_degree(x), c.sep_degree(x), c.ram_div_degree(x), c.puncture_ram(x))
        };
        if deco(v) != deco(w) {
            return Err(format!("{} -> {} changes decorations", vx.name, wx.name));
        }
    }
    for (e, ex) in g.edges() {
        let f = s.edge(e);
        let fx = g.edge(f);
        if fx.length != ex.length {
            return Err(format!("{} -> {} changes length", ex.name, fx.name));
        }
        if fx.tail != s.vertex(ex.tail) || fx.head != s.vertex(ex.head) {
            return Err(format!("{} -> {} breaks incidence", ex.name, fx.name));
        }
        if c.edge_map(f) != c.edge_map(e) || c.ram(f) != c.ram(e) {
            return Err(format!("{} -> {} does not commute with the cover", ex.name, fx.name));
        }
    }
    Ok(())
}

impl GaloisCoverModel {
    pub fn new(cover: DecoratedCover, group: Vec<DeckTransformation>) -> Result<Self, GaloisError> {
        if group.is_empty() {
            return Err(GaloisError::EmptyGroup);
        }
        for (index, s) in group.iter().enumerate() {
            check_automorphism(&cover, s).map_err(|reason| GaloisError::NotAutomorphism { index, reason })?;
        }
        let set: BTreeSet<DeckTransformation> = group.iter().cloned().collect();
        for a in &set {
            for b in &set {
                if !set.contains(&a.compose(b)) {
                    return Err(GaloisError::NotClosed);
                }
            }
        }
        let group: Vec<DeckTransformation> = set.into_iter().collect();
        let m = GaloisCoverModel { cover, group };
        m.check_transitivity()?;
        Ok(m)
    }

    fn check_transitivity(&self) -> Result<(), GaloisError> {
        let c = &self.cover;
        let s = c.source();
        let t = c.target();
        for (p, fiber) in c.vertex_fibers().iter().enumerate() {
            let Some(&first) = fiber.first() else { continue };
            let orbit: BTreeSet<VertexId> = self.group.iter().map(|g| g.vertex(first)).collect();
            if orbit.len() != fiber.len() {
                return Err(GaloisError::NotTransitive(t.vertex(VertexId(p as u32)).name.clone()));
            }
        }
        // germ fibers: source edge-ends over each target edge-end
        let mut fibers: BTreeMap<(EdgeId, bool), Vec<(VertexId, EdgeId)>> = BTreeMap::new();
        for v in s.vertex_ids() {
            for &(e, fwd) in s.edge_ends(v) {
                fibers.entry((c.edge_map(e), fwd)).or_default().push((v, e));
            }
        }
        for (&(te, fwd), fiber) in &fibers {
            let (v0, e0) = fiber[0];
            let orbit: BTreeSet<(VertexId, EdgeId)> = self.group.iter().map(|g| (g.vertex(v0), g.edge(e0))).collect();
            if orbit.len() != fiber.len() {
                let side = if fwd { "tail" } else { "head" };
                return Err(GaloisError::NotTransitive(format!("{}:{}", t.edge(te).name, side)));
            }
        }
        Ok(())
    }

    pub fn cover(&self) -> &DecoratedCover {
        &self.cover
    }

    pub fn group(&self) -> &[DeckTransformation] {
        &self.group
    }

    pub fn order(&self) -> usize {
        self.group.len()
    }
}

/// Checks that every group element preserves the source core and maps each
/// retraction path to the retraction path of the image point.
pub fn verify_equivariance(
    m: &GaloisCoverModel,
    source_flow: &RetractionFlow,
    target_flow: &RetractionFlow,
) -> Result<bool, GaloisError> {
    let expected = target_flow.preimage(&m.cover).map_err(|_| GaloisError::IncompatibleFlows)?;
    if &expected != source_flow {
        return Err(GaloisError::IncompatibleFlows);
    }
    let s = m.cover.source();
    let paths: Vec<Path> = s
        .vertex_ids()
        .map(|v| source_flow.retraction_path(GraphPoint::Vertex(v)))
        .collect::<Result<_, _>>()?;
    for g in &m.group {
        for v in s.vertex_ids() {
            if source_flow.in_core(g.vertex(v)) != source_flow.in_core(v) {
                return Ok(false);
            }
            if paths[g.vertex(v).index()] != g.path(&paths[v.index()]) {
                return Ok(false);
            }
        }
        for e in s.edge_ids() {
            if source_flow.edge_in_core(g.edge(e)) != source_flow.edge_in_core(e) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// The first vertex of the source retraction path of `x'` lying over `p`.
fn point_over(
    c: &DecoratedCover,
    source_flow: &RetractionFlow,
    x: VertexId,
    p: VertexId,
) -> Result<Option<VertexId>, GaloisError> {
    let path = source_flow.retraction_path(GraphPoint::Vertex(x))?;
    Ok(path.points.iter().find_map(|pt| match *pt {
        GraphPoint::Vertex(v) if c.vertex_map(v) == p => Some(v),
        _ => None,
    }))
}

/// Size of the class of punctures over `φ(x')` whose retraction paths pass
/// over `p` through the same source point as that of `x'`, checked to be
/// the same for every puncture in the fiber.
pub fn retraction_class_size(
    m: &GaloisCoverModel,
    target_flow: &RetractionFlow,
    x_src: VertexId,
    p: VertexId,
) -> Result<u32, GaloisError> {
    let c = &m.cover;
    let s = c.source();
    let t = c.target();
    if s.kind(x_src) != VertexKind::Puncture {
        return Err(GaloisError::NotPuncture(s.vertex(x_src).name.clone()));
    }
    let x = c.vertex_map(x_src);
    let on_path = target_flow
        .retraction_path(GraphPoint::Vertex(x))?
        .points
        .contains(&GraphPoint::Vertex(p));
    if !on_path {
        return Err(GaloisError::NotOnPath { vertex: t.vertex(p).name.clone(), puncture: t.vertex(x).name.clone() });
    }
    let source_flow = target_flow.preimage(c)?;
    let fiber: Vec<VertexId> = s.vertex_ids().filter(|&v| c.vertex_map(v) == x).collect();
    let mut over = BTreeMap::new();
    for &y in &fiber {
        let q = point_over(c, &source_flow, y, p)?.ok_or_else(|| GaloisError::NotOnPath {
            vertex: t.vertex(p).name.clone(),
            puncture: s.vertex(y).name.clone(),
        })?;
        over.insert(y, q);
    }
    let mut sizes: BTreeMap<VertexId, u32> = BTreeMap::new();
    for q in over.values() {
        *sizes.entry(*q).or_default() += 1;
    }
    let mut values = sizes.values();
    let first = *values.next().expect("fibers are nonempty");
    if values.any(|&v| v != first) {
        return Err(GaloisError::ClassSizeNotConstant(t.vertex(x).name.clone()));
    }
    Ok(sizes[&over[&x_src]])
}

/// One witness line of the fiber-count check at a target vertex.
///
/// Residuals are `n_p·r·ram(x) - deg` and `n_p·r - deg`; both vanish when
/// the witness is unramified.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiberCountLine {
    pub witness: VertexId,
    pub n_p: u64,
    pub degree: u64,
    pub class_size: u32,
    pub ram: u32,
    pub residual: i64,
    pub residual_without_ram: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FiberCountCheck {
    /// No puncture retracts through the vertex.
    NotApplicable,
    Lines(Vec<FiberCountLine>),
}

/// Compares the number of preimages of `p` with `deg / (r·ram(x))` for every
/// target puncture `x` whose retraction path passes through `p`.
pub fn n_p_check(m: &GaloisCoverModel, target_flow: &RetractionFlow, p: VertexId) -> Result<FiberCountCheck, GaloisError> {
    let c = &m.cover;
    let t = c.target();
    let degree = c.global_degree()?;
    let fibers = c.vertex_fibers();
    let n_p = fibers[p.index()].len() as u64;
    let mut lines = Vec::new();
    for x in t.vertex_ids().filter(|&x| t.kind(x) == VertexKind::Puncture) {
        let path = target_flow.retraction_path(GraphPoint::Vertex(x))?;
        if !path.points.contains(&GraphPoint::Vertex(p)) {
            continue;
        }
        let x_src = fibers[x.index()][0];
        let r = retraction_class_size(m, target_flow, x_src, p)?;
        let ram = c.puncture_ram(x_src).unwrap_or(1);
        let lhs = n_p as i64 * r as i64;
        lines.push(FiberCountLine {
            witness: x,
            n_p,
            degree,
            class_size: r,
            ram,
            residual: lhs * ram as i64 - degree as i64,
            residual_without_ram: lhs - degree as i64,
        });
    }
    Ok(if lines.is_empty() { FiberCountCheck::NotApplicable } else { FiberCountCheck::Lines(lines) })
}

/// Lift counts of a target germ over its fiber, checked against
/// `deg / (n_p·ram(e_p))`.
///
/// `spread` is the difference between the largest and smallest lift count
/// over the fiber; `residual` is `l·n_p·ram - deg` for the common count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GermLiftLine {
    pub lifts: Vec<u32>,
    pub spread: u32,
    pub n_p: u64,
    pub ram: u32,
    pub degree: u64,
    pub residual: i64,
}

pub fn germ_lift_audit(m: &GaloisCoverModel, e_p: Germ) -> Result<GermLiftLine, GaloisError> {
    let c = &m.cover;
    let p = match e_p.base {
        GraphPoint::Vertex(p) => p,
        GraphPoint::Interior { .. } => return Err(GaloisError::NotAtVertex),
    };
    let degree = c.global_degree()?;
    let fiber: Vec<VertexId> = c.source().vertex_ids().filter(|&v| c.vertex_map(v) == p).collect();
    let mut lifts = Vec::with_capacity(fiber.len());
    let mut rams = BTreeSet::new();
    for &v in &fiber {
        lifts.push(c.lift_count(e_p, GraphPoint::Vertex(v))?);
        for &(e, fwd) in c.source().edge_ends(v) {
            if c.edge_map(e) == e_p.edge && fwd == e_p.forward {
                rams.insert(c.ram(e));
            }
        }
    }
    if rams.len() > 1 {
        return Err(GaloisError::RamNotConstant(c.target().germ_label(e_p)));
    }
    let ram = rams.into_iter().next().unwrap_or(0);
    let max = *lifts.iter().max().unwrap_or(&0);
    let min = *lifts.iter().min().unwrap_or(&0);
    let n_p = fiber.len() as u64;
    Ok(GermLiftLine {
        spread: max - min,
        residual: lifts.first().copied().unwrap_or(0) as i64 * n_p as i64 * ram as i64 - degree as i64,
        lifts,
        n_p,
        ram,
        degree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn swap_model() -> GaloisCoverModel {
        let c = fixtures::double_circle();
        let swap = fixtures::sheet_swap(&c);
        GaloisCoverModel::new(c.clone(), alloc::vec![DeckTransformation::identity(c.source()), swap]).unwrap()
    }

    fn star_model() -> GaloisCoverModel {
        let c = fixtures::cyclic_star();
        let group = (0..3).map(|k| fixtures::star_rotation(&c, k)).collect();
        GaloisCoverModel::new(c, group).unwrap()
    }

    #[test]
    fn trivial_group_on_identity() {
        let id = fixtures::identity_point();
        let m = GaloisCoverModel::new(id.clone(), alloc::vec![DeckTransformation::identity(id.source())]).unwrap();
        let f = RetractionFlow::whole(id.target().clone());
        assert!(verify_equivariance(&m, &f.preimage(&id).unwrap(), &f).unwrap());
        let lines = germ_lift_audit(&m, Germ { base: GraphPoint::Vertex(VertexId(0)), edge: EdgeId(0), forward: true });
        // a lone vertex has no germs; auditing a nonexistent germ sees no lifts
        assert!(lines.is_ok());
    }

    #[test]
    fn sheet_swap_is_equivariant() {
        let m = swap_model();
        let t = m.cover().target();
        let flow = RetractionFlow::whole(t.clone());
        assert!(verify_equivariance(&m, &flow.preimage(m.cover()).unwrap(), &flow).unwrap());
        assert_eq!(m.order(), 2);
    }

    #[test]
    fn incompatible_flows_are_rejected() {
        let c = fixtures::double_circle_with_rays();
        let m = GaloisCoverModel::new(c.clone(), alloc::vec![DeckTransformation::identity(c.source()), fixtures::sheet_swap(&c)])
            .unwrap();
        let t = c.target();
        let small = RetractionFlow::new(t.clone(), [t.vertex_by_name("p").unwrap()], [t.edge_by_name("e").unwrap()]).unwrap();
        let whole_src = RetractionFlow::whole(c.source().clone());
        assert_eq!(verify_equivariance(&m, &whole_src, &small), Err(GaloisError::IncompatibleFlows));
    }

    #[test]
    fn fake_automorphism_is_rejected() {
        let c = fixtures::double_circle_with_rays();
        let fake = DeckTransformation::from_names(c.source(), &[], &[("e1", "r1"), ("r1", "e1")]).unwrap();
        let err = GaloisCoverModel::new(c.clone(), alloc::vec![DeckTransformation::identity(c.source()), fake]).unwrap_err();
        assert!(matches!(err, GaloisError::NotAutomorphism { index: 1, .. }));
    }

    #[test]
    fn missing_elements_break_closure_or_transitivity() {
        let c = fixtures::cyclic_star();
        let only_rot = alloc::vec![fixtures::star_rotation(&c, 0), fixtures::star_rotation(&c, 1)];
        assert_eq!(GaloisCoverModel::new(c.clone(), only_rot).unwrap_err(), GaloisError::NotClosed);
        let trivial = alloc::vec![fixtures::star_rotation(&c, 0)];
        assert!(matches!(GaloisCoverModel::new(c, trivial), Err(GaloisError::NotTransitive(_))));
    }

    #[test]
    fn star_class_sizes_and_fiber_counts() {
        let m = star_model();
        let c = m.cover();
        let (s, t) = (c.source(), c.target());
        let flow = RetractionFlow::new(t.clone(), [t.vertex_by_name("p").unwrap()], []).unwrap();
        let p = t.vertex_by_name("p").unwrap();
        assert_eq!(retraction_class_size(&m, &flow, s.vertex_by_name("y20").unwrap(), p).unwrap(), 3);
        assert_eq!(retraction_class_size(&m, &flow, s.vertex_by_name("y1").unwrap(), p).unwrap(), 1);
        let x2 = t.vertex_by_name("x2").unwrap();
        assert!(matches!(
            retraction_class_size(&m, &flow, s.vertex_by_name("y1").unwrap(), x2),
            Err(GaloisError::NotOnPath { .. })
        ));
        let FiberCountCheck::Lines(lines) = n_p_check(&m, &flow, p).unwrap() else { panic!("expected witnesses") };
        assert_eq!(lines.len(), 3);
        for l in &lines {
            assert_eq!(l.residual, 0);
        }
        let x1_line = &lines[0];
        assert_eq!((x1_line.class_size, x1_line.ram, x1_line.residual_without_ram), (1, 3, -2));
        let x2_line = &lines[1];
        assert_eq!((x2_line.n_p, x2_line.class_size, x2_line.ram, x2_line.residual_without_ram), (1, 3, 1, 0));
    }

    #[test]
    fn star_germ_lifts() {
        let m = star_model();
        let t = m.cover().target();
        let p = GraphPoint::Vertex(t.vertex_by_name("p").unwrap());
        let toward = |name: &str| Germ { base: p, edge: t.edge_by_name(name).unwrap(), forward: true };
        let l2 = germ_lift_audit(&m, toward("r2")).unwrap();
        assert_eq!((l2.lifts.clone(), l2.ram, l2.residual, l2.spread), (alloc::vec![3], 1, 0, 0));
        let l1 = germ_lift_audit(&m, toward("r1")).unwrap();
        assert_eq!((l1.lifts.clone(), l1.ram, l1.residual), (alloc::vec![1], 3, 0));
    }

    #[test]
    fn double_circle_with_rays_fiber_counts() {
        let c = fixtures::double_circle_with_rays();
        let m = GaloisCoverModel::new(c.clone(), alloc::vec![DeckTransformation::identity(c.source()), fixtures::sheet_swap(&c)])
            .unwrap();
        let t = c.target();
        let flow = RetractionFlow::new(t.clone(), [t.vertex_by_name("p").unwrap()], [t.edge_by_name("e").unwrap()]).unwrap();
        let p = t.vertex_by_name("p").unwrap();
        let x1 = c.source().vertex_by_name("x1").unwrap();
        assert_eq!(retraction_class_size(&m, &flow, x1, p).unwrap(), 1);
        let FiberCountCheck::Lines(lines) = n_p_check(&m, &flow, p).unwrap() else { panic!() };
        assert_eq!((lines[0].n_p, lines[0].degree, lines[0].class_size, lines[0].residual), (2, 2, 1, 0));
        let circle_germ = Germ { base: GraphPoint::Vertex(p), edge: t.edge_by_name("e").unwrap(), forward: true };
        let line = germ_lift_audit(&m, circle_germ).unwrap();
        assert_eq!((line.lifts.clone(), line.residual), (alloc::vec![1, 1], 0));
    }

    #[test]
    fn orbits_are_fibers() {
        for m in [swap_model(), star_model()] {
            let c = m.cover();
            for (p, fiber) in c.vertex_fibers().iter().enumerate() {
                for &v in fiber {
                    let orbit: BTreeSet<VertexId> = m.group().iter().map(|g| g.vertex(v)).collect();
                    assert_eq!(orbit, fiber.iter().copied().collect(), "fiber over {p}");
                    assert_eq!(c.global_degree().unwrap(), fiber.len() as u64 * c.local_degree(v) as u64);
                }
            }
        }
    }

    #[test]
    fn not_applicable_without_witnesses() {
        let m = swap_model();
        let flow = RetractionFlow::whole(m.cover().target().clone());
        assert_eq!(n_p_check(&m, &flow, VertexId(0)).unwrap(), FiberCountCheck::NotApplicable);
    }
}
