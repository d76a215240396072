//! Decorated finite morphisms of metric graphs.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::divisor::Divisor;
use crate::metric_graph::{EdgeId, Germ, GraphPoint, MetricGraph, PointError, VertexId, VertexKind};
use crate::rational::{q, Ext};

/// The raw tables of a cover, indexed by source vertex / edge id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverParts {
    pub source: MetricGraph,
    pub target: MetricGraph,
    pub vertex_map: Vec<VertexId>,
    pub edge_map: Vec<EdgeId>,
    pub ram: Vec<u32>,
    pub local_degree: Vec<u32>,
    pub insep_degree: Vec<u32>,
    pub sep_degree: Vec<u32>,
    pub ram_div_degree: Vec<u32>,
    /// One entry per source puncture.
    pub puncture_ram: BTreeMap<VertexId, u32>,
    /// 0 or a prime.
    pub residue_char: u32,
}

/// A finite graph morphism `source -> target` with ramification and
/// residue-degree decorations.
///
/// `new` only checks that the tables are well-formed; the cover axioms are
/// checked by [`DecoratedCover::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecoratedCover {
    parts: CoverParts,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CoverError {
    #[error("malformed cover tables: {0}")]
    Structure(String),
    #[error("cover violates {} axiom(s)", .0.len())]
    Invalid(Vec<Violation>),
    #[error("fiber degree is not constant over the target")]
    InconsistentDegree,
    #[error("source point does not lie over the given target point")]
    NotOver,
    #[error("covers do not compose: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Point(#[from] PointError),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Violation {
    EndpointMismatch { edge: EdgeId },
    LengthLaw { edge: EdgeId },
    Harmonicity { vertex: VertexId, germ: (EdgeId, bool), sum: u64, expected: u64 },
    FiberDegree { vertex: VertexId, sum: u64, expected: u64 },
    DegreeSplit { vertex: VertexId },
    InseparableDegree { vertex: VertexId },
    VertexMapNotSurjective { vertex: VertexId },
    EdgeMapNotSurjective { edge: EdgeId },
    KindMismatch { vertex: VertexId },
    PunctureRam { vertex: VertexId, declared: u32, edge_ram: u32 },
}

impl Violation {
    /// One-line description using the cover's vertex and edge ids.
    pub fn describe(&self, c: &DecoratedCover) -> String {
        let s = c.source();
        let t = c.target();
        match *self {
            Violation::EndpointMismatch { edge } => {
                format!("endpoint-compatibility edge={}", s.edge(edge).name)
            }
            Violation::LengthLaw { edge } => {
                let e = s.edge(edge);
                let img = t.edge(c.edge_map(edge));
                format!(
                    "length-law edge={} ram={} length={} image={} image_length={}",
                    e.name,
                    c.ram(edge),
                    e.length,
                    img.name,
                    img.length
                )
            }
            Violation::Harmonicity { vertex, germ, sum, expected } => format!(
                "harmonicity vertex={} germ={}:{} lift_ram_sum={} local_degree={}",
                s.vertex(vertex).name,
                t.edge(germ.0).name,
                if germ.1 { "tail" } else { "head" },
                sum,
                expected
            ),
            Violation::FiberDegree { vertex, sum, expected } => format!(
                "fiber-degree vertex={} sum={} expected={}",
                t.vertex(vertex).name,
                sum,
                expected
            ),
            Violation::DegreeSplit { vertex } => format!(
                "degree-split vertex={} insep={} sep={} local_degree={}",
                s.vertex(vertex).name,
                c.insep_degree(vertex),
                c.sep_degree(vertex),
                c.local_degree(vertex)
            ),
            Violation::InseparableDegree { vertex } => format!(
                "insep-power vertex={} insep={} residue_char={}",
                s.vertex(vertex).name,
                c.insep_degree(vertex),
                c.residue_char()
            ),
            Violation::VertexMapNotSurjective { vertex } => {
                format!("vertex-surjectivity vertex={}", t.vertex(vertex).name)
            }
            Violation::EdgeMapNotSurjective { edge } => {
                format!("edge-surjectivity edge={}", t.edge(edge).name)
            }
            Violation::KindMismatch { vertex } => {
                format!("kind vertex={}", s.vertex(vertex).name)
            }
            Violation::PunctureRam { vertex, declared, edge_ram } => format!(
                "puncture-ram vertex={} declared={} edge_ram={}",
                s.vertex(vertex).name,
                declared,
                edge_ram
            ),
        }
    }
}

fn is_prime(p: u32) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

pub(crate) fn is_power_of(n: u32, p: u32) -> bool {
    if p == 0 {
        return n == 1;
    }
    let mut n = n;
    while n % p == 0 {
        n /= p;
    }
    n == 1
}

impl DecoratedCover {
    pub fn new(parts: CoverParts) -> Result<Self, CoverError> {
        let ns = parts.source.vertex_count();
        let es = parts.source.edge_count();
        let err = |m: &str| Err(CoverError::Structure(String::from(m)));
        if parts.vertex_map.len() != ns || parts.local_degree.len() != ns {
            return err("vertex tables must have one entry per source vertex");
        }
        if parts.insep_degree.len() != ns || parts.sep_degree.len() != ns || parts.ram_div_degree.len() != ns {
            return err("vertex tables must have one entry per source vertex");
        }
        if parts.edge_map.len() != es || parts.ram.len() != es {
            return err("edge tables must have one entry per source edge");
        }
        if parts.vertex_map.iter().any(|v| v.index() >= parts.target.vertex_count()) {
            return err("vertex_map points outside the target");
        }
        if parts.edge_map.iter().any(|e| e.index() >= parts.target.edge_count()) {
            return err("edge_map points outside the target");
        }
        if parts.ram.contains(&0) || parts.local_degree.contains(&0) {
            return err("ram and local_degree must be at least 1");
        }
        if parts.insep_degree.contains(&0) || parts.sep_degree.contains(&0) {
            return err("insep_degree and sep_degree must be at least 1");
        }
        if parts.residue_char != 0 && !is_prime(parts.residue_char) {
            return err("residue_char must be 0 or a prime");
        }
        for (v, vx) in parts.source.vertices() {
            let has = parts.puncture_ram.contains_key(&v);
            match (vx.kind, has) {
                (VertexKind::Puncture, false) => {
                    return Err(CoverError::Structure(format!("missing puncture_ram for {}", vx.name)))
                }
                (VertexKind::Skeletal, true) => {
                    return Err(CoverError::Structure(format!("puncture_ram given for skeletal {}", vx.name)))
                }
                _ => {}
            }
        }
        if parts.puncture_ram.keys().any(|v| v.index() >= ns) {
            return err("puncture_ram refers to an unknown vertex");
        }
        if parts.puncture_ram.values().any(|&r| r == 0) {
            return err("puncture_ram must be at least 1");
        }
        Ok(DecoratedCover { parts })
    }

    /// The identity cover of `g` with all decorations trivial.
    pub fn identity(g: &MetricGraph, residue_char: u32) -> Self {
        let n = g.vertex_count();
        let m = g.edge_count();
        let puncture_ram = g
            .vertices()
            .filter(|(_, v)| v.kind == VertexKind::Puncture)
            .map(|(id, _)| (id, 1))
            .collect();
        Self::new(CoverParts {
            source: g.clone(),
            target: g.clone(),
            vertex_map: g.vertex_ids().collect(),
            edge_map: g.edge_ids().collect(),
            ram: vec![1; m],
            local_degree: vec![1; n],
            insep_degree: vec![1; n],
            sep_degree: vec![1; n],
            ram_div_degree: vec![0; n],
            puncture_ram,
            residue_char,
        })
        .expect("identity tables are well-formed")
    }

    pub fn parts(&self) -> &CoverParts {
        &self.parts
    }

    pub fn into_parts(self) -> CoverParts {
        self.parts
    }

    pub fn source(&self) -> &MetricGraph {
        &self.parts.source
    }

    pub fn target(&self) -> &MetricGraph {
        &self.parts.target
    }

    pub fn vertex_map(&self, v: VertexId) -> VertexId {
        self.parts.vertex_map[v.index()]
    }

    pub fn edge_map(&self, e: EdgeId) -> EdgeId {
        self.parts.edge_map[e.index()]
    }

    pub fn ram(&self, e: EdgeId) -> u32 {
        self.parts.ram[e.index()]
    }

    pub fn local_degree(&self, v: VertexId) -> u32 {
        self.parts.local_degree[v.index()]
    }

    pub fn insep_degree(&self, v: VertexId) -> u32 {
        self.parts.insep_degree[v.index()]
    }

    pub fn sep_degree(&self, v: VertexId) -> u32 {
        self.parts.sep_degree[v.index()]
    }

    pub fn ram_div_degree(&self, v: VertexId) -> u32 {
        self.parts.ram_div_degree[v.index()]
    }

    pub fn puncture_ram(&self, v: VertexId) -> Option<u32> {
        self.parts.puncture_ram.get(&v).copied()
    }

    pub fn residue_char(&self) -> u32 {
        self.parts.residue_char
    }

    /// Every violated axiom; empty iff the cover is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let s = self.source();
        let t = self.target();
        let mut out = Vec::new();

        for (id, e) in s.edges() {
            let img = t.edge(self.edge_map(id));
            if self.vertex_map(e.tail) != img.tail || self.vertex_map(e.head) != img.head {
                out.push(Violation::EndpointMismatch { edge: id });
            }
            let ok = match (e.length, img.length) {
                (Ext::Finite(l), Ext::Finite(li)) => li == l * q(self.ram(id) as i64),
                (Ext::Infinite, Ext::Infinite) => true,
                _ => false,
            };
            if !ok {
                out.push(Violation::LengthLaw { edge: id });
            }
        }

        for (v, vx) in s.vertices() {
            let base = self.vertex_map(v);
            let mut sums: BTreeMap<(EdgeId, bool), u64> = BTreeMap::new();
            for &(e, fwd) in s.edge_ends(v) {
                *sums.entry((self.edge_map(e), fwd)).or_default() += self.ram(e) as u64;
            }
            let expected = self.local_degree(v) as u64;
            for &germ in t.edge_ends(base) {
                let sum = sums.get(&germ).copied().unwrap_or(0);
                if sum != expected {
                    out.push(Violation::Harmonicity { vertex: v, germ, sum, expected });
                }
            }
            if self.insep_degree(v) as u64 * self.sep_degree(v) as u64 != expected {
                out.push(Violation::DegreeSplit { vertex: v });
            }
            if !is_power_of(self.insep_degree(v), self.residue_char()) {
                out.push(Violation::InseparableDegree { vertex: v });
            }
            if vx.kind != t.kind(base) {
                out.push(Violation::KindMismatch { vertex: v });
            }
            if let Some(declared) = self.puncture_ram(v) {
                if let Some(&(e, _)) = s.edge_ends(v).first() {
                    if declared != self.ram(e) {
                        out.push(Violation::PunctureRam { vertex: v, declared, edge_ram: self.ram(e) });
                    }
                }
            }
        }

        let sums = self.fiber_sums();
        let expected = sums[0];
        for (i, &sum) in sums.iter().enumerate() {
            let vertex = VertexId(i as u32);
            if sum == 0 {
                out.push(Violation::VertexMapNotSurjective { vertex });
            }
            if sum != expected {
                out.push(Violation::FiberDegree { vertex, sum, expected });
            }
        }
        let mut hit = vec![false; t.edge_count()];
        for &e in &self.parts.edge_map {
            hit[e.index()] = true;
        }
        for (i, _) in hit.iter().enumerate().filter(|(_, h)| !**h) {
            out.push(Violation::EdgeMapNotSurjective { edge: EdgeId(i as u32) });
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    fn ensure_valid(&self) -> Result<(), CoverError> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(CoverError::Invalid(v))
        }
    }

    fn fiber_sums(&self) -> Vec<u64> {
        let mut sums = vec![0u64; self.target().vertex_count()];
        for v in self.source().vertex_ids() {
            sums[self.vertex_map(v).index()] += self.local_degree(v) as u64;
        }
        sums
    }

    /// The constant fiber sum of local degrees.
    pub fn global_degree(&self) -> Result<u64, CoverError> {
        let sums = self.fiber_sums();
        if sums.iter().all(|&s| s == sums[0]) {
            Ok(sums[0])
        } else {
            Err(CoverError::InconsistentDegree)
        }
    }

    /// Source vertices over each target vertex, in id order.
    pub fn vertex_fibers(&self) -> Vec<Vec<VertexId>> {
        let mut fibers = vec![Vec::new(); self.target().vertex_count()];
        for v in self.source().vertex_ids() {
            fibers[self.vertex_map(v).index()].push(v);
        }
        fibers
    }

    /// Source edges over each target edge, in id order.
    pub fn edge_fibers(&self) -> Vec<Vec<EdgeId>> {
        let mut fibers = vec![Vec::new(); self.target().edge_count()];
        for e in self.source().edge_ids() {
            fibers[self.edge_map(e).index()].push(e);
        }
        fibers
    }

    pub fn map_point(&self, p: GraphPoint) -> GraphPoint {
        match p {
            GraphPoint::Vertex(v) => GraphPoint::Vertex(self.vertex_map(v)),
            GraphPoint::Interior { edge, offset } => GraphPoint::Interior {
                edge: self.edge_map(edge),
                offset: offset * q(self.ram(edge) as i64),
            },
        }
    }

    pub fn map_germ(&self, g: Germ) -> Germ {
        Germ { base: self.map_point(g.base), edge: self.edge_map(g.edge), forward: g.forward }
    }

    /// All source points over `p`.
    pub fn fiber(&self, p: GraphPoint) -> Result<Vec<GraphPoint>, CoverError> {
        self.target().contains(p)?;
        Ok(match p {
            GraphPoint::Vertex(v) => self
                .source()
                .vertex_ids()
                .filter(|&w| self.vertex_map(w) == v)
                .map(GraphPoint::Vertex)
                .collect(),
            GraphPoint::Interior { edge, offset } => self
                .source()
                .edge_ids()
                .filter(|&e| self.edge_map(e) == edge)
                .map(|e| GraphPoint::Interior { edge: e, offset: offset / q(self.ram(e) as i64) })
                .collect(),
        })
    }

    /// Number of germs at `p'` lying over the target germ `e_p`.
    pub fn lift_count(&self, e_p: Germ, p_src: GraphPoint) -> Result<u32, CoverError> {
        self.source().contains(p_src)?;
        if self.map_point(p_src) != e_p.base {
            return Err(CoverError::NotOver);
        }
        Ok(match p_src {
            GraphPoint::Vertex(v) => self
                .source()
                .edge_ends(v)
                .iter()
                .filter(|&&(e, fwd)| self.edge_map(e) == e_p.edge && fwd == e_p.forward)
                .count() as u32,
            GraphPoint::Interior { edge, .. } => u32::from(self.edge_map(edge) == e_p.edge),
        })
    }

    /// Coefficient of the divisor `w` at a target point: total germ lifts
    /// over the fiber minus twice the fiber size.
    pub fn w_coefficient(&self, p: GraphPoint) -> Result<i64, CoverError> {
        let germs = self.target().tangent_germs(p)?;
        let fiber = self.fiber(p)?;
        let mut lifts = 0i64;
        for &pp in &fiber {
            for &g in &germs {
                lifts += self.lift_count(g, pp)? as i64;
            }
        }
        Ok(lifts - 2 * fiber.len() as i64)
    }

    /// The divisor `w` on the target, computed by germ-lift enumeration at
    /// every target vertex.
    pub fn w_divisor(&self) -> Result<Divisor<'_>, CoverError> {
        self.ensure_valid()?;
        let t = self.target();
        let fibers = self.vertex_fibers();
        let mut coeffs = Vec::with_capacity(t.vertex_count());
        for p in t.vertex_ids() {
            let base = GraphPoint::Vertex(p);
            let mut lifts = 0i64;
            for &pp in &fibers[p.index()] {
                for &(edge, forward) in t.edge_ends(p) {
                    lifts += self.lift_count(Germ { base, edge, forward }, GraphPoint::Vertex(pp))? as i64;
                }
            }
            coeffs.push((base, lifts - 2 * fibers[p.index()].len() as i64));
        }
        Ok(Divisor::from_terms(t, coeffs).expect("vertices lie on the target"))
    }

    /// `outer ∘ inner`, where `inner.target()` is `outer.source()`.
    pub fn compose(inner: &DecoratedCover, outer: &DecoratedCover) -> Result<DecoratedCover, CoverError> {
        if inner.target() != outer.source() {
            return Err(CoverError::Mismatch(String::from("middle graphs differ")));
        }
        if inner.residue_char() != outer.residue_char() {
            return Err(CoverError::Mismatch(String::from("residue characteristics differ")));
        }
        let s = inner.source();
        let vertex_mid: Vec<VertexId> = s.vertex_ids().map(|v| inner.vertex_map(v)).collect();
        let edge_mid: Vec<EdgeId> = s.edge_ids().map(|e| inner.edge_map(e)).collect();
        let mul = |a: u32, b: u32| a.checked_mul(b).ok_or_else(|| CoverError::Structure(String::from("overflow")));
        let mut parts = CoverParts {
            source: s.clone(),
            target: outer.target().clone(),
            vertex_map: vertex_mid.iter().map(|&m| outer.vertex_map(m)).collect(),
            edge_map: edge_mid.iter().map(|&m| outer.edge_map(m)).collect(),
            ram: Vec::with_capacity(s.edge_count()),
            local_degree: Vec::with_capacity(s.vertex_count()),
            insep_degree: Vec::with_capacity(s.vertex_count()),
            sep_degree: Vec::with_capacity(s.vertex_count()),
            ram_div_degree: Vec::with_capacity(s.vertex_count()),
            puncture_ram: BTreeMap::new(),
            residue_char: inner.residue_char(),
        };
        for (e, &m) in s.edge_ids().zip(&edge_mid) {
            parts.ram.push(mul(inner.ram(e), outer.ram(m))?);
        }
        for (v, &m) in s.vertex_ids().zip(&vertex_mid) {
            parts.local_degree.push(mul(inner.local_degree(v), outer.local_degree(m))?);
            parts.insep_degree.push(mul(inner.insep_degree(v), outer.insep_degree(m))?);
            parts.sep_degree.push(mul(inner.sep_degree(v), outer.sep_degree(m))?);
            // R of a composite: R_inner + sep_inner * R_outer, keeping local RH additive
            parts.ram_div_degree.push(inner.ram_div_degree(v) + mul(inner.sep_degree(v), outer.ram_div_degree(m))?);
            if let (Some(a), Some(b)) = (inner.puncture_ram(v), outer.puncture_ram(m)) {
                parts.puncture_ram.insert(v, mul(a, b)?);
            }
        }
        DecoratedCover::new(parts)
    }
}

/// Builds covers by id strings; unspecified decorations take their trivial
/// values (`ram = local_degree = insep = 1`, `sep = local_degree / insep`,
/// `ram_div_degree = 0`, `puncture_ram` = ram of the incident ray).
#[derive(Clone, Debug)]
pub struct CoverBuilder {
    source: MetricGraph,
    target: MetricGraph,
    residue_char: u32,
    vertex_map: BTreeMap<String, String>,
    edge_map: BTreeMap<String, (String, u32)>,
    local_degree: BTreeMap<String, u32>,
    insep: BTreeMap<String, u32>,
    sep: BTreeMap<String, u32>,
    ram_div: BTreeMap<String, u32>,
    puncture_ram: BTreeMap<String, u32>,
}

impl CoverBuilder {
    pub fn new(source: MetricGraph, target: MetricGraph) -> Self {
        CoverBuilder {
            source,
            target,
            residue_char: 0,
            vertex_map: BTreeMap::new(),
            edge_map: BTreeMap::new(),
            local_degree: BTreeMap::new(),
            insep: BTreeMap::new(),
            sep: BTreeMap::new(),
            ram_div: BTreeMap::new(),
            puncture_ram: BTreeMap::new(),
        }
    }

    pub fn residue_char(mut self, p: u32) -> Self {
        self.residue_char = p;
        self
    }

    /// Maps a source vertex and sets its local degree.
    pub fn vertex(mut self, src: &str, dst: &str, local_degree: u32) -> Self {
        self.vertex_map.insert(String::from(src), String::from(dst));
        self.local_degree.insert(String::from(src), local_degree);
        self
    }

    pub fn edge(mut self, src: &str, dst: &str, ram: u32) -> Self {
        self.edge_map.insert(String::from(src), (String::from(dst), ram));
        self
    }

    pub fn insep(mut self, v: &str, d: u32) -> Self {
        self.insep.insert(String::from(v), d);
        self
    }

    pub fn sep(mut self, v: &str, d: u32) -> Self {
        self.sep.insert(String::from(v), d);
        self
    }

    pub fn ram_div(mut self, v: &str, d: u32) -> Self {
        self.ram_div.insert(String::from(v), d);
        self
    }

    pub fn puncture_ram(mut self, v: &str, d: u32) -> Self {
        self.puncture_ram.insert(String::from(v), d);
        self
    }

    pub fn build(self) -> Result<DecoratedCover, CoverError> {
        let s = &self.source;
        let t = &self.target;
        let missing = |what: &str, name: &str| CoverError::Structure(format!("{what} {name:?}"));
        let mut vertex_map = Vec::new();
        let mut local_degree = Vec::new();
        let mut insep_degree = Vec::new();
        let mut sep_degree = Vec::new();
        let mut ram_div_degree = Vec::new();
        for (_, v) in s.vertices() {
            let dst = self.vertex_map.get(&v.name).ok_or_else(|| missing("unmapped source vertex", &v.name))?;
            vertex_map.push(t.vertex_by_name(dst).ok_or_else(|| missing("unknown target vertex", dst))?);
            let d = self.local_degree.get(&v.name).copied().unwrap_or(1);
            let i = self.insep.get(&v.name).copied().unwrap_or(1);
            local_degree.push(d);
            insep_degree.push(i);
            sep_degree.push(self.sep.get(&v.name).copied().unwrap_or(if i == 0 { 0 } else { d / i }.max(1)));
            ram_div_degree.push(self.ram_div.get(&v.name).copied().unwrap_or(0));
        }
        let mut edge_map = Vec::new();
        let mut ram = Vec::new();
        for (_, e) in s.edges() {
            let (dst, r) = self.edge_map.get(&e.name).ok_or_else(|| missing("unmapped source edge", &e.name))?;
            edge_map.push(t.edge_by_name(dst).ok_or_else(|| missing("unknown target edge", dst))?);
            ram.push(*r);
        }
        let mut puncture_ram = BTreeMap::new();
        for (id, v) in s.vertices().filter(|(_, v)| v.kind == VertexKind::Puncture) {
            let r = match self.puncture_ram.get(&v.name) {
                Some(&r) => r,
                None => s.edge_ends(id).first().map(|&(e, _)| ram[e.index()]).unwrap_or(1),
            };
            puncture_ram.insert(id, r);
        }
        DecoratedCover::new(CoverParts {
            source: self.source,
            target: self.target,
            vertex_map,
            edge_map,
            ram,
            local_degree,
            insep_degree,
            sep_degree,
            ram_div_degree,
            puncture_ram,
            residue_char: self.residue_char,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divisor::{canonical_graph_divisor, pushforward};
    use crate::fixtures;
    use crate::metric_graph::GraphBuilder;
    use crate::rational::frac;

    fn w_by_name(c: &DecoratedCover) -> BTreeMap<String, i64> {
        c.w_divisor().unwrap().labelled_terms().into_iter().collect()
    }

    #[test]
    fn fixtures_are_valid() {
        for c in [
            fixtures::double_circle(),
            fixtures::double_circle_with_rays(),
            fixtures::folded_segment(),
            fixtures::forked_segment(),
            fixtures::cyclic_star(),
            fixtures::identity_point(),
        ] {
            assert_eq!(c.validate(), Vec::new());
        }
    }

    #[test]
    fn global_degrees() {
        assert_eq!(fixtures::identity_point().global_degree().unwrap(), 1);
        assert_eq!(fixtures::double_circle().global_degree().unwrap(), 2);
        assert_eq!(fixtures::folded_segment().global_degree().unwrap(), 2);
        assert_eq!(fixtures::forked_segment().global_degree().unwrap(), 2);
        assert_eq!(fixtures::cyclic_star().global_degree().unwrap(), 3);
    }

    #[test]
    fn length_law_violation() {
        let c = fixtures::folded_segment_with_source_length(2);
        let v = c.validate();
        assert_eq!(v, vec![Violation::LengthLaw { edge: EdgeId(0) }]);
        assert_eq!(v[0].describe(&c), "length-law edge=e' ram=2 length=2 image=e image_length=2");
        assert!(matches!(c.w_divisor(), Err(CoverError::Invalid(_))));
    }

    #[test]
    fn harmonicity_and_degree_violations() {
        let mut parts = fixtures::forked_segment().into_parts();
        parts.ram[0] = 2;
        let c = DecoratedCover::new(parts).unwrap();
        let v = c.validate();
        assert!(v.contains(&Violation::LengthLaw { edge: EdgeId(0) }));
        assert!(v.contains(&Violation::Harmonicity {
            vertex: VertexId(0),
            germ: (EdgeId(0), true),
            sum: 3,
            expected: 2
        }));
        assert!(v.contains(&Violation::Harmonicity {
            vertex: VertexId(1),
            germ: (EdgeId(0), false),
            sum: 2,
            expected: 1
        }));

        let mut parts = fixtures::forked_segment().into_parts();
        parts.local_degree[1] = 2;
        parts.sep_degree[1] = 2;
        let v = DecoratedCover::new(parts).unwrap().validate();
        assert!(v.contains(&Violation::FiberDegree { vertex: VertexId(1), sum: 3, expected: 2 }));
    }

    #[test]
    fn decoration_violations() {
        let mut parts = fixtures::double_circle().into_parts();
        parts.insep_degree[0] = 1;
        parts.sep_degree[0] = 2;
        let v = DecoratedCover::new(parts).unwrap().validate();
        assert_eq!(v, vec![Violation::DegreeSplit { vertex: VertexId(0) }]);

        let mut parts = fixtures::folded_segment().into_parts();
        parts.insep_degree = vec![2, 2];
        parts.sep_degree = vec![1, 1];
        let v = DecoratedCover::new(parts.clone()).unwrap().validate();
        assert_eq!(v.len(), 2);
        assert!(v.iter().all(|x| matches!(x, Violation::InseparableDegree { .. })));
        parts.residue_char = 2;
        assert!(DecoratedCover::new(parts).unwrap().is_valid());

        let mut parts = fixtures::cyclic_star().into_parts();
        parts.puncture_ram.insert(VertexId(1), 2);
        let v = DecoratedCover::new(parts).unwrap().validate();
        assert_eq!(v, vec![Violation::PunctureRam { vertex: VertexId(1), declared: 2, edge_ram: 3 }]);
    }

    #[test]
    fn surjectivity_failures() {
        let target = GraphBuilder::new().skeletal("a").skeletal("b").edge("e", "a", "b", Ext::Finite(q(1))).build().unwrap();
        let source = GraphBuilder::new().skeletal("a'").build().unwrap();
        let c = CoverBuilder::new(source, target).vertex("a'", "a", 1).build().unwrap();
        let v = c.validate();
        assert!(v.contains(&Violation::VertexMapNotSurjective { vertex: VertexId(1) }));
        assert!(v.contains(&Violation::EdgeMapNotSurjective { edge: EdgeId(0) }));
        assert!(v.contains(&Violation::Harmonicity { vertex: VertexId(0), germ: (EdgeId(0), true), sum: 0, expected: 1 }));
    }

    #[test]
    fn fibers_and_lifts() {
        let c = fixtures::double_circle();
        let p = GraphPoint::Vertex(VertexId(0));
        assert_eq!(c.fiber(p).unwrap(), vec![GraphPoint::Vertex(VertexId(0)), GraphPoint::Vertex(VertexId(1))]);
        let mid = GraphPoint::Interior { edge: EdgeId(0), offset: frac(1, 2) };
        assert_eq!(c.fiber(mid).unwrap().len(), 2);
        let out = Germ { base: p, edge: EdgeId(0), forward: true };
        assert_eq!(c.lift_count(out, GraphPoint::Vertex(VertexId(0))).unwrap(), 1);
        assert_eq!(c.w_coefficient(p).unwrap(), 0);

        let fold = fixtures::folded_segment();
        let mid = GraphPoint::Interior { edge: EdgeId(0), offset: q(1) };
        assert_eq!(fold.fiber(mid).unwrap(), vec![GraphPoint::Interior { edge: EdgeId(0), offset: frac(1, 2) }]);
        assert_eq!(fold.map_point(GraphPoint::Interior { edge: EdgeId(0), offset: frac(1, 2) }), mid);
        let germ = Germ { base: mid, edge: EdgeId(0), forward: true };
        assert_eq!(fold.lift_count(germ, GraphPoint::Vertex(VertexId(0))), Err(CoverError::NotOver));
        assert_eq!(fold.w_coefficient(mid).unwrap(), 0);
    }

    #[test]
    fn w_examples() {
        let star = fixtures::cyclic_star();
        let w = w_by_name(&star);
        let expected: BTreeMap<String, i64> =
            [("p", 5), ("x1", -1), ("x2", -3), ("x3", -3)].into_iter().map(|(k, v)| (String::from(k), v)).collect();
        assert_eq!(w, expected);

        let fold = fixtures::folded_segment();
        let w = w_by_name(&fold);
        assert_eq!(w, [(String::from("a"), -1), (String::from("b"), -1)].into_iter().collect());

        assert!(w_by_name(&fixtures::double_circle()).is_empty());
        for c in [fixtures::cyclic_star(), fixtures::folded_segment(), fixtures::forked_segment(), fixtures::double_circle_with_rays()] {
            let w = c.w_divisor().unwrap();
            assert_eq!(w.degree(), 2 * c.source().genus() as i64 - 2);
            assert_eq!(w, pushforward(&c, &canonical_graph_divisor(c.source())).unwrap());
        }
    }

    #[test]
    fn composition_multiplies_degrees() {
        let inner = fixtures::double_circle();
        let target = inner.target().clone();
        let id = DecoratedCover::identity(&target, 0);
        let c = DecoratedCover::compose(&inner, &id).unwrap();
        assert_eq!(c, inner);

        let fold = fixtures::folded_segment();
        let c = DecoratedCover::compose(&DecoratedCover::identity(fold.source(), 0), &fold).unwrap();
        assert_eq!(c, fold);
        assert!(matches!(DecoratedCover::compose(&fold, &inner), Err(CoverError::Mismatch(_))));

        // folding a folded segment gives a degree-4 fold
        let mid = fold.source().clone();
        let bottom = GraphBuilder::new().puncture("a'").puncture("b'").edge("e'", "a'", "b'", Ext::Finite(q(1))).build().unwrap();
        assert_eq!(mid, bottom);
        let top = GraphBuilder::new().puncture("a\"").puncture("b\"").edge("e\"", "a\"", "b\"", Ext::Finite(frac(1, 2))).build().unwrap();
        let upper = CoverBuilder::new(top, mid).vertex("a\"", "a'", 2).vertex("b\"", "b'", 2).edge("e\"", "e'", 2).build().unwrap();
        let c = DecoratedCover::compose(&upper, &fold).unwrap();
        assert!(c.is_valid());
        assert_eq!(c.global_degree().unwrap(), 4);
        assert_eq!(c.ram(EdgeId(0)), 4);
        assert_eq!(c.puncture_ram(VertexId(0)), Some(4));
    }
}
