//! JSON cover specification documents.
//!
//! Ids are strings, lengths are rational strings (`"3/2"`, `"inf"`), and all
//! keyed tables are sorted maps, so emitting a parsed document is
//! byte-stable. Optional vertex tables default to the trivial decoration:
//! `insep_degree` 1, `sep_degree` the local degree over the inseparable
//! part, `ram_div_degree` 0, and `puncture_ram` the ramification of the
//! puncture's ray.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use skelcov_core::galois::DeckTransformation;
use skelcov_core::genus_audit::WildOrders;
use skelcov_core::rational::parse_ext;
use skelcov_core::retraction::{CompatibleSkeleton, RetractionFlow};
use skelcov_core::{CoverParts, DecoratedCover, Edge, MetricGraph, Vertex, VertexKind};

#[derive(Debug, thiserror::Error)]
pub enum DocError {
    #[error("line {line}, column {column}: {msg}")]
    Syntax { line: usize, column: usize, msg: String },
    #[error("{field}: {msg}")]
    Field { field: String, msg: String },
}

/// serde_json's message without its trailing position.
pub(crate) fn syntax_message(e: &serde_json::Error) -> String {
    let full = e.to_string();
    match full.rfind(" at line ") {
        Some(i) => full[..i].to_string(),
        None => full,
    }
}

fn field_err(field: impl Into<String>, msg: impl Into<String>) -> DocError {
    DocError::Field { field: field.into(), msg: msg.into() }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexSpec {
    pub id: String,
    #[serde(default)]
    pub genus: u32,
    #[serde(default = "skeletal")]
    pub kind: String,
}

fn skeletal() -> String {
    "skeletal".into()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub id: String,
    pub tail: String,
    pub head: String,
    pub length: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub vertices: Vec<VertexSpec>,
    #[serde(default)]
    pub edges: Vec<EdgeSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Permutation {
    pub vertices: BTreeMap<String, String>,
    pub edges: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaloisSpec {
    pub deck: Vec<Permutation>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub core_vertices: Vec<String>,
    #[serde(default)]
    pub core_edges: Vec<String>,
}

/// What a skeletonize run changed, kept alongside the enlarged flow.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkeletonSpec {
    pub source_core_vertices: Vec<String>,
    pub source_core_edges: Vec<String>,
    /// Target vertices added to the initial core.
    pub promoted: Vec<String>,
    /// Forward branching source vertices of the initial core.
    pub eliminated: Vec<String>,
    pub bridges: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverSpec {
    #[serde(default)]
    pub residue_char: u32,
    pub target: GraphSpec,
    pub source: GraphSpec,
    pub vertex_map: BTreeMap<String, String>,
    pub edge_map: BTreeMap<String, String>,
    pub ram: BTreeMap<String, u32>,
    pub local_degree: BTreeMap<String, u32>,
    #[serde(default)]
    pub insep_degree: BTreeMap<String, u32>,
    #[serde(default)]
    pub sep_degree: BTreeMap<String, u32>,
    #[serde(default)]
    pub ram_div_degree: BTreeMap<String, u32>,
    #[serde(default)]
    pub puncture_ram: BTreeMap<String, u32>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub wild_orders: BTreeMap<String, u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub galois: Option<GaloisSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skeleton: Option<SkeletonSpec>,
}

/// A parsed document: the cover plus its optional blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverDocument {
    pub cover: DecoratedCover,
    pub deck: Option<Vec<DeckTransformation>>,
    pub flow: Option<RetractionFlow>,
    pub wild: WildOrders,
    pub skeleton: Option<SkeletonSpec>,
}

fn build_graph(spec: &GraphSpec, field: &str) -> Result<MetricGraph, DocError> {
    let mut seen = BTreeSet::new();
    let mut vertices = Vec::with_capacity(spec.vertices.len());
    for (i, v) in spec.vertices.iter().enumerate() {
        let at = format!("{field}.vertices[{i}]");
        if !seen.insert(v.id.as_str()) {
            return Err(field_err(at, format!("duplicate vertex id {:?}", v.id)));
        }
        let kind = match v.kind.as_str() {
            "skeletal" => VertexKind::Skeletal,
            "puncture" => VertexKind::Puncture,
            k => return Err(field_err(format!("{at}.kind"), format!("expected \"skeletal\" or \"puncture\", got {k:?}"))),
        };
        vertices.push(Vertex { name: v.id.clone(), genus: v.genus, kind });
    }
    let index: BTreeMap<&str, u32> = spec.vertices.iter().enumerate().map(|(i, v)| (v.id.as_str(), i as u32)).collect();
    let mut edges = Vec::with_capacity(spec.edges.len());
    for (i, e) in spec.edges.iter().enumerate() {
        let at = format!("{field}.edges[{i}]");
        let end = |name: &str, which: &str| {
            index
                .get(name)
                .map(|&k| skelcov_core::VertexId(k))
                .ok_or_else(|| field_err(format!("{at}.{which}"), format!("unknown vertex {name:?}")))
        };
        let length = parse_ext(&e.length).map_err(|err| field_err(format!("{at}.length"), err.to_string()))?;
        edges.push(Edge { name: e.id.clone(), tail: end(&e.tail, "tail")?, head: end(&e.head, "head")?, length });
    }
    MetricGraph::new(vertices, edges).map_err(|e| field_err(field, e.to_string()))
}

fn graph_spec(g: &MetricGraph) -> GraphSpec {
    GraphSpec {
        vertices: g
            .vertices()
            .map(|(_, v)| VertexSpec { id: v.name.clone(), genus: v.genus, kind: v.kind.to_string() })
            .collect(),
        edges: g
            .edges()
            .map(|(_, e)| EdgeSpec {
                id: e.name.clone(),
                tail: g.vertex(e.tail).name.clone(),
                head: g.vertex(e.head).name.clone(),
                length: e.length.to_string(),
            })
            .collect(),
    }
}

fn check_keys<T>(table: &BTreeMap<String, T>, field: &str, known: impl Fn(&str) -> bool) -> Result<(), DocError> {
    match table.keys().find(|k| !known(k)) {
        Some(k) => Err(field_err(format!("{field}.{k}"), "unknown source id")),
        None => Ok(()),
    }
}

fn names<'a>(ids: impl Iterator<Item = &'a str>) -> Vec<String> {
    ids.map(String::from).collect()
}

impl CoverSpec {
    pub fn parse(text: &str) -> Result<Self, DocError> {
        serde_json::from_str(text).map_err(|e| DocError::Syntax { line: e.line(), column: e.column(), msg: syntax_message(&e) })
    }

    /// Normalized pretty JSON with a trailing newline.
    pub fn emit(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("cover specs serialize");
        s.push('\n');
        s
    }

    pub fn to_document(&self) -> Result<CoverDocument, DocError> {
        let target = build_graph(&self.target, "target")?;
        let source = build_graph(&self.source, "source")?;
        let is_v = |n: &str| source.vertex_by_name(n).is_some();
        let is_e = |n: &str| source.edge_by_name(n).is_some();
        check_keys(&self.vertex_map, "vertex_map", is_v)?;
        check_keys(&self.local_degree, "local_degree", is_v)?;
        check_keys(&self.insep_degree, "insep_degree", is_v)?;
        check_keys(&self.sep_degree, "sep_degree", is_v)?;
        check_keys(&self.ram_div_degree, "ram_div_degree", is_v)?;
        check_keys(&self.puncture_ram, "puncture_ram", is_v)?;
        check_keys(&self.wild_orders, "wild_orders", is_v)?;
        check_keys(&self.edge_map, "edge_map", is_e)?;
        check_keys(&self.ram, "ram", is_e)?;

        let mut vertex_map = Vec::new();
        let mut local_degree = Vec::new();
        let mut insep_degree = Vec::new();
        let mut sep_degree = Vec::new();
        let mut ram_div_degree = Vec::new();
        for (_, v) in source.vertices() {
            let n = v.name.as_str();
            let img = self.vertex_map.get(n).ok_or_else(|| field_err(format!("vertex_map.{n}"), "missing"))?;
            vertex_map.push(
                target.vertex_by_name(img).ok_or_else(|| field_err(format!("vertex_map.{n}"), format!("unknown target vertex {img:?}")))?,
            );
            let d = *self.local_degree.get(n).ok_or_else(|| field_err(format!("local_degree.{n}"), "missing"))?;
            let i = self.insep_degree.get(n).copied().unwrap_or(1);
            if i == 0 {
                return Err(field_err(format!("insep_degree.{n}"), "must be at least 1"));
            }
            local_degree.push(d);
            insep_degree.push(i);
            sep_degree.push(self.sep_degree.get(n).copied().unwrap_or((d / i).max(1)));
            ram_div_degree.push(self.ram_div_degree.get(n).copied().unwrap_or(0));
        }
        let mut edge_map = Vec::new();
        let mut ram = Vec::new();
        for (_, e) in source.edges() {
            let n = e.name.as_str();
            let img = self.edge_map.get(n).ok_or_else(|| field_err(format!("edge_map.{n}"), "missing"))?;
            edge_map.push(
                target.edge_by_name(img).ok_or_else(|| field_err(format!("edge_map.{n}"), format!("unknown target edge {img:?}")))?,
            );
            ram.push(*self.ram.get(n).ok_or_else(|| field_err(format!("ram.{n}"), "missing"))?);
        }
        let mut puncture_ram = BTreeMap::new();
        for (id, v) in source.vertices() {
            let n = v.name.as_str();
            if v.kind == VertexKind::Puncture {
                let r = match self.puncture_ram.get(n) {
                    Some(&r) => r,
                    None => source.edge_ends(id).first().map_or(1, |&(e, _)| ram[e.index()]),
                };
                puncture_ram.insert(id, r);
            } else if self.puncture_ram.contains_key(n) {
                return Err(field_err(format!("puncture_ram.{n}"), "vertex is not a puncture"));
            }
        }
        let mut wild = WildOrders::new();
        for (n, &r) in &self.wild_orders {
            wild.insert(source.vertex_by_name(n).expect("keys checked"), r);
        }

        let parts = CoverParts {
            source,
            target,
            vertex_map,
            edge_map,
            ram,
            local_degree,
            insep_degree,
            sep_degree,
            ram_div_degree,
            puncture_ram,
            residue_char: self.residue_char,
        };
        let cover = DecoratedCover::new(parts).map_err(|e| field_err("cover", e.to_string()))?;
        let s = cover.source();
        let t = cover.target();
        let sv = |field: &str, n: &str| s.vertex_by_name(n).ok_or_else(|| field_err(format!("{field}.{n}"), "unknown source vertex"));
        let se = |field: &str, n: &str| s.edge_by_name(n).ok_or_else(|| field_err(format!("{field}.{n}"), "unknown source edge"));

        let deck = match &self.galois {
            None => None,
            Some(g) => {
                let mut out = Vec::with_capacity(g.deck.len());
                for (i, p) in g.deck.iter().enumerate() {
                    let at = format!("galois.deck[{i}]");
                    let mut d = DeckTransformation::identity(s);
                    for (a, b) in &p.vertices {
                        let f = format!("{at}.vertices");
                        d.vertices[sv(&f, a)?.index()] = sv(&f, b)?;
                    }
                    for (a, b) in &p.edges {
                        let f = format!("{at}.edges");
                        d.edges[se(&f, a)?.index()] = se(&f, b)?;
                    }
                    out.push(d);
                }
                Some(out)
            }
        };

        let flow = match &self.flow {
            None => None,
            Some(f) => {
                let vs = f
                    .core_vertices
                    .iter()
                    .map(|n| t.vertex_by_name(n).ok_or_else(|| field_err(format!("flow.core_vertices.{n}"), "unknown target vertex")))
                    .collect::<Result<Vec<_>, _>>()?;
                let es = f
                    .core_edges
                    .iter()
                    .map(|n| t.edge_by_name(n).ok_or_else(|| field_err(format!("flow.core_edges.{n}"), "unknown target edge")))
                    .collect::<Result<Vec<_>, _>>()?;
                Some(RetractionFlow::new(t.clone(), vs, es).map_err(|e| field_err("flow", e.to_string()))?)
            }
        };

        if let Some(k) = &self.skeleton {
            for n in k.source_core_vertices.iter().chain(&k.eliminated) {
                sv("skeleton", n)?;
            }
            for n in &k.source_core_edges {
                se("skeleton", n)?;
            }
            for n in &k.promoted {
                t.vertex_by_name(n).ok_or_else(|| field_err(format!("skeleton.promoted.{n}"), "unknown target vertex"))?;
            }
            for n in k.bridges.iter().flatten() {
                t.edge_by_name(n).ok_or_else(|| field_err(format!("skeleton.bridges.{n}"), "unknown target edge"))?;
            }
        }

        let skeleton = self.skeleton.clone().map(|mut k| {
            let vpos = |n: &String| s.vertex_by_name(n).map(|v| v.0);
            let epos = |n: &String| s.edge_by_name(n).map(|e| e.0);
            k.source_core_vertices.sort_by_key(vpos);
            k.source_core_edges.sort_by_key(epos);
            k.eliminated.sort_by_key(vpos);
            k.promoted.sort_by_key(|n| t.vertex_by_name(n).map(|v| v.0));
            k
        });
        Ok(CoverDocument { cover, deck, flow, wild, skeleton })
    }
}

impl CoverDocument {
    pub fn new(cover: DecoratedCover) -> Self {
        CoverDocument { cover, deck: None, flow: None, wild: WildOrders::new(), skeleton: None }
    }

    pub fn parse(text: &str) -> Result<Self, DocError> {
        CoverSpec::parse(text)?.to_document()
    }

    pub fn emit(&self) -> String {
        self.to_spec().emit()
    }

    pub fn to_spec(&self) -> CoverSpec {
        let c = &self.cover;
        let s = c.source();
        let t = c.target();
        let vname = |v: skelcov_core::VertexId| s.vertex(v).name.clone();
        let ename = |e: skelcov_core::EdgeId| s.edge(e).name.clone();
        let per_vertex = |f: &dyn Fn(skelcov_core::VertexId) -> u32| s.vertex_ids().map(|v| (vname(v), f(v))).collect();
        CoverSpec {
            residue_char: c.residue_char(),
            target: graph_spec(t),
            source: graph_spec(s),
            vertex_map: s.vertex_ids().map(|v| (vname(v), t.vertex(c.vertex_map(v)).name.clone())).collect(),
            edge_map: s.edge_ids().map(|e| (ename(e), t.edge(c.edge_map(e)).name.clone())).collect(),
            ram: s.edge_ids().map(|e| (ename(e), c.ram(e))).collect(),
            local_degree: per_vertex(&|v| c.local_degree(v)),
            insep_degree: per_vertex(&|v| c.insep_degree(v)),
            sep_degree: per_vertex(&|v| c.sep_degree(v)),
            ram_div_degree: per_vertex(&|v| c.ram_div_degree(v)),
            puncture_ram: c.parts().puncture_ram.iter().map(|(&v, &r)| (vname(v), r)).collect(),
            wild_orders: self.wild.iter().map(|(&v, &r)| (vname(v), r)).collect(),
            galois: self.deck.as_ref().map(|deck| GaloisSpec {
                deck: deck
                    .iter()
                    .map(|d| Permutation {
                        vertices: s.vertex_ids().map(|v| (vname(v), vname(d.vertex(v)))).collect(),
                        edges: s.edge_ids().map(|e| (ename(e), ename(d.edge(e)))).collect(),
                    })
                    .collect(),
            }),
            flow: self.flow.as_ref().map(|f| FlowSpec {
                core_vertices: names(f.core_vertices().map(|v| t.vertex(v).name.as_str())),
                core_edges: names(f.core_edges().map(|e| t.edge(e).name.as_str())),
            }),
            skeleton: self.skeleton.clone(),
        }
    }

    /// The document after a skeletonize run: the flow replaced by the
    /// enlarged core and the changes recorded.
    pub fn with_skeleton(&self, initial: &RetractionFlow, out: &CompatibleSkeleton) -> CoverDocument {
        let s = self.cover.source();
        let t = self.cover.target();
        let skeleton = SkeletonSpec {
            source_core_vertices: names(out.source.core_vertices().map(|v| s.vertex(v).name.as_str())),
            source_core_edges: names(out.source.core_edges().map(|e| s.edge(e).name.as_str())),
            promoted: names(out.target.core_vertices().filter(|&v| !initial.in_core(v)).map(|v| t.vertex(v).name.as_str())),
            eliminated: names(out.eliminated.iter().map(|&v| s.vertex(v).name.as_str())),
            bridges: out.bridges.iter().map(|b| names(b.iter().map(|&e| t.edge(e).name.as_str()))).collect(),
        };
        CoverDocument { flow: Some(out.target.clone()), skeleton: Some(skeleton), ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use skelcov_core::fixtures;

    #[test]
    fn fixtures_round_trip() {
        for c in [fixtures::double_circle_with_rays(), fixtures::folded_segment(), fixtures::cyclic_star(), fixtures::forked_segment()] {
            let doc = CoverDocument::new(c);
            let text = doc.emit();
            let back = CoverDocument::parse(&text).unwrap();
            assert_eq!(back, doc);
            assert_eq!(back.emit(), text);
        }
    }

    #[test]
    fn sparse_tables_take_defaults() {
        let text = r#"{
            "target": {"vertices": [{"id": "a", "kind": "puncture"}, {"id": "b", "kind": "puncture"}],
                       "edges": [{"id": "e", "tail": "a", "head": "b", "length": "2"}]},
            "source": {"vertices": [{"id": "a'", "kind": "puncture"}, {"id": "b'", "kind": "puncture"}],
                       "edges": [{"id": "e'", "tail": "a'", "head": "b'", "length": "1"}]},
            "vertex_map": {"a'": "a", "b'": "b"},
            "edge_map": {"e'": "e"},
            "ram": {"e'": 2},
            "local_degree": {"a'": 2, "b'": 2}
        }"#;
        let doc = CoverDocument::parse(text).unwrap();
        assert_eq!(doc.cover, fixtures::folded_segment());
    }

    #[test]
    fn errors_name_the_field() {
        let err = CoverSpec::parse("{\n  \"target\": 3\n}").unwrap_err();
        assert!(matches!(err, DocError::Syntax { line: 2, .. }), "{err}");
        let mut spec = CoverDocument::new(fixtures::folded_segment()).to_spec();
        spec.edge_map.insert("e'".into(), "nope".into());
        let err = spec.to_document().unwrap_err();
        assert_eq!(err.to_string(), "edge_map.e': unknown target edge \"nope\"");
        let mut spec = CoverDocument::new(fixtures::folded_segment()).to_spec();
        spec.source.edges[0].length = "1/0".into();
        assert!(spec.to_document().unwrap_err().to_string().starts_with("source.edges[0].length"));
    }
}
