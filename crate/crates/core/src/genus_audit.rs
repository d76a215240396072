//! Genus bookkeeping: total genus, global and local Riemann-Hurwitz, tame
//! ramification orders and the combined skeleton-genus formula.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::cover::{CoverError, DecoratedCover};
use crate::metric_graph::{GraphPoint, Germ, MetricGraph, VertexId, VertexKind};
use crate::retraction::{FlowError, RetractionFlow};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum AuditError {
    #[error("puncture {0:?} is wildly ramified and has no order override")]
    Wild(String),
    #[error("germ at {0:?} is wildly ramified")]
    WildGerm(String),
    #[error("{0:?} is not a skeletal source vertex")]
    NotSkeletal(String),
    #[error("{r} is not divisible by the inseparable degree {insep}")]
    NotDivisible { r: u32, insep: u32 },
    #[error("germ must be based at a source vertex")]
    NotAtVertex,
    #[error(transparent)]
    Cover(#[from] CoverError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

/// Both sides of one identity. Lines with `asserted == false` are reported
/// but never count as failures.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditLine {
    pub label: String,
    pub lhs: i64,
    pub rhs: i64,
    pub asserted: bool,
}

impl AuditLine {
    pub fn new(label: impl Into<String>, lhs: i64, rhs: i64) -> Self {
        AuditLine { label: label.into(), lhs, rhs, asserted: true }
    }

    pub fn residual(&self) -> i64 {
        self.lhs - self.rhs
    }

    pub fn holds(&self) -> bool {
        self.residual() == 0
    }

    pub fn failed(&self) -> bool {
        self.asserted && !self.holds()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AuditReport {
    pub lines: Vec<AuditLine>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        !self.lines.iter().any(AuditLine::failed)
    }
}

/// Graph genus plus every vertex genus decoration.
pub fn total_genus(g: &MetricGraph) -> u64 {
    g.genus() + g.vertices().map(|(_, v)| v.genus as u64).sum::<u64>()
}

/// Explicit ramification orders for wild punctures, keyed by source vertex.
pub type WildOrders = BTreeMap<VertexId, u32>;

/// Degree of the ramification divisor: `ram - 1` at each tame puncture, the
/// override at each wild one.
pub fn ramification_degree(c: &DecoratedCover, wild: &WildOrders) -> Result<i64, AuditError> {
    let p = c.residue_char();
    let mut total = 0i64;
    for (v, vx) in c.source().vertices().filter(|(_, v)| v.kind == VertexKind::Puncture) {
        let ram = c.puncture_ram(v).unwrap_or(1);
        total += match wild.get(&v) {
            Some(&ord) => ord as i64,
            None if p != 0 && ram % p == 0 => return Err(AuditError::Wild(vx.name.clone())),
            None => ram as i64 - 1,
        };
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalRh {
    pub degree: u64,
    pub source_genus: u64,
    pub target_genus: u64,
    pub ramification: i64,
    pub line: AuditLine,
}

/// `2g(C') - 2 = deg(φ)(2g(C) - 2) + deg R` with total genera.
pub fn global_rh_audit(c: &DecoratedCover, wild: &WildOrders) -> Result<GlobalRh, AuditError> {
    let degree = c.global_degree()?;
    let ramification = ramification_degree(c, wild)?;
    let source_genus = total_genus(c.source());
    let target_genus = total_genus(c.target());
    let lhs = 2 * source_genus as i64 - 2;
    let rhs = degree as i64 * (2 * target_genus as i64 - 2) + ramification;
    Ok(GlobalRh { degree, source_genus, target_genus, ramification, line: AuditLine::new("global-rh", lhs, rhs) })
}

/// `2g_{p'} - 2 = sep(p')(2g_p - 2) + deg R_{p'}` at a skeletal source vertex.
pub fn local_rh_audit(c: &DecoratedCover, v: VertexId) -> Result<AuditLine, AuditError> {
    let s = c.source();
    let vx = s.vertex(v);
    if vx.kind != VertexKind::Skeletal {
        return Err(AuditError::NotSkeletal(vx.name.clone()));
    }
    let g_src = vx.genus as i64;
    let g_tgt = c.target().vertex(c.vertex_map(v)).genus as i64;
    let lhs = 2 * g_src - 2;
    let rhs = c.sep_degree(v) as i64 * (2 * g_tgt - 2) + c.ram_div_degree(v) as i64;
    Ok(AuditLine::new(format!("local-rh {}", vx.name), lhs, rhs))
}

/// Local lines for every skeletal source vertex, in id order.
pub fn local_rh_lines(c: &DecoratedCover) -> Vec<AuditLine> {
    c.source()
        .vertices()
        .filter(|(_, v)| v.kind == VertexKind::Skeletal)
        .map(|(id, _)| local_rh_audit(c, id).expect("skeletal vertices have a local line"))
        .collect()
}

/// `r / insep - 1`, the order of the local ramification divisor at a tame
/// germ through which `r` punctures of one class enter.
pub fn tame_order(r: u32, insep: u32) -> Result<i64, AuditError> {
    if insep == 0 || r % insep != 0 {
        return Err(AuditError::NotDivisible { r, insep });
    }
    Ok((r / insep) as i64 - 1)
}

/// [`tame_order`] at the source germ `u'`, checking that the separable part
/// of its ramification is prime to the residue characteristic.
pub fn tame_local_ram_order(c: &DecoratedCover, u: Germ, r: u32) -> Result<i64, AuditError> {
    let v = match u.base {
        GraphPoint::Vertex(v) => v,
        GraphPoint::Interior { .. } => return Err(AuditError::NotAtVertex),
    };
    let s = c.source();
    if s.kind(v) != VertexKind::Skeletal {
        return Err(AuditError::NotSkeletal(s.vertex(v).name.clone()));
    }
    let insep = c.insep_degree(v);
    let ram = c.ram(u.edge);
    if ram % insep != 0 {
        return Err(AuditError::NotDivisible { r: ram, insep });
    }
    let p = c.residue_char();
    if p != 0 && (ram / insep) % p == 0 {
        return Err(AuditError::WildGerm(s.germ_label(u)));
    }
    tame_order(r, insep)
}

/// Number of punctures over the target puncture `x` whose retraction path,
/// in the preimage of `flow`, passes through the base of `u'` arriving
/// along `u'`.
pub fn punctures_entering(
    c: &DecoratedCover,
    flow: &RetractionFlow,
    u: Germ,
    x: VertexId,
) -> Result<u32, AuditError> {
    let source_flow = flow.preimage(c)?;
    let mut count = 0;
    for y in c.source().vertex_ids().filter(|&y| c.vertex_map(y) == x) {
        let path = source_flow.retraction_path(GraphPoint::Vertex(y))?;
        let hit = (1..path.points.len()).any(|i| path.points[i] == u.base && path.incoming_germ(i) == u);
        count += u32::from(hit);
    }
    Ok(count)
}

/// Per-vertex terms of the combined formula at a skeletal target vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CombinedTerm {
    pub vertex: VertexId,
    pub genus: u32,
    pub n_p: u64,
    pub sep_sum: u64,
    pub a_p: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CombinedReport {
    pub degree: u64,
    pub source_graph_genus: u64,
    pub target_graph_genus: u64,
    pub ramification: i64,
    pub local_ramification: i64,
    pub terms: Vec<CombinedTerm>,
    /// The formula with `A_p` and `2(n_p + deg)` terms; informational.
    pub printed: AuditLine,
    /// The identity obtained by substituting total genus, global RH and
    /// the local lines; holds whenever those do.
    pub derived: AuditLine,
}

/// Evaluates both forms of the skeleton-genus formula, summing over
/// skeletal vertices.
pub fn combined_formula_report(c: &DecoratedCover, wild: &WildOrders) -> Result<CombinedReport, AuditError> {
    let d = c.global_degree()?;
    let di = d as i64;
    let ramification = ramification_degree(c, wild)?;
    let s = c.source();
    let t = c.target();
    let fibers = c.vertex_fibers();
    let mut terms = Vec::new();
    for (p, px) in t.vertices().filter(|(_, v)| v.kind == VertexKind::Skeletal) {
        let fiber = &fibers[p.index()];
        let sep_sum: u64 = fiber.iter().map(|&v| c.sep_degree(v) as u64).sum();
        terms.push(CombinedTerm { vertex: p, genus: px.genus, n_p: fiber.len() as u64, sep_sum, a_p: sep_sum + d });
    }
    let local_ramification: i64 = s
        .vertices()
        .filter(|(_, v)| v.kind == VertexKind::Skeletal)
        .map(|(v, _)| c.ram_div_degree(v) as i64)
        .sum();
    let gs = s.genus() as i64;
    let gt = t.genus() as i64;
    let lhs = 2 * gs - 2;
    let base = di * (2 * gt - 2);
    let printed_rhs = base
        + terms.iter().map(|k| k.a_p as i64 * (2 * k.genus as i64 - 2)).sum::<i64>()
        + terms.iter().map(|k| 2 * (k.n_p as i64 + di)).sum::<i64>()
        + ramification
        + local_ramification;
    let derived_rhs = base
        + terms
            .iter()
            .map(|k| (di - k.sep_sum as i64) * (2 * k.genus as i64 - 2) + 2 * (di - k.n_p as i64))
            .sum::<i64>()
        - local_ramification
        + ramification;
    let mut printed = AuditLine::new("combined-printed", lhs, printed_rhs);
    printed.asserted = false;
    Ok(CombinedReport {
        degree: d,
        source_graph_genus: gs as u64,
        target_graph_genus: gt as u64,
        ramification,
        local_ramification,
        terms,
        printed,
        derived: AuditLine::new("combined-derived", lhs, derived_rhs),
    })
}
