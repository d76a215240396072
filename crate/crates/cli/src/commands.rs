//! The subcommands, as functions from input text to a report and an
//! optional emitted document. File handling lives in `cli`.

use std::collections::BTreeSet;

use skelcov_core::divisor::{canonical_graph_divisor, pushforward};
use skelcov_core::galois::{germ_lift_audit, n_p_check, verify_equivariance, FiberCountCheck, GaloisCoverModel};
use skelcov_core::genus_audit::{combined_formula_report, global_rh_audit, local_rh_lines, total_genus, AuditLine};
use skelcov_core::pone_oracle::{
    ball_tree, ball_valuation, germ_slope, induced_cover, projective_ball_tree, zeros_in_ball, BallPoint, BallTree,
    TreeNode,
};
use skelcov_core::rational::DisplayQ;
use skelcov_core::retraction::{compatible_skeleton, forward_branching_points, RetractionFlow};
use skelcov_core::{DecoratedCover, Germ, GraphPoint, VertexId, VertexKind};

use crate::document::CoverDocument;
use crate::dot;
use crate::oracle_doc::{rational, OracleSpec};
use crate::report::Report;

#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: Report,
    /// A spec or DOT document produced by the command.
    pub document: Option<String>,
}

impl From<Report> for Outcome {
    fn from(report: Report) -> Self {
        Outcome { report, document: None }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AuditFlags {
    pub global_rh: bool,
    pub local_rh: bool,
    pub combined: bool,
    pub w: bool,
}

impl AuditFlags {
    pub fn all() -> Self {
        AuditFlags { global_rh: true, local_rh: true, combined: true, w: true }
    }

    fn or_all(self) -> Self {
        if self == AuditFlags::default() {
            AuditFlags::all()
        } else {
            self
        }
    }
}

fn audit_text(l: &AuditLine) -> String {
    format!("{} lhs={} rhs={} residual={}", l.label, l.lhs, l.rhs, l.residual())
}

fn load(r: &mut Report, text: &str) -> Option<CoverDocument> {
    match CoverDocument::parse(text) {
        Ok(d) => Some(d),
        Err(e) => {
            r.fatal(e.to_string());
            None
        }
    }
}

/// Reports the violations of `c`; true when there are none.
fn violations(r: &mut Report, c: &DecoratedCover) -> bool {
    let vs = c.validate();
    for v in &vs {
        r.info(format!("violation {}", v.describe(c)));
    }
    r.check(format!("violations={}", vs.len()), vs.is_empty());
    r.set("violations", vs.len());
    vs.is_empty()
}

fn shape(r: &mut Report, c: &DecoratedCover) {
    r.set("source_vertices", c.source().vertex_count());
    r.set("source_edges", c.source().edge_count());
    r.set("target_vertices", c.target().vertex_count());
    r.set("target_edges", c.target().edge_count());
}

pub fn validate(input: &str, text: &str) -> Outcome {
    let mut r = Report::new("validate", input);
    let Some(doc) = load(&mut r, text) else { return r.into() };
    let c = &doc.cover;
    shape(&mut r, c);
    if violations(&mut r, c) {
        let d = c.global_degree().expect("valid covers have a degree");
        r.info(format!("degree={d}"));
        r.info(format!("source_genus={} target_genus={}", total_genus(c.source()), total_genus(c.target())));
    }
    r.into()
}

pub fn audit(input: &str, text: &str, flags: AuditFlags) -> Outcome {
    let mut r = Report::new("audit", input);
    let Some(doc) = load(&mut r, text) else { return r.into() };
    let c = &doc.cover;
    let flags = flags.or_all();
    let vs = c.validate();
    if !vs.is_empty() {
        for v in &vs {
            r.info(format!("violation {}", v.describe(c)));
        }
        r.check(format!("violations={}", vs.len()), false);
        return r.into();
    }
    if flags.global_rh {
        match global_rh_audit(c, &doc.wild) {
            Ok(g) => {
                r.info(format!(
                    "global-rh degree={} source_genus={} target_genus={} ramification={}",
                    g.degree, g.source_genus, g.target_genus, g.ramification
                ));
                r.check(audit_text(&g.line), g.line.holds());
            }
            Err(e) => r.line_error(format!("global-rh {e}")),
        }
    }
    if flags.local_rh {
        for l in local_rh_lines(c) {
            r.check(audit_text(&l), l.holds());
        }
    }
    if flags.combined {
        match combined_formula_report(c, &doc.wild) {
            Ok(k) => {
                for t in &k.terms {
                    r.info(format!(
                        "combined-term vertex={} genus={} n_p={} sep_sum={} a_p={}",
                        c.target().vertex(t.vertex).name,
                        t.genus,
                        t.n_p,
                        t.sep_sum,
                        t.a_p
                    ));
                }
                r.info(format!("{} reported", audit_text(&k.printed)));
                r.check(audit_text(&k.derived), k.derived.holds());
            }
            Err(e) => r.line_error(format!("combined {e}")),
        }
    }
    if flags.w {
        match c.w_divisor() {
            Ok(w) => {
                for (label, k) in w.labelled_terms() {
                    r.info(format!("w({label}) = {k}"));
                }
                let g = c.source().genus() as i64;
                let ok = w.degree() == 2 * g - 2;
                r.check(format!("deg w = {}, 2g'-2 = {},", w.degree(), 2 * g - 2), ok);
                let same = pushforward(c, &canonical_graph_divisor(c.source())).is_ok_and(|d| d == w);
                r.check("w = pushforward of canonical divisor", same);
            }
            Err(e) => r.line_error(format!("w {e}")),
        }
    }
    r.into()
}

fn vertex_names(g: &skelcov_core::MetricGraph, vs: impl IntoIterator<Item = VertexId>) -> String {
    let names: Vec<&str> = vs.into_iter().map(|v| g.vertex(v).name.as_str()).collect();
    if names.is_empty() {
        "-".into()
    } else {
        names.join(",")
    }
}

pub fn skeletonize(input: &str, text: &str, check_idempotent: bool) -> Outcome {
    let mut r = Report::new("skeletonize", input);
    let Some(doc) = load(&mut r, text) else { return r.into() };
    let Some(initial) = doc.flow.clone() else {
        r.fatal("spec has no flow block");
        return r.into();
    };
    let c = &doc.cover;
    let out = match compatible_skeleton(c, &initial) {
        Ok(o) => o,
        Err(e) => {
            r.line_error(format!("skeletonize {e}"));
            return r.into();
        }
    };
    let s = c.source();
    let t = c.target();
    for &v in &out.eliminated {
        r.info(format!("eliminated {} over {}", s.vertex(v).name, t.vertex(c.vertex_map(v)).name));
    }
    for b in &out.bridges {
        let names: Vec<&str> = b.iter().map(|&e| t.edge(e).name.as_str()).collect();
        r.info(format!("bridge {}", names.join(",")));
    }
    let promoted: Vec<VertexId> = out.target.core_vertices().filter(|&v| !initial.in_core(v)).collect();
    r.info(format!("promoted {}", vertex_names(t, promoted.iter().copied())));
    r.info(format!("target_core {}", vertex_names(t, out.target.core_vertices())));
    r.info(format!("source_core {}", vertex_names(s, out.source.core_vertices())));
    let remaining = forward_branching_points(c, &out.target).map(|b| b.len());
    r.check(format!("forward_branching={}", remaining.clone().map_or("?".into(), |n| n.to_string())), remaining == Ok(0));
    let cond = out.conditions(c);
    r.check(
        format!("preimage={} contains_vertices={} branch_points={}", cond.preimage, cond.contains_vertices, cond.branch_points),
        cond.all(),
    );
    r.set("branching_points", out.eliminated.len());
    r.set("promoted", promoted.len());
    r.set("bridges", out.bridges.len());
    let emitted = doc.with_skeleton(&initial, &out).emit();
    if check_idempotent {
        let again = CoverDocument::parse(&emitted).ok().and_then(|d| {
            let f = d.flow.clone()?;
            compatible_skeleton(&d.cover, &f).ok().map(|o| (f, o))
        });
        match again {
            Some((f, o)) if o.target == f && o.eliminated.is_empty() && o.bridges.is_empty() => r.info("IDEMPOTENT"),
            _ => {
                r.info("NOT IDEMPOTENT");
                r.fail();
            }
        }
    }
    Outcome { report: r, document: Some(emitted) }
}

/// The flow used for Galois checks when the spec has none: prune to the
/// skeletal vertices and the images of ramified punctures.
fn default_flow(c: &DecoratedCover) -> RetractionFlow {
    let t = c.target();
    let mut required: BTreeSet<VertexId> = t.vertex_ids().filter(|&v| t.kind(v) == VertexKind::Skeletal).collect();
    for (&v, &k) in &c.parts().puncture_ram {
        if k > 1 {
            required.insert(c.vertex_map(v));
        }
    }
    RetractionFlow::pruned(t.clone(), &required)
}

pub fn galois_check(input: &str, text: &str) -> Outcome {
    let mut r = Report::new("galois-check", input);
    let Some(doc) = load(&mut r, text) else { return r.into() };
    let Some(deck) = doc.deck.clone() else {
        r.fatal("spec has no galois block");
        return r.into();
    };
    // broken decorations still get their residual lines
    let valid = violations(&mut r, &doc.cover);
    let m = match GaloisCoverModel::new(doc.cover.clone(), deck) {
        Ok(m) => m,
        Err(e) => {
            r.line_error(format!("deck-group {e}"));
            return r.into();
        }
    };
    let c = m.cover();
    let t = c.target();
    r.info(format!("deck-group order={}", m.order()));
    r.set("order", m.order());
    let initial = doc.flow.clone().unwrap_or_else(|| default_flow(c));
    let flow = if valid {
        match compatible_skeleton(c, &initial) {
            Ok(k) => {
                match verify_equivariance(&m, &k.source, &k.target) {
                    Ok(ok) => r.check("equivariance", ok),
                    Err(e) => r.line_error(format!("equivariance {e}")),
                }
                k.target
            }
            Err(e) => {
                r.line_error(format!("flow {e}"));
                return r.into();
            }
        }
    } else {
        initial
    };
    r.info(format!("target_core {}", vertex_names(t, flow.core_vertices())));
    let mut lines = 0;
    for p in t.vertex_ids() {
        let pn = &t.vertex(p).name;
        match n_p_check(&m, &flow, p) {
            Ok(FiberCountCheck::NotApplicable) => r.info(format!("n_p p={pn} not-applicable")),
            Ok(FiberCountCheck::Lines(ls)) => {
                for l in ls {
                    lines += 1;
                    r.check(
                        format!(
                            "n_p p={pn} witness={} n_p={} class={} ram={} degree={} residual={} residual_without_ram={}",
                            t.vertex(l.witness).name,
                            l.n_p,
                            l.class_size,
                            l.ram,
                            l.degree,
                            l.residual,
                            l.residual_without_ram
                        ),
                        l.residual == 0,
                    );
                }
            }
            Err(e) => r.line_error(format!("n_p p={pn} {e}")),
        }
        for &(edge, forward) in t.edge_ends(p) {
            let g = Germ { base: GraphPoint::Vertex(p), edge, forward };
            let label = t.germ_label(g);
            match germ_lift_audit(&m, g) {
                Ok(l) => {
                    lines += 1;
                    let lifts: Vec<String> = l.lifts.iter().map(u32::to_string).collect();
                    r.check(
                        format!(
                            "germ-lift {label} lifts={} spread={} n_p={} ram={} degree={} residual={}",
                            lifts.join(","),
                            l.spread,
                            l.n_p,
                            l.ram,
                            l.degree,
                            l.residual
                        ),
                        l.spread == 0 && l.residual == 0,
                    );
                }
                Err(e) => r.line_error(format!("germ-lift {label} {e}")),
            }
        }
    }
    r.set("lines", lines);
    r.into()
}

fn oracle_load(r: &mut Report, text: &str) -> Option<(OracleSpec, skelcov_core::pone_oracle::UltrametricPointSet)> {
    let spec = match OracleSpec::parse(text) {
        Ok(s) => s,
        Err(e) => {
            r.fatal(e.to_string());
            return None;
        }
    };
    match spec.point_set() {
        Ok(set) => Some((spec, set)),
        Err(e) => {
            r.fatal(e.to_string());
            None
        }
    }
}

fn ball_arg(r: &mut Report, set: &skelcov_core::pone_oracle::UltrametricPointSet, center: &str, radius: &str) -> Option<BallPoint> {
    let Some(c) = set.index(center) else {
        r.fatal(format!("unknown center {center:?}"));
        return None;
    };
    match rational("--radius", radius) {
        Ok(q) => Some(BallPoint::new(c, q)),
        Err(e) => {
            r.fatal(e.to_string());
            None
        }
    }
}

/// `val` or `zeros` of the document's polynomial at one ball.
pub fn oracle_ball(input: &str, text: &str, center: &str, radius: &str, zeros: bool) -> Outcome {
    let mut r = Report::new(if zeros { "oracle zeros" } else { "oracle val" }, input);
    let Some((spec, set)) = oracle_load(&mut r, text) else { return r.into() };
    let Some(b) = ball_arg(&mut r, &set, center, radius) else { return r.into() };
    let f = match spec.polynomial(&set) {
        Ok(f) => f,
        Err(e) => {
            r.fatal(e.to_string());
            return r.into();
        }
    };
    let label = set.ball_label(b);
    let result = if zeros {
        zeros_in_ball(&set, &f, b).map(|z| z.to_string())
    } else {
        ball_valuation(&set, &f, b).map(|v| DisplayQ(v).to_string())
    };
    match result {
        Ok(v) => {
            r.info(format!("{} {label} = {v}", if zeros { "zeros" } else { "val" }));
            r.set("value", v);
        }
        Err(e) => r.fatal(e.to_string()),
    }
    r.into()
}

fn node_name(tree: &BallTree, v: VertexId) -> &str {
    &tree.graph.vertex(v).name
}

pub fn oracle_tree(input: &str, text: &str, base: Option<&str>, projective: bool) -> Outcome {
    let mut r = Report::new("oracle tree", input);
    let Some((spec, set)) = oracle_load(&mut r, text) else { return r.into() };
    let base = match base.map(|b| rational("--base", b)).unwrap_or_else(|| spec.base(&set)) {
        Ok(b) => b,
        Err(e) => {
            r.fatal(e.to_string());
            return r.into();
        }
    };
    let built = if projective { projective_ball_tree(&set, base) } else { ball_tree(&set, base) };
    let tree = match built {
        Ok(t) => t,
        Err(e) => {
            r.fatal(e.to_string());
            return r.into();
        }
    };
    let g = &tree.graph;
    for (v, vx) in g.vertices() {
        r.info(format!("vertex {} kind={}", node_name(&tree, v), vx.kind));
    }
    for (_, e) in g.edges() {
        r.info(format!("edge {} {} -> {} length={}", e.name, node_name(&tree, e.tail), node_name(&tree, e.head), e.length));
    }
    r.set("vertices", g.vertex_count());
    r.set("edges", g.edge_count());
    if spec.polynomial.is_some() {
        let f = match spec.polynomial(&set) {
            Ok(f) => f,
            Err(e) => {
                r.fatal(e.to_string());
                return r.into();
            }
        };
        for (v, b) in tree.balls() {
            let mut slopes = Vec::new();
            for germ in g.tangent_germs(GraphPoint::Vertex(v)).expect("tree vertices") {
                slopes.push(germ_slope(&tree, &set, &f, germ).expect("ball germs"));
            }
            let sum: i64 = slopes.iter().sum();
            let val = ball_valuation(&set, &f, b).expect("checked polynomial");
            let list: Vec<String> = slopes.iter().map(i64::to_string).collect();
            let internal = !matches!(tree.node(v), TreeNode::Point(_));
            r.check(
                format!("slopes {} val={} germs={} sum={sum}", node_name(&tree, v), DisplayQ(val), list.join(",")),
                !internal || sum == 0,
            );
        }
    }
    r.into()
}

pub fn oracle_induce(input: &str, text: &str) -> Outcome {
    let mut r = Report::new("oracle induce", input);
    let Some((spec, set)) = oracle_load(&mut r, text) else { return r.into() };
    let map = match spec.map(&set) {
        Ok(m) => m,
        Err(e) => {
            r.fatal(e.to_string());
            return r.into();
        }
    };
    let ic = match induced_cover(&map) {
        Ok(ic) => ic,
        Err(e) => {
            r.line_error(format!("induce {e}"));
            return r.into();
        }
    };
    let c = &ic.cover;
    shape(&mut r, c);
    r.info(format!("degree={}", map.degree()));
    violations(&mut r, c);
    for &(v, k) in &ic.hidden_ramification {
        r.info(format!("hidden-ramification {} order={k}", c.source().vertex(v).name));
    }
    for &v in &ic.wild {
        r.info(format!("wild {}", c.source().vertex(v).name));
    }
    r.set("hidden_ramification", ic.hidden_ramification.len());
    r.set("wild", ic.wild.len());
    Outcome { report: r, document: Some(CoverDocument::new(ic.cover).emit()) }
}

pub fn export(input: &str, text: &str) -> Outcome {
    let mut r = Report::new("export", input);
    let Some(doc) = load(&mut r, text) else { return r.into() };
    shape(&mut r, &doc.cover);
    Outcome { report: r, document: Some(dot::render(&doc.cover)) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use skelcov_core::fixtures;

    fn doc(c: DecoratedCover) -> String {
        CoverDocument::new(c).emit()
    }

    #[test]
    fn validate_exit_codes() {
        assert_eq!(validate("f", &doc(fixtures::folded_segment())).report.status().code(), 0);
        let bad = validate("f", &doc(fixtures::folded_segment_with_source_length(2))).report;
        assert_eq!(bad.status().code(), 2);
        assert_eq!(bad.lines.iter().filter(|l| l.text.starts_with("violation ")).count(), 1);
        assert_eq!(validate("f", "").report.status().code(), 1);
    }

    #[test]
    fn w_line_on_the_star() {
        let out = audit("f", &doc(fixtures::cyclic_star()), AuditFlags { w: true, ..Default::default() });
        let text = out.report.render(false);
        assert!(text.contains("deg w = -2, 2g'-2 = -2, PASS"), "{text}");
        assert!(text.contains("w(p) = 5"));
        assert_eq!(out.report.status().code(), 0);
    }

    #[test]
    fn bad_local_decoration_fails() {
        let out = audit("f", &doc(fixtures::bad_local_decoration()), AuditFlags { local_rh: true, ..Default::default() });
        assert_eq!(out.report.status().code(), 2);
        assert!(out.report.render(false).contains("local-rh p' lhs=-2 rhs=0 residual=-2 FAIL"));
    }

    #[test]
    fn forked_segment_is_skeletonized() {
        let mut d = CoverDocument::new(fixtures::forked_segment());
        let t = d.cover.target().clone();
        let dv = t.vertex_by_name("d").unwrap();
        d.flow = Some(RetractionFlow::new(t, [dv], []).unwrap());
        let out = skeletonize("f", &d.emit(), true);
        let text = out.report.render(false);
        assert!(text.contains("eliminated c' over c"), "{text}");
        assert!(text.contains("IDEMPOTENT"));
        assert!(text.contains("branching_points=1"));
        let back = CoverDocument::parse(out.document.as_ref().unwrap()).unwrap();
        assert_eq!(back.flow.unwrap().core_vertices().count(), 2);
    }
}
