//! Small named covers used throughout the tests and documentation.

use crate::cover::{CoverBuilder, DecoratedCover};
use crate::galois::DeckTransformation;
use crate::metric_graph::{GraphBuilder, MetricGraph, VertexKind};
use crate::rational::{q, Ext};

fn fin(n: i64) -> Ext {
    Ext::Finite(q(n))
}

fn built(b: GraphBuilder) -> MetricGraph {
    b.build().expect("fixture graph is well-formed")
}

fn cover(b: CoverBuilder) -> DecoratedCover {
    b.build().expect("fixture cover tables are well-formed")
}

/// Unramified double cover of a circle of length 1 by a circle of length 2.
pub fn double_circle() -> DecoratedCover {
    let target = built(GraphBuilder::new().skeletal("p").edge("e", "p", "p", fin(1)));
    let source = built(
        GraphBuilder::new()
            .skeletal("p1")
            .skeletal("p2")
            .edge("e1", "p1", "p2", fin(1))
            .edge("e2", "p2", "p1", fin(1)),
    );
    cover(CoverBuilder::new(source, target).vertex("p1", "p", 1).vertex("p2", "p", 1).edge("e1", "e", 1).edge("e2", "e", 1))
}

/// [`double_circle`] with a puncture ray at `p` and one ray per sheet.
pub fn double_circle_with_rays() -> DecoratedCover {
    let target = built(
        GraphBuilder::new()
            .skeletal("p")
            .puncture("x")
            .edge("e", "p", "p", fin(1))
            .edge("r", "p", "x", Ext::Infinite),
    );
    let source = built(
        GraphBuilder::new()
            .skeletal("p1")
            .skeletal("p2")
            .puncture("x1")
            .puncture("x2")
            .edge("e1", "p1", "p2", fin(1))
            .edge("e2", "p2", "p1", fin(1))
            .edge("r1", "p1", "x1", Ext::Infinite)
            .edge("r2", "p2", "x2", Ext::Infinite),
    );
    cover(
        CoverBuilder::new(source, target)
            .vertex("p1", "p", 1)
            .vertex("p2", "p", 1)
            .vertex("x1", "x", 1)
            .vertex("x2", "x", 1)
            .edge("e1", "e", 1)
            .edge("e2", "e", 1)
            .edge("r1", "r", 1)
            .edge("r2", "r", 1),
    )
}

/// The sheet swap of [`double_circle`] or [`double_circle_with_rays`].
pub fn sheet_swap(c: &DecoratedCover) -> DeckTransformation {
    let g = c.source();
    let vs: alloc::vec::Vec<(&str, &str)> = [("p1", "p2"), ("p2", "p1"), ("x1", "x2"), ("x2", "x1")]
        .into_iter()
        .filter(|(a, _)| g.vertex_by_name(a).is_some())
        .collect();
    let es: alloc::vec::Vec<(&str, &str)> = [("e1", "e2"), ("e2", "e1"), ("r1", "r2"), ("r2", "r1")]
        .into_iter()
        .filter(|(a, _)| g.edge_by_name(a).is_some())
        .collect();
    DeckTransformation::from_names(g, &vs, &es).expect("swap names exist")
}

/// A segment of length 2 between two punctures, folded 2:1 by a segment of
/// length 1.
pub fn folded_segment() -> DecoratedCover {
    folded_segment_with_source_length(1)
}

/// [`folded_segment`] with the source edge length replaced, breaking the
/// length law when `len != 1`.
pub fn folded_segment_with_source_length(len: i64) -> DecoratedCover {
    let target = built(GraphBuilder::new().puncture("a").puncture("b").edge("e", "a", "b", fin(2)));
    let source = built(GraphBuilder::new().puncture("a'").puncture("b'").edge("e'", "a'", "b'", fin(len)));
    cover(CoverBuilder::new(source, target).vertex("a'", "a", 2).vertex("b'", "b", 2).edge("e'", "e", 2))
}

/// A segment `c - d` covered by a degree-2 vertex `c'` with two edges
/// `c' - d'1` and `c' - d'2`.
pub fn forked_segment() -> DecoratedCover {
    let target = built(GraphBuilder::new().skeletal("c").skeletal("d").edge("f", "c", "d", fin(1)));
    let source = built(
        GraphBuilder::new()
            .skeletal("c'")
            .skeletal("d'1")
            .skeletal("d'2")
            .edge("f1", "c'", "d'1", fin(1))
            .edge("f2", "c'", "d'2", fin(1)),
    );
    cover(
        CoverBuilder::new(source, target)
            .vertex("c'", "c", 2)
            .ram_div("c'", 2)
            .vertex("d'1", "d", 1)
            .vertex("d'2", "d", 1)
            .edge("f1", "f", 1)
            .edge("f2", "f", 1),
    )
}

/// A genus-0 vertex mapping with separable degree 2 onto a genus-1 vertex and
/// no ramification: locally inconsistent.
pub fn bad_local_decoration() -> DecoratedCover {
    let target = built(GraphBuilder::new().vertex("p", 1, VertexKind::Skeletal));
    let source = built(GraphBuilder::new().skeletal("p'"));
    cover(CoverBuilder::new(source, target).vertex("p'", "p", 2))
}

/// Cyclic triple cover of a star with three puncture rays: totally ramified
/// over `x1`, unramified over `x2` and `x3`.
pub fn cyclic_star() -> DecoratedCover {
    let target = built(
        GraphBuilder::new()
            .skeletal("p")
            .puncture("x1")
            .puncture("x2")
            .puncture("x3")
            .edge("r1", "p", "x1", Ext::Infinite)
            .edge("r2", "p", "x2", Ext::Infinite)
            .edge("r3", "p", "x3", Ext::Infinite),
    );
    let mut g = GraphBuilder::new().skeletal("p'").puncture("y1");
    for i in 2..=3 {
        for k in 0..3 {
            g = g.puncture(&alloc::format!("y{i}{k}"));
        }
    }
    g = g.edge("s1", "p'", "y1", Ext::Infinite);
    for i in 2..=3 {
        for k in 0..3 {
            g = g.edge(&alloc::format!("s{i}{k}"), "p'", &alloc::format!("y{i}{k}"), Ext::Infinite);
        }
    }
    let mut b = CoverBuilder::new(built(g), target).vertex("p'", "p", 3).ram_div("p'", 4).vertex("y1", "x1", 3).edge("s1", "r1", 3);
    for i in 2..=3 {
        for k in 0..3 {
            b = b
                .vertex(&alloc::format!("y{i}{k}"), &alloc::format!("x{i}"), 1)
                .edge(&alloc::format!("s{i}{k}"), &alloc::format!("r{i}"), 1);
        }
    }
    cover(b)
}

/// The order-3 rotation of [`cyclic_star`] raised to the power `k`.
pub fn star_rotation(c: &DecoratedCover, k: usize) -> DeckTransformation {
    let mut vs = alloc::vec![(alloc::string::String::from("p'"), alloc::string::String::from("p'"))];
    let mut es = alloc::vec![(alloc::string::String::from("s1"), alloc::string::String::from("s1"))];
    vs.push(("y1".into(), "y1".into()));
    for i in 2..=3 {
        for j in 0..3 {
            let to = (j + k) % 3;
            vs.push((alloc::format!("y{i}{j}"), alloc::format!("y{i}{to}")));
            es.push((alloc::format!("s{i}{j}"), alloc::format!("s{i}{to}")));
        }
    }
    let vr: alloc::vec::Vec<(&str, &str)> = vs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    let er: alloc::vec::Vec<(&str, &str)> = es.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    DeckTransformation::from_names(c.source(), &vr, &er).expect("rotation names exist")
}

/// Identity cover of a single skeletal vertex.
pub fn identity_point() -> DecoratedCover {
    DecoratedCover::identity(&built(GraphBuilder::new().skeletal("v")), 0)
}
