//! DOT rendering of a cover: one cluster per graph, the cover map as dashed
//! edges between them. Vertices and edges are emitted sorted by id.

use std::fmt::Write as _;

use skelcov_core::{DecoratedCover, MetricGraph};

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn cluster(out: &mut String, g: &MetricGraph, prefix: &str, title: &str) {
    writeln!(out, "  subgraph cluster_{title} {{").unwrap();
    writeln!(out, "    label={};", quote(title)).unwrap();
    let mut vs: Vec<_> = g.vertices().map(|(_, v)| v).collect();
    vs.sort_by(|a, b| a.name.cmp(&b.name));
    for v in vs {
        let shape = match v.kind {
            skelcov_core::VertexKind::Skeletal => "circle",
            skelcov_core::VertexKind::Puncture => "point",
        };
        let label = format!("{}\\ng={}", v.name, v.genus);
        writeln!(out, "    {} [label={}, shape={shape}];", quote(&format!("{prefix}:{}", v.name)), quote(&label)).unwrap();
    }
    let mut es: Vec<_> = g.edges().map(|(_, e)| e).collect();
    es.sort_by(|a, b| a.name.cmp(&b.name));
    for e in es {
        writeln!(
            out,
            "    {} -> {} [label={}];",
            quote(&format!("{prefix}:{}", g.vertex(e.tail).name)),
            quote(&format!("{prefix}:{}", g.vertex(e.head).name)),
            quote(&format!("{} l={}", e.name, e.length))
        )
        .unwrap();
    }
    out.push_str("  }\n");
}

pub fn render(c: &DecoratedCover) -> String {
    let s = c.source();
    let t = c.target();
    let mut out = String::from("digraph cover {\n  compound=true;\n");
    cluster(&mut out, s, "s", "source");
    cluster(&mut out, t, "t", "target");
    let mut maps: Vec<(&str, &str)> =
        s.vertices().map(|(id, v)| (v.name.as_str(), t.vertex(c.vertex_map(id)).name.as_str())).collect();
    maps.sort();
    for (a, b) in maps {
        writeln!(out, "  {} -> {} [style=dashed, arrowhead=vee];", quote(&format!("s:{a}")), quote(&format!("t:{b}"))).unwrap();
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use skelcov_core::fixtures;

    #[test]
    fn double_circle_has_three_nodes() {
        let dot = render(&fixtures::double_circle());
        assert_eq!(dot.matches("subgraph cluster_").count(), 2);
        assert_eq!(dot.matches("shape=circle").count(), 3);
        assert_eq!(dot.matches("style=dashed").count(), 2);
        assert!(dot.contains("\"s:p1\" -> \"s:p2\" [label=\"e1 l=1\"];"));
    }

    #[test]
    fn identity_point_has_one_node_per_cluster() {
        let dot = render(&fixtures::identity_point());
        assert_eq!(dot.matches("shape=circle").count(), 2);
        assert_eq!(render(&fixtures::identity_point()), dot);
    }
}
