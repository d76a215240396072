//! Random generators for property tests: point sets, polynomials, balls,
//! tower maps, group covers and retraction flows.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::cover::DecoratedCover;
use crate::group::{FiniteGroup, GraphOfGroups, GroupCover, Subgroup};
use crate::metric_graph::{Edge, EdgeId, MetricGraph, Vertex, VertexId, VertexKind};
use crate::pone_oracle::tower::{pull_back, PowerStep, Tower};
use crate::pone_oracle::{BallPoint, FactoredPolynomial, PolynomialMap, UltrametricPointSet};
use crate::rational::{frac, q, Ext, Q};
use crate::retraction::RetractionFlow;

fn small_q<R: Rng + ?Sized>(rng: &mut R, lo: i64, hi: i64) -> Q {
    let den = rng.random_range(1..=3);
    frac(rng.random_range(lo * den..=hi * den), den)
}

/// `n` points labelled `a0, a1, ...` from random nested merges.
pub fn ultrametric_set<R: Rng + ?Sized>(rng: &mut R, n: usize) -> UltrametricPointSet {
    assert!(n >= 1);
    let mut val = vec![vec![Ext::Infinite; n]; n];
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut level = small_q(rng, 0, 4);
    while clusters.len() > 1 {
        let k = rng.random_range(2..=clusters.len().min(3));
        let mut merged: Vec<usize> = Vec::new();
        for _ in 0..k {
            let i = rng.random_range(0..clusters.len());
            let c = clusters.swap_remove(i);
            for &a in &c {
                for &b in &merged {
                    val[a][b] = Ext::Finite(level);
                    val[b][a] = Ext::Finite(level);
                }
            }
            merged.extend(c);
        }
        clusters.push(merged);
        if rng.random_bool(0.7) {
            level -= frac(rng.random_range(1..=6), rng.random_range(1..=3));
        }
    }
    let labels = (0..n).map(|i| format!("a{i}")).collect();
    UltrametricPointSet::new(labels, val).expect("nested merges are ultrametric")
}

pub fn polynomial<R: Rng + ?Sized>(rng: &mut R, set: &UltrametricPointSet) -> FactoredPolynomial {
    let mut roots = Vec::new();
    for i in 0..set.len() {
        if rng.random_bool(0.6) {
            roots.push((i, rng.random_range(1..=3)));
        }
    }
    FactoredPolynomial { leading_valuation: small_q(rng, -2, 2), roots }
}

/// A ball around a random point, its radius often exactly at a breakpoint.
pub fn ball<R: Rng + ?Sized>(rng: &mut R, set: &UltrametricPointSet) -> BallPoint {
    let center = rng.random_range(0..set.len());
    let breaks: Vec<Q> = (0..set.len())
        .filter_map(|j| match set.val(center, j) {
            Ext::Finite(v) => Some(v),
            Ext::Infinite => None,
        })
        .collect();
    let radius = match breaks.choose(rng) {
        Some(&b) if rng.random_bool(0.5) => b,
        Some(&b) => b + small_q(rng, -2, 2),
        None => small_q(rng, -3, 3),
    };
    BallPoint::new(center, radius)
}

/// A tame tower map of degree at most 6 over 1 to 3 marked points.
pub fn tower<R: Rng + ?Sized>(rng: &mut R, residue_char: u32) -> Tower {
    let shapes: [&[u32]; 9] = [&[2], &[3], &[4], &[5], &[6], &[2, 2], &[2, 3], &[3, 2], &[2, 2, 1]];
    let allowed: Vec<&[u32]> = shapes
        .iter()
        .copied()
        .filter(|s| residue_char == 0 || s.iter().all(|&n| n % residue_char != 0))
        .collect();
    let shape = *allowed.choose(rng).expect("some shape is tame");
    let n_top = rng.random_range(1..=3);
    let top = ultrametric_set(rng, n_top);
    let mut level = top.clone();
    let mut steps = Vec::new();
    for &n in shape {
        let center = String::from(level.label(rng.random_range(0..level.len())));
        let step = PowerStep { center, exponent: n, scale: q(rng.random_range(-1..=1)) };
        level = pull_back(&level, &step, residue_char).expect("tame step").points;
        steps.push(step);
    }
    Tower { top, steps, residue_char }
}

/// [`tower`] as a polynomial map, sometimes with a lowered source root.
pub fn polynomial_map<R: Rng + ?Sized>(rng: &mut R, residue_char: u32) -> PolynomialMap {
    let mut map = tower(rng, residue_char).polynomial_map().expect("towers give consistent maps");
    if rng.random_bool(0.5) {
        map.source_base = Some(map.source.min_join() - q(rng.random_range(1..=2)));
    }
    map
}

fn group<R: Rng + ?Sized>(rng: &mut R) -> FiniteGroup {
    match rng.random_range(0..10) {
        0..=4 => FiniteGroup::cyclic(rng.random_range(1..=6)),
        5..=7 => FiniteGroup::dihedral(rng.random_range(3..=4)),
        8 => FiniteGroup::symmetric(3),
        _ => FiniteGroup::symmetric(4),
    }
}

fn pick_within<R: Rng + ?Sized>(rng: &mut R, subs: &[Subgroup], bound: &Subgroup) -> Subgroup {
    let ok: Vec<&Subgroup> = subs.iter().filter(|h| h.is_subset(bound)).collect();
    // favour small groups so that most edges stay unramified
    let i = rng.random_range(0..ok.len());
    let j = rng.random_range(0..ok.len());
    ok[i.min(j)].clone()
}

/// A random graph of groups whose coset cover exists; the source has at
/// most about 200 edges.
pub fn graph_of_groups<R: Rng + ?Sized>(rng: &mut R) -> (GraphOfGroups, Option<Subgroup>) {
    let g = group(rng);
    graph_of_groups_with(rng, &g)
}

/// [`graph_of_groups`] with a fixed group.
pub fn graph_of_groups_with<R: Rng + ?Sized>(rng: &mut R, g: &FiniteGroup) -> (GraphOfGroups, Option<Subgroup>) {
    loop {
        let subs = g.subgroups();
        let max_edges = (200 / g.order()).clamp(1, 10);
        let n = rng.random_range(1..=4usize);
        let mut vertices: Vec<Vertex> = (0..n)
            .map(|i| Vertex { name: format!("p{i}"), genus: u32::from(rng.random_bool(0.2)), kind: VertexKind::Skeletal })
            .collect();
        let mut vgroups: Vec<Subgroup> = (0..n).map(|_| subs.choose(rng).expect("nonempty").clone()).collect();
        let mut edges = Vec::new();
        let mut egroups = Vec::new();
        let mut volts = Vec::new();
        let length = |rng: &mut R| Ext::Finite(frac(rng.random_range(1..=6), rng.random_range(1..=2)));
        let mut push_edge = |rng: &mut R, tail: usize, head: usize, volt: usize, vg: &[Subgroup], edges: &mut Vec<Edge>| {
            let bound = g.intersection(&vg[tail], &g.conjugate(&vg[head], volt));
            egroups.push(pick_within(rng, &subs, &bound));
            volts.push(volt);
            let name = format!("e{}", edges.len());
            edges.push(Edge { name, tail: VertexId(tail as u32), head: VertexId(head as u32), length: length(rng) });
        };
        for i in 1..n {
            let j = rng.random_range(0..i);
            push_edge(rng, j, i, 0, &vgroups, &mut edges);
        }
        for _ in 0..rng.random_range(0..=2) {
            let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
            let volt = rng.random_range(0..g.order());
            push_edge(rng, a, b, volt, &vgroups, &mut edges);
        }
        for r in 0..rng.random_range(0..=3) {
            let tail = rng.random_range(0..n);
            let he = pick_within(rng, &subs, &vgroups[tail]);
            vertices.push(Vertex { name: format!("x{r}"), genus: 0, kind: VertexKind::Puncture });
            vgroups.push(he.clone());
            egroups.push(he);
            volts.push(0);
            let head = vertices.len() - 1;
            let name = format!("e{}", edges.len());
            edges.push(Edge { name, tail: VertexId(tail as u32), head: VertexId(head as u32), length: Ext::Infinite });
        }
        if edges.len() > max_edges {
            continue;
        }
        let Ok(target) = MetricGraph::new(vertices, edges) else { continue };
        let gog = GraphOfGroups { target, group: g.clone(), vertex_groups: vgroups, edge_groups: egroups, voltages: volts };
        let kernel = if rng.random_bool(0.4) { Some(subs.choose(rng).expect("nonempty").clone()) } else { None };
        if gog.cover(kernel.as_ref()).is_ok() {
            return (gog, kernel);
        }
    }
}

/// A random group cover; Galois (with its deck group) when `galois`.
pub fn group_cover<R: Rng + ?Sized>(rng: &mut R, galois: bool) -> GroupCover {
    let g = group(rng);
    group_cover_with(rng, &g, galois)
}

/// [`group_cover`] with a fixed group.
pub fn group_cover_with<R: Rng + ?Sized>(rng: &mut R, g: &FiniteGroup, galois: bool) -> GroupCover {
    loop {
        let (gog, kernel) = graph_of_groups_with(rng, g);
        let k = if galois { None } else { kernel };
        if let Ok(c) = gog.cover(k.as_ref()) {
            return c;
        }
    }
}

/// A random valid cover: a group cover or a cover induced by a tower map.
pub fn cover<R: Rng + ?Sized>(rng: &mut R) -> DecoratedCover {
    if rng.random_bool(0.7) {
        group_cover(rng, false).cover
    } else {
        let map = polynomial_map(rng, 0);
        crate::pone_oracle::induced_cover(&map).expect("tower maps induce valid covers").cover
    }
}

/// A pruned flow on the target whose core holds the images of ramified
/// punctures and a few random vertices.
pub fn flow<R: Rng + ?Sized>(rng: &mut R, c: &DecoratedCover) -> RetractionFlow {
    let t = c.target();
    let mut required: BTreeSet<VertexId> = c
        .parts()
        .puncture_ram
        .iter()
        .filter(|&(_, &r)| r > 1)
        .map(|(&v, _)| c.vertex_map(v))
        .collect();
    for v in t.vertex_ids() {
        if rng.random_bool(0.2) {
            required.insert(v);
        }
    }
    RetractionFlow::pruned(t.clone(), &required)
}

/// A random edge of the target, for germ-level checks.
pub fn target_edge<R: Rng + ?Sized>(rng: &mut R, c: &DecoratedCover) -> EdgeId {
    EdgeId(rng.random_range(0..c.target().edge_count() as u32))
}
