//! Integer divisors on metric graphs.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::ops::Add;

use crate::cover::DecoratedCover;
use crate::metric_graph::{GraphPoint, MetricGraph, PointError};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum DivisorError {
    #[error(transparent)]
    Point(#[from] PointError),
    #[error("divisor does not live on the cover's source graph")]
    GraphMismatch,
}

/// A finitely supported integer function on the points of a graph.
/// Zero coefficients are never stored.
#[derive(Clone, Debug)]
pub struct Divisor<'g> {
    graph: &'g MetricGraph,
    support: BTreeMap<GraphPoint, i64>,
}

impl<'g> Divisor<'g> {
    pub fn zero(graph: &'g MetricGraph) -> Self {
        Divisor { graph, support: BTreeMap::new() }
    }

    /// Sums the given terms; repeated points accumulate.
    pub fn from_terms<I>(graph: &'g MetricGraph, terms: I) -> Result<Self, DivisorError>
    where
        I: IntoIterator<Item = (GraphPoint, i64)>,
    {
        let mut d = Divisor::zero(graph);
        for (p, c) in terms {
            graph.contains(p)?;
            d.add_at(p, c);
        }
        Ok(d)
    }

    fn add_at(&mut self, p: GraphPoint, c: i64) {
        let slot = self.support.entry(p).or_insert(0);
        *slot += c;
        if *slot == 0 {
            self.support.remove(&p);
        }
    }

    pub fn graph(&self) -> &'g MetricGraph {
        self.graph
    }

    pub fn coefficient(&self, p: GraphPoint) -> i64 {
        self.support.get(&p).copied().unwrap_or(0)
    }

    pub fn support(&self) -> &BTreeMap<GraphPoint, i64> {
        &self.support
    }

    pub fn is_zero(&self) -> bool {
        self.support.is_empty()
    }

    pub fn degree(&self) -> i64 {
        self.support.values().sum()
    }

    /// `(point label, coefficient)` pairs in support order.
    pub fn labelled_terms(&self) -> Vec<(alloc::string::String, i64)> {
        self.support.iter().map(|(&p, &c)| (self.graph.point_label(p), c)).collect()
    }
}

impl PartialEq for Divisor<'_> {
    fn eq(&self, other: &Self) -> bool {
        (core::ptr::eq(self.graph, other.graph) || self.graph == other.graph) && self.support == other.support
    }
}

impl Eq for Divisor<'_> {}

impl<'g> Add for &Divisor<'g> {
    type Output = Divisor<'g>;

    /// Panics when the two divisors live on different graphs.
    fn add(self, rhs: &Divisor<'g>) -> Divisor<'g> {
        assert!(
            core::ptr::eq(self.graph, rhs.graph) || self.graph == rhs.graph,
            "adding divisors on different graphs"
        );
        let mut out = self.clone();
        for (&p, &c) in &rhs.support {
            out.add_at(p, c);
        }
        out
    }
}

/// `D_Γ = Σ (t_v - 2) v` over the vertices of `g`.
pub fn canonical_graph_divisor(g: &MetricGraph) -> Divisor<'_> {
    let terms = g.vertex_ids().map(|v| (GraphPoint::Vertex(v), g.valence(v) as i64 - 2));
    Divisor::from_terms(g, terms).expect("vertices lie on the graph")
}

/// Pushes a divisor on the cover's source forward to its target.
pub fn pushforward<'c>(c: &'c DecoratedCover, d: &Divisor<'_>) -> Result<Divisor<'c>, DivisorError> {
    if !(core::ptr::eq(d.graph, c.source()) || d.graph == c.source()) {
        return Err(DivisorError::GraphMismatch);
    }
    let terms: Vec<(GraphPoint, i64)> = d.support.iter().map(|(&p, &k)| (c.map_point(p), k)).collect();
    Divisor::from_terms(c.target(), terms)
}
