//! Exact model of the tree of closed balls in the Berkovich projective line.
//!
//! Valuations are additive (`v = -log|.|`), so a larger radius `ρ` is a
//! smaller ball. Points of the line are labels in an [`UltrametricPointSet`];
//! a type II/III point is a [`BallPoint`] `η(a, ρ)`. Polynomials are given
//! by their leading valuation and their roots among the labels.

pub mod tower;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::cover::{CoverError, CoverParts, DecoratedCover, Violation};
use crate::metric_graph::{Edge, EdgeId, GraphError, Germ, GraphPoint, MetricGraph, Vertex, VertexId, VertexKind};
use crate::rational::{q, Ext, Q};

/// Name of the point at infinity in generated graphs.
pub const INFINITY: &str = "inf";

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("point set is empty")]
    Empty,
    #[error("duplicate or reserved label {0:?}")]
    BadLabel(String),
    #[error("valuation matrix is not square of the label count")]
    Shape,
    #[error("v({0}, {0}) must be infinite")]
    Diagonal(String),
    #[error("v({0}, {1}) is infinite for distinct points")]
    Coincident(String, String),
    #[error("v({0}, {1}) differs from v({1}, {0})")]
    NotSymmetric(String, String),
    #[error("ultrametric law fails on {0}, {1}, {2}")]
    NotUltrametric(String, String, String),
    #[error("unknown point index {0}")]
    UnknownIndex(usize),
    #[error("unknown point label {0:?}")]
    UnknownLabel(String),
    #[error("root multiplicity must be positive")]
    ZeroMultiplicity,
    #[error("base radius {base} exceeds the joining radius {join}")]
    BaseTooLarge { base: Q, join: Q },
    #[error("ball set has no root containing every point")]
    NoRoot,
    #[error("polynomial map needs positive degree")]
    ZeroDegree,
    #[error("fibers do not partition the source points: {0}")]
    FiberPartition(String),
    #[error("fiber over {label:?} has degree {degree}, expected {expected}")]
    FiberDegree { label: String, degree: u32, expected: u32 },
    #[error("target distance v({0}, {1}) depends on the chosen fiber point")]
    InconsistentTarget(String, String),
    #[error("image of {0} is not a vertex of the target tree")]
    ImageNotVertex(String),
    #[error("image of edge {0} is not an edge of the target tree")]
    ImageNotEdge(String),
    #[error("inseparable degree {insep} does not divide the local degree at {vertex}")]
    Insep { vertex: String, insep: u32 },
    #[error("residue characteristic divides the exponent {0}")]
    WildExponent(u32),
    #[error("germ is not at a ball vertex")]
    NotBall,
    #[error("generated tables violate the cover axioms")]
    Invalid(Vec<Violation>),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Cover(#[from] CoverError),
}

/// Finitely many labelled points with their pairwise valuations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UltrametricPointSet {
    labels: Vec<String>,
    val: Vec<Vec<Ext>>,
}

impl UltrametricPointSet {
    pub fn new(labels: Vec<String>, val: Vec<Vec<Ext>>) -> Result<Self, OracleError> {
        let n = labels.len();
        if n == 0 {
            return Err(OracleError::Empty);
        }
        let mut seen = BTreeSet::new();
        for l in &labels {
            if l == INFINITY || !seen.insert(l.as_str()) {
                return Err(OracleError::BadLabel(l.clone()));
            }
        }
        if val.len() != n || val.iter().any(|r| r.len() != n) {
            return Err(OracleError::Shape);
        }
        for i in 0..n {
            if !val[i][i].is_infinite() {
                return Err(OracleError::Diagonal(labels[i].clone()));
            }
            for j in 0..n {
                if i != j && val[i][j].is_infinite() {
                    return Err(OracleError::Coincident(labels[i].clone(), labels[j].clone()));
                }
                if val[i][j] != val[j][i] {
                    return Err(OracleError::NotSymmetric(labels[i].clone(), labels[j].clone()));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if val[i][k] < val[i][j].min(val[j][k]) {
                        return Err(OracleError::NotUltrametric(
                            labels[i].clone(),
                            labels[j].clone(),
                            labels[k].clone(),
                        ));
                    }
                }
            }
        }
        Ok(UltrametricPointSet { labels, val })
    }

    /// Builds the matrix from a function on unordered pairs `i < j`.
    pub fn from_fn(labels: Vec<String>, mut f: impl FnMut(usize, usize) -> Q) -> Result<Self, OracleError> {
        let n = labels.len();
        let mut val = vec![vec![Ext::Infinite; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let v = Ext::Finite(f(i, j));
                val[i][j] = v;
                val[j][i] = v;
            }
        }
        Self::new(labels, val)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn val(&self, i: usize, j: usize) -> Ext {
        self.val[i][j]
    }

    fn check(&self, i: usize) -> Result<(), OracleError> {
        if i < self.len() {
            Ok(())
        } else {
            Err(OracleError::UnknownIndex(i))
        }
    }

    /// Smallest finite pairwise valuation, or 0 for a single point.
    pub fn min_join(&self) -> Q {
        let mut m: Option<Q> = None;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                if let Ext::Finite(v) = self.val[i][j] {
                    m = Some(m.map_or(v, |x| x.min(v)));
                }
            }
        }
        m.unwrap_or_else(|| q(0))
    }

    /// Whether the point `i` lies in the closed ball `b`.
    pub fn in_ball(&self, b: BallPoint, i: usize) -> bool {
        self.val[b.center][i] >= Ext::Finite(b.radius)
    }

    /// `b` with its center replaced by the smallest index inside it.
    pub fn canonical(&self, b: BallPoint) -> BallPoint {
        let center = (0..self.len()).find(|&i| self.in_ball(b, i)).expect("center lies in its ball");
        BallPoint { center, radius: b.radius }
    }

    pub fn ball_label(&self, b: BallPoint) -> String {
        let b = self.canonical(b);
        format!("B({},{})", self.labels[b.center], crate::rational::DisplayQ(b.radius))
    }
}

/// `v(c) + Σ m (T - α)`; the roots are point indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactoredPolynomial {
    pub leading_valuation: Q,
    pub roots: Vec<(usize, u32)>,
}

impl FactoredPolynomial {
    pub fn constant(leading_valuation: Q) -> Self {
        FactoredPolynomial { leading_valuation, roots: Vec::new() }
    }

    pub fn degree(&self) -> u32 {
        self.roots.iter().map(|&(_, m)| m).sum()
    }

    fn check(&self, set: &UltrametricPointSet) -> Result<(), OracleError> {
        for &(a, m) in &self.roots {
            set.check(a)?;
            if m == 0 {
                return Err(OracleError::ZeroMultiplicity);
            }
        }
        Ok(())
    }
}

/// The point `η(a, ρ)`: the closed ball around `a` of valuation radius `ρ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BallPoint {
    pub center: usize,
    pub radius: Q,
}

impl BallPoint {
    pub fn new(center: usize, radius: Q) -> Self {
        BallPoint { center, radius }
    }
}

/// `v(f(η(a, ρ))) = v(c) + Σ m min(v(a - α), ρ)`.
pub fn ball_valuation(set: &UltrametricPointSet, f: &FactoredPolynomial, b: BallPoint) -> Result<Q, OracleError> {
    set.check(b.center)?;
    f.check(set)?;
    let mut total = f.leading_valuation;
    for &(a, m) in &f.roots {
        let d = match set.val(b.center, a) {
            Ext::Finite(v) => v.min(b.radius),
            Ext::Infinite => b.radius,
        };
        total += d * q(m as i64);
    }
    Ok(total)
}

/// Roots of `f`, with multiplicity, in the closed ball `b`.
pub fn zeros_in_ball(set: &UltrametricPointSet, f: &FactoredPolynomial, b: BallPoint) -> Result<u32, OracleError> {
    set.check(b.center)?;
    f.check(set)?;
    Ok(f.roots.iter().filter(|&&(a, _)| set.in_ball(b, a)).map(|&(_, m)| m).sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum TreeNode {
    Ball(BallPoint),
    Point(usize),
    Infinity,
}

/// A finite subtree of the line spanned by a point set, subdivided at a set
/// of balls, with a puncture ray to every point. Edges run from the larger
/// ball to the smaller one; the ray to infinity runs from the root.
#[derive(Clone, Debug)]
pub struct BallTree {
    pub graph: MetricGraph,
    pub nodes: Vec<TreeNode>,
    pub root: VertexId,
    lookup: BTreeMap<TreeNode, VertexId>,
}

impl BallTree {
    pub fn node(&self, v: VertexId) -> TreeNode {
        self.nodes[v.index()]
    }

    /// Vertex of a canonical node.
    pub fn vertex_of(&self, n: TreeNode) -> Option<VertexId> {
        self.lookup.get(&n).copied()
    }

    pub fn balls(&self) -> impl Iterator<Item = (VertexId, BallPoint)> + '_ {
        self.nodes.iter().enumerate().filter_map(|(i, n)| match *n {
            TreeNode::Ball(b) => Some((VertexId(i as u32), b)),
            _ => None,
        })
    }
}

/// The root ball `η(a_0, base)` and every joining ball `η(a_i, v(a_i - a_j))`.
pub fn joining_balls(set: &UltrametricPointSet, base: Q) -> Result<BTreeSet<BallPoint>, OracleError> {
    let mut out = BTreeSet::new();
    out.insert(set.canonical(BallPoint::new(0, base)));
    for i in 0..set.len() {
        for j in 0..set.len() {
            if let (true, Ext::Finite(v)) = (i != j, set.val(i, j)) {
                if v < base {
                    return Err(OracleError::BaseTooLarge { base, join: v });
                }
                out.insert(set.canonical(BallPoint::new(i, v)));
            }
        }
    }
    Ok(out)
}

/// The tree spanned by `set` rooted at `η(a_0, base)`, without the ray to
/// infinity.
pub fn ball_tree(set: &UltrametricPointSet, base: Q) -> Result<BallTree, OracleError> {
    tree_with_balls(set, &joining_balls(set, base)?, false)
}

/// [`ball_tree`] plus the ray from the root to infinity.
pub fn projective_ball_tree(set: &UltrametricPointSet, base: Q) -> Result<BallTree, OracleError> {
    tree_with_balls(set, &joining_balls(set, base)?, true)
}

/// The tree on the given balls; the joining balls of the points are added
/// below the smallest radius in `balls`.
pub fn tree_with_balls(
    set: &UltrametricPointSet,
    balls: &BTreeSet<BallPoint>,
    infinity: bool,
) -> Result<BallTree, OracleError> {
    let base = balls.iter().map(|b| b.radius).min().ok_or(OracleError::NoRoot)?;
    let mut all: BTreeSet<BallPoint> = joining_balls(set, base)?;
    for &b in balls {
        set.check(b.center)?;
        all.insert(set.canonical(b));
    }
    let mut order: Vec<BallPoint> = all.into_iter().collect();
    order.sort_by(|a, b| a.radius.cmp(&b.radius).then(a.center.cmp(&b.center)));
    let root = order[0];
    if (0..set.len()).any(|i| !set.in_ball(root, i)) || order[1..].iter().any(|b| b.radius == root.radius) {
        return Err(OracleError::NoRoot);
    }

    let mut nodes: Vec<TreeNode> = order.iter().map(|&b| TreeNode::Ball(b)).collect();
    nodes.extend((0..set.len()).map(TreeNode::Point));
    if infinity {
        nodes.push(TreeNode::Infinity);
    }
    let name = |n: TreeNode| match n {
        TreeNode::Ball(b) => set.ball_label(b),
        TreeNode::Point(i) => String::from(set.label(i)),
        TreeNode::Infinity => String::from(INFINITY),
    };
    let vertices: Vec<Vertex> = nodes
        .iter()
        .map(|&n| Vertex {
            name: name(n),
            genus: 0,
            kind: if matches!(n, TreeNode::Ball(_)) { VertexKind::Skeletal } else { VertexKind::Puncture },
        })
        .collect();

    // parent of a ball is the largest-radius ball strictly containing it
    let innermost = |c: usize, below: Option<Q>| -> Option<usize> {
        (0..order.len())
            .filter(|&k| set.in_ball(order[k], c) && below.is_none_or(|r| order[k].radius < r))
            .max_by(|&a, &b| order[a].radius.cmp(&order[b].radius))
    };
    let mut edges = Vec::new();
    for (k, b) in order.iter().enumerate().skip(1) {
        let p = innermost(b.center, Some(b.radius)).expect("the root contains every ball");
        edges.push(Edge {
            name: format!("{}>{}", vertices[p].name, vertices[k].name),
            tail: VertexId(p as u32),
            head: VertexId(k as u32),
            length: Ext::Finite(b.radius - order[p].radius),
        });
    }
    for i in 0..set.len() {
        let p = innermost(i, None).expect("the root contains every point");
        let v = order.len() + i;
        edges.push(Edge {
            name: format!("{}>{}", vertices[p].name, vertices[v].name),
            tail: VertexId(p as u32),
            head: VertexId(v as u32),
            length: Ext::Infinite,
        });
    }
    if infinity {
        let v = nodes.len() - 1;
        edges.push(Edge {
            name: format!("{}>{}", vertices[0].name, INFINITY),
            tail: VertexId(0),
            head: VertexId(v as u32),
            length: Ext::Infinite,
        });
    }
    let lookup = nodes.iter().enumerate().map(|(i, &n)| (n, VertexId(i as u32))).collect();
    Ok(BallTree { graph: MetricGraph::new(vertices, edges)?, nodes, root: VertexId(0), lookup })
}

/// Slope of `ρ ↦ v(f)` along a germ at a ball vertex, per unit of length
/// travelled: the root count of the direction going down, minus the root
/// count of the closed ball going up.
pub fn germ_slope(
    tree: &BallTree,
    set: &UltrametricPointSet,
    f: &FactoredPolynomial,
    germ: Germ,
) -> Result<i64, OracleError> {
    f.check(set)?;
    let b = match germ.base {
        GraphPoint::Vertex(v) => match tree.node(v) {
            TreeNode::Ball(b) => b,
            _ => return Err(OracleError::NotBall),
        },
        GraphPoint::Interior { .. } => return Err(OracleError::NotBall),
    };
    let e = tree.graph.edge(germ.edge);
    let up = !germ.forward || tree.node(e.head) == TreeNode::Infinity;
    if up {
        return Ok(-(zeros_in_ball(set, f, b)? as i64));
    }
    let towards = match tree.node(e.head) {
        TreeNode::Ball(c) => c.center,
        TreeNode::Point(i) => i,
        TreeNode::Infinity => unreachable!(),
    };
    let r = Ext::Finite(b.radius);
    Ok(f.roots.iter().filter(|&&(a, _)| set.val(towards, a) > r).map(|&(_, m)| m as i64).sum())
}

/// A polynomial map of the line given through its fibers over finitely many
/// target points: fiber `j` lists the roots of `φ - y_j` with multiplicity.
/// Every source point lies in exactly one fiber.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolynomialMap {
    pub source: UltrametricPointSet,
    pub leading_valuation: Q,
    pub fibers: Vec<(String, Vec<(usize, u32)>)>,
    pub residue_char: u32,
    /// Inseparable degree assigned to every vertex.
    pub insep: u32,
    /// Root radius of the source tree; defaults to the smallest joining
    /// radius.
    pub source_base: Option<Q>,
}

impl PolynomialMap {
    pub fn new(source: UltrametricPointSet, leading_valuation: Q, fibers: Vec<(String, Vec<(usize, u32)>)>) -> Self {
        PolynomialMap { source, leading_valuation, fibers, residue_char: 0, insep: 1, source_base: None }
    }

    pub fn degree(&self) -> u32 {
        self.fibers.first().map_or(0, |(_, f)| f.iter().map(|&(_, m)| m).sum())
    }

    /// `φ - y_j` as a factored polynomial on the source.
    pub fn polynomial(&self, j: usize) -> FactoredPolynomial {
        FactoredPolynomial { leading_valuation: self.leading_valuation, roots: self.fibers[j].1.clone() }
    }

    /// Fiber index and multiplicity of each source point.
    pub fn fiber_table(&self) -> Result<Vec<(usize, u32)>, OracleError> {
        let d = self.degree();
        if d == 0 {
            return Err(OracleError::ZeroDegree);
        }
        let mut table: Vec<Option<(usize, u32)>> = vec![None; self.source.len()];
        for (j, (label, roots)) in self.fibers.iter().enumerate() {
            let degree: u32 = roots.iter().map(|&(_, m)| m).sum();
            if degree != d {
                return Err(OracleError::FiberDegree { label: label.clone(), degree, expected: d });
            }
            for &(a, m) in roots {
                self.source.check(a)?;
                if m == 0 {
                    return Err(OracleError::ZeroMultiplicity);
                }
                if table[a].replace((j, m)).is_some() {
                    return Err(OracleError::FiberPartition(format!("{} lies in two fibers", self.source.label(a))));
                }
            }
        }
        table
            .into_iter()
            .enumerate()
            .map(|(a, t)| t.ok_or_else(|| OracleError::FiberPartition(format!("{} lies in no fiber", self.source.label(a)))))
            .collect()
    }

    /// Target points with `v(y_i - y_j) = v(φ(α) - y_j)` for any `α` over
    /// `y_i`; every choice of `α` must agree.
    pub fn target_points(&self) -> Result<UltrametricPointSet, OracleError> {
        self.fiber_table()?;
        let labels: Vec<String> = self.fibers.iter().map(|(l, _)| l.clone()).collect();
        let n = labels.len();
        let mut val = vec![vec![Ext::Infinite; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let mut seen: Option<Q> = None;
                for &(alpha, _) in &self.fibers[i].1 {
                    let mut v = self.leading_valuation;
                    for &(beta, m) in &self.fibers[j].1 {
                        match self.source.val(alpha, beta) {
                            Ext::Finite(x) => v += x * q(m as i64),
                            Ext::Infinite => unreachable!("fibers are disjoint"),
                        }
                    }
                    if seen.is_some_and(|s| s != v) {
                        return Err(OracleError::InconsistentTarget(labels[i].clone(), labels[j].clone()));
                    }
                    seen = Some(v);
                }
                val[i][j] = Ext::Finite(seen.expect("fibers are nonempty"));
            }
        }
        UltrametricPointSet::new(labels, val)
    }

    fn source_base(&self) -> Q {
        self.source_base.unwrap_or_else(|| self.source.min_join())
    }

    /// `φ(η(a, ρ)) = η(φ(a), v(φ - φ(a))(η(a, ρ)))`.
    pub fn image(&self, b: BallPoint) -> Result<BallPoint, OracleError> {
        let table = self.fiber_table()?;
        self.source.check(b.center)?;
        let (j, _) = table[b.center];
        Ok(BallPoint::new(j, ball_valuation(&self.source, &self.polynomial(j), b)?))
    }

    /// The source balls over the target ball `η(y_j, σ)`: for each root `β`
    /// of `φ - y_j`, the unique `ρ` with `v(φ - y_j)(η(β, ρ)) = σ`.
    pub fn preimage(&self, y: BallPoint) -> Result<BTreeSet<BallPoint>, OracleError> {
        if y.center >= self.fibers.len() {
            return Err(OracleError::UnknownIndex(y.center));
        }
        let f = self.polynomial(y.center);
        let mut out = BTreeSet::new();
        for &(beta, _) in &f.roots {
            let rho = solve_increasing(&self.source, &f, beta, y.radius);
            out.insert(self.source.canonical(BallPoint::new(beta, rho)));
        }
        Ok(out)
    }
}

/// Inverts `ρ ↦ v(f)(η(β, ρ))`, piecewise linear with slope at least the
/// multiplicity of the root `β`.
fn solve_increasing(set: &UltrametricPointSet, f: &FactoredPolynomial, beta: usize, sigma: Q) -> Q {
    let mut breaks: Vec<Q> = f
        .roots
        .iter()
        .filter_map(|&(a, _)| match set.val(beta, a) {
            Ext::Finite(v) => Some(v),
            Ext::Infinite => None,
        })
        .collect();
    breaks.sort();
    breaks.dedup();
    let val = |rho: Q| ball_valuation(set, f, BallPoint::new(beta, rho)).expect("indices checked");
    let slope_above = |rho: Option<Q>| -> Q {
        let m: u32 = f
            .roots
            .iter()
            .filter(|&&(a, _)| rho.is_none_or(|r| set.val(beta, a) > Ext::Finite(r)))
            .map(|&(_, m)| m)
            .sum();
        q(m as i64)
    };
    // find the last breakpoint not above the solution
    let mut anchor: Option<Q> = None;
    for &t in &breaks {
        if val(t) <= sigma {
            anchor = Some(t);
        }
    }
    match anchor {
        // below every breakpoint the valuation is v(c) + deg * ρ
        None => (sigma - f.leading_valuation) / slope_above(None),
        Some(t) => t + (sigma - val(t)) / slope_above(Some(t)),
    }
}

/// A cover generated from a polynomial map, with the trees it lives on.
#[derive(Clone, Debug)]
pub struct InducedCover {
    pub cover: DecoratedCover,
    pub source_points: UltrametricPointSet,
    pub target_points: UltrametricPointSet,
    pub source_tree: BallTree,
    pub target_tree: BallTree,
    /// Skeletal source vertices whose residue map ramifies in directions
    /// off the tree, with the missing order; nonzero exactly when a branch
    /// value was left unmarked.
    pub hidden_ramification: Vec<(VertexId, u32)>,
    /// Source vertices where the residue characteristic divides a local
    /// separable index.
    pub wild: Vec<VertexId>,
}

/// Builds the cover of tree skeleta induced by `map`.
///
/// The target tree is subdivided at its joining balls and at the images of
/// the source joining balls; the source tree at the full preimage of that
/// set. Ramification and local degrees are root counts of `φ - φ(a)` in
/// closed balls. The result is run through [`DecoratedCover::validate`].
pub fn induced_cover(map: &PolynomialMap) -> Result<InducedCover, OracleError> {
    let table = map.fiber_table()?;
    let d = map.degree();
    let src = &map.source;
    let tgt = map.target_points()?;
    let base_src = map.source_base();
    let base_tgt = map.leading_valuation + q(d as i64) * base_src;

    let mut target_balls = joining_balls(&tgt, base_tgt)?;
    for b in joining_balls(src, base_src)? {
        target_balls.insert(tgt.canonical(map.image(b)?));
    }
    let mut source_balls = BTreeSet::new();
    for &y in &target_balls {
        source_balls.extend(map.preimage(y)?);
    }
    let target_tree = tree_with_balls(&tgt, &target_balls, true)?;
    let source_tree = tree_with_balls(src, &source_balls, true)?;
    let s = &source_tree.graph;
    let t = &target_tree.graph;

    let local_at = |n: TreeNode| -> Result<u32, OracleError> {
        Ok(match n {
            TreeNode::Ball(b) => zeros_in_ball(src, &map.polynomial(table[b.center].0), b)?,
            TreeNode::Point(i) => table[i].1,
            TreeNode::Infinity => d,
        })
    };
    let mut vertex_map = Vec::with_capacity(s.vertex_count());
    let mut local_degree = Vec::with_capacity(s.vertex_count());
    for v in s.vertex_ids() {
        let n = source_tree.node(v);
        let img = match n {
            TreeNode::Ball(b) => TreeNode::Ball(tgt.canonical(map.image(b)?)),
            TreeNode::Point(i) => TreeNode::Point(table[i].0),
            TreeNode::Infinity => TreeNode::Infinity,
        };
        vertex_map.push(target_tree.vertex_of(img).ok_or_else(|| OracleError::ImageNotVertex(s.vertex(v).name.clone()))?);
        local_degree.push(local_at(n)?);
    }

    let by_ends: BTreeMap<(VertexId, VertexId), EdgeId> = t.edges().map(|(id, e)| ((e.tail, e.head), id)).collect();
    let mut edge_map = Vec::with_capacity(s.edge_count());
    let mut ram = Vec::with_capacity(s.edge_count());
    for (_, e) in s.edges() {
        let key = (vertex_map[e.tail.index()], vertex_map[e.head.index()]);
        edge_map.push(*by_ends.get(&key).ok_or_else(|| OracleError::ImageNotEdge(e.name.clone()))?);
        ram.push(local_at(source_tree.node(e.head))?);
    }

    let insep = map.insep.max(1);
    let mut sep_degree = Vec::with_capacity(s.vertex_count());
    let mut ram_div_degree = Vec::with_capacity(s.vertex_count());
    let mut puncture_ram = BTreeMap::new();
    for (v, vx) in s.vertices() {
        let ld = local_degree[v.index()];
        if ld % insep != 0 {
            return Err(OracleError::Insep { vertex: vx.name.clone(), insep });
        }
        let sep = ld / insep;
        sep_degree.push(sep);
        // residue curves are lines, so local Riemann-Hurwitz forces 2 sep - 2
        ram_div_degree.push(if vx.kind == VertexKind::Skeletal { 2 * sep - 2 } else { 0 });
        if vx.kind == VertexKind::Puncture {
            puncture_ram.insert(v, ld);
        }
    }

    let p = map.residue_char;
    let mut hidden = Vec::new();
    let mut wild = Vec::new();
    for (v, vx) in s.vertices() {
        let sep = sep_degree[v.index()];
        let mut is_wild = p != 0 && sep % p == 0;
        let mut on_tree = 0u32;
        for &(e, _) in s.edge_ends(v) {
            let r = ram[e.index()];
            let idx = if r % insep == 0 { r / insep } else { r };
            is_wild |= p != 0 && idx % p == 0;
            on_tree += idx.saturating_sub(1);
        }
        if is_wild {
            wild.push(v);
        } else if vx.kind == VertexKind::Skeletal && 2 * sep - 2 > on_tree {
            hidden.push((v, 2 * sep - 2 - on_tree));
        }
    }

    let n = s.vertex_count();
    let parts = CoverParts {
        source: s.clone(),
        target: t.clone(),
        vertex_map,
        edge_map,
        ram,
        local_degree,
        insep_degree: vec![insep; n],
        sep_degree,
        ram_div_degree,
        puncture_ram,
        residue_char: p,
    };
    let cover = DecoratedCover::new(parts)?;
    let violations = cover.validate();
    if !violations.is_empty() {
        return Err(OracleError::Invalid(violations));
    }
    Ok(InducedCover {
        cover,
        source_points: src.clone(),
        target_points: tgt,
        source_tree,
        target_tree,
        hidden_ramification: hidden,
        wild,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genus_audit::{global_rh_audit, local_rh_lines, WildOrders};
    use crate::rational::frac;

    fn labels(ls: &[&str]) -> Vec<String> {
        ls.iter().map(|s| String::from(*s)).collect()
    }

    /// `{0, 1}` with `v(0 - 1) = 0`.
    fn zero_one() -> UltrametricPointSet {
        UltrametricPointSet::from_fn(labels(&["0", "1"]), |_, _| q(0)).unwrap()
    }

    /// `{0, 1, t}` with `v(t) = 1`.
    fn zero_one_t() -> UltrametricPointSet {
        UltrametricPointSet::from_fn(labels(&["0", "1", "t"]), |i, j| if (i, j) == (0, 2) { q(1) } else { q(0) }).unwrap()
    }

    fn t_times_t_minus_one() -> FactoredPolynomial {
        FactoredPolynomial { leading_valuation: q(0), roots: vec![(0, 1), (1, 1)] }
    }

    #[test]
    fn ball_valuation_examples() {
        let s = zero_one();
        let f = t_times_t_minus_one();
        assert_eq!(ball_valuation(&s, &f, BallPoint::new(0, q(2))).unwrap(), q(2));
        assert_eq!(ball_valuation(&s, &f, BallPoint::new(0, q(0))).unwrap(), q(0));
        assert_eq!(ball_valuation(&s, &f, BallPoint::new(0, q(-1))).unwrap(), q(-2));
        let c = FactoredPolynomial::constant(frac(3, 2));
        for r in [-3, 0, 5] {
            assert_eq!(ball_valuation(&s, &c, BallPoint::new(1, q(r))).unwrap(), frac(3, 2));
        }
        assert_eq!(ball_valuation(&s, &f, BallPoint::new(7, q(0))), Err(OracleError::UnknownIndex(7)));
    }

    #[test]
    fn zeros_in_ball_examples() {
        let s = zero_one();
        let f = t_times_t_minus_one();
        assert_eq!(zeros_in_ball(&s, &f, BallPoint::new(0, frac(1, 2))).unwrap(), 1);
        assert_eq!(zeros_in_ball(&s, &f, BallPoint::new(0, q(0))).unwrap(), 2);
        let g = FactoredPolynomial { leading_valuation: q(0), roots: vec![(1, 1)] };
        assert_eq!(zeros_in_ball(&s, &g, BallPoint::new(0, q(1))).unwrap(), 0);
    }

    #[test]
    fn rejects_bad_matrices() {
        let l = labels(&["a", "b", "c"]);
        // v(a-b) = 0, v(b-c) = 0, v(a-c) = -1 breaks the ultrametric law
        let r = UltrametricPointSet::from_fn(l.clone(), |i, j| if (i, j) == (0, 2) { q(-1) } else { q(0) });
        assert!(matches!(r, Err(OracleError::NotUltrametric(..))));
        let mut m = vec![vec![Ext::Infinite; 3]; 3];
        m[0][1] = Ext::Finite(q(1));
        m[1][0] = Ext::Finite(q(2));
        assert!(matches!(UltrametricPointSet::new(l.clone(), m), Err(OracleError::NotSymmetric(..))));
        assert!(matches!(UltrametricPointSet::new(labels(&["a", "a"]), vec![vec![Ext::Infinite; 2]; 2]), Err(OracleError::BadLabel(_))));
        assert_eq!(UltrametricPointSet::new(Vec::new(), Vec::new()), Err(OracleError::Empty));
    }

    #[test]
    fn single_point_tree_is_a_ray() {
        let s = UltrametricPointSet::new(labels(&["a"]), vec![vec![Ext::Infinite]]).unwrap();
        let t = ball_tree(&s, q(0)).unwrap();
        assert_eq!(t.graph.vertex_count(), 2);
        assert_eq!(t.graph.edge_count(), 1);
        assert_eq!(t.graph.edge(EdgeId(0)).length, Ext::Infinite);
        assert_eq!(t.graph.genus(), 0);
    }

    #[test]
    fn three_point_tree() {
        let s = zero_one_t();
        let t = ball_tree(&s, q(0)).unwrap();
        let names: Vec<&str> = t.graph.vertices().map(|(_, v)| v.name.as_str()).collect();
        assert_eq!(names, ["B(0,0)", "B(0,1)", "0", "1", "t"]);
        let edges: Vec<(String, Ext)> = t.graph.edges().map(|(_, e)| (e.name.clone(), e.length)).collect();
        assert_eq!(
            edges,
            [
                ("B(0,0)>B(0,1)".into(), Ext::Finite(q(1))),
                ("B(0,1)>0".into(), Ext::Infinite),
                ("B(0,0)>1".into(), Ext::Infinite),
                ("B(0,1)>t".into(), Ext::Infinite),
            ]
        );
        assert!(matches!(ball_tree(&s, q(1)), Err(OracleError::BaseTooLarge { .. })));
        let lower = ball_tree(&s, q(-2)).unwrap();
        assert_eq!(lower.graph.vertex_count(), 6);
    }

    #[test]
    fn slopes_balance_on_the_projective_tree() {
        let s = zero_one_t();
        let f = FactoredPolynomial { leading_valuation: q(3), roots: vec![(0, 2), (1, 1), (2, 4)] };
        let tree = projective_ball_tree(&s, q(-1)).unwrap();
        for (v, _) in tree.balls() {
            let germs = tree.graph.tangent_germs(GraphPoint::Vertex(v)).unwrap();
            let total: i64 = germs.iter().map(|&g| germ_slope(&tree, &s, &f, g).unwrap()).sum();
            assert_eq!(total, 0, "at {}", tree.graph.vertex(v).name);
        }
        // the ray to infinity carries slope minus the degree
        let root = GraphPoint::Vertex(tree.root);
        let inf = tree.graph.edge_by_name("B(0,-1)>inf").unwrap();
        assert_eq!(germ_slope(&tree, &s, &f, Germ { base: root, edge: inf, forward: true }).unwrap(), -7);
    }

    #[test]
    fn identity_map_gives_identity_cover() {
        let s = zero_one_t();
        let map = PolynomialMap::new(s.clone(), q(0), vec![("0".into(), vec![(0, 1)]), ("1".into(), vec![(1, 1)]), ("t".into(), vec![(2, 1)])]);
        let ic = induced_cover(&map).unwrap();
        assert_eq!(ic.target_points, s);
        assert_eq!(ic.cover.global_degree().unwrap(), 1);
        assert_eq!(ic.cover.source(), ic.cover.target());
        assert!(ic.cover.vertex_fibers().iter().all(|f| f.len() == 1));
        assert!(ic.hidden_ramification.is_empty());
    }

    /// `T^2` over `{0, s, -s}` with `v(s) = 1/2`, targets `{0, t}` with `t = s^2`.
    fn square_map(base: Option<Q>) -> PolynomialMap {
        let src = UltrametricPointSet::from_fn(labels(&["0", "s", "-s"]), |_, _| frac(1, 2)).unwrap();
        let mut m = PolynomialMap::new(src, q(0), vec![("0".into(), vec![(0, 2)]), ("t".into(), vec![(1, 1), (2, 1)])]);
        m.source_base = base;
        m
    }

    #[test]
    fn squaring_folds_the_zero_ray() {
        let ic = induced_cover(&square_map(Some(q(0)))).unwrap();
        let c = &ic.cover;
        let s = c.source();
        assert_eq!(ic.target_points.val(0, 1), Ext::Finite(q(1)));
        assert_eq!(c.global_degree().unwrap(), 2);
        let e = |n: &str| s.edge_by_name(n).unwrap();
        let v = |n: &str| s.vertex_by_name(n).unwrap();
        assert_eq!(c.ram(e("B(0,1/2)>0")), 2);
        assert_eq!(c.ram(e("B(0,0)>inf")), 2);
        assert_eq!(c.ram(e("B(0,1/2)>s")), 1);
        // the finite edge is halved
        let fin = e("B(0,0)>B(0,1/2)");
        assert_eq!(c.ram(fin), 2);
        assert_eq!(s.edge(fin).length, Ext::Finite(frac(1, 2)));
        assert_eq!(c.target().edge(c.edge_map(fin)).length, Ext::Finite(q(1)));
        assert_eq!(c.local_degree(v("B(0,0)")), 2);
        assert_eq!(c.local_degree(v("B(0,1/2)")), 2);
        assert!(ic.hidden_ramification.is_empty());
        assert_eq!(global_rh_audit(c, &WildOrders::new()).unwrap().line.residual(), 0);
        assert!(local_rh_lines(c).iter().all(|l| l.holds()));
    }

    #[test]
    fn unmarked_branch_value_is_reported() {
        // T(T - 1): the critical value -1/4 is off the tree
        let map = PolynomialMap::new(zero_one(), q(0), vec![("0".into(), vec![(0, 1), (1, 1)])]);
        let ic = induced_cover(&map).unwrap();
        assert_eq!(ic.hidden_ramification, vec![(VertexId(0), 1)]);
        assert_eq!(global_rh_audit(&ic.cover, &WildOrders::new()).unwrap().line.residual(), 1);
    }

    #[test]
    fn frobenius_cube_in_characteristic_three() {
        let mut map = PolynomialMap::new(zero_one(), q(0), vec![("0".into(), vec![(0, 3)]), ("1".into(), vec![(1, 3)])]);
        map.residue_char = 3;
        map.insep = 3;
        let ic = induced_cover(&map).unwrap();
        let c = &ic.cover;
        assert!(c.is_valid());
        let ray = c.source().edge_by_name("B(0,0)>0").unwrap();
        assert_eq!(c.ram(ray), 3);
        assert_eq!(c.sep_degree(VertexId(0)), 1);
        assert!(ic.wild.is_empty());
        assert!(local_rh_lines(c).iter().all(|l| l.holds()));
        assert!(global_rh_audit(c, &WildOrders::new()).is_err());

        map.insep = 1;
        let ic = induced_cover(&map).unwrap();
        assert_eq!(ic.wild.len(), ic.cover.source().vertex_count());
        map.insep = 2;
        assert!(matches!(induced_cover(&map), Err(OracleError::Insep { .. })));
    }

    #[test]
    fn inconsistent_fibers_are_rejected() {
        let src = UltrametricPointSet::from_fn(labels(&["a", "b", "c"]), |i, j| if (i, j) == (0, 1) { q(1) } else { q(0) }).unwrap();
        // v(y0 - y1) would be 1 from a's side and 0 from b's side
        let map = PolynomialMap::new(src.clone(), q(0), vec![("y0".into(), vec![(0, 1), (1, 1)]), ("y1".into(), vec![(2, 2)])]);
        assert!(map.target_points().is_ok());
        let map = PolynomialMap::new(src.clone(), q(0), vec![("y0".into(), vec![(0, 1), (2, 1)]), ("y1".into(), vec![(1, 2)])]);
        assert!(matches!(map.target_points(), Err(OracleError::InconsistentTarget(..))));
        let map = PolynomialMap::new(src, q(0), vec![("y0".into(), vec![(0, 1)]), ("y1".into(), vec![(1, 2)])]);
        assert!(matches!(map.fiber_table(), Err(OracleError::FiberDegree { .. })));
    }

    #[test]
    fn preimages_invert_images() {
        let m = square_map(Some(q(-1)));
        for b in [BallPoint::new(0, q(-1)), BallPoint::new(1, frac(1, 2)), BallPoint::new(2, q(3))] {
            let img = m.image(b).unwrap();
            assert!(m.preimage(img).unwrap().contains(&m.source.canonical(b)));
        }
        assert_eq!(m.image(BallPoint::new(1, q(3))).unwrap(), BallPoint::new(1, frac(7, 2)));
    }
}
