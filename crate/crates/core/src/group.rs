//! Small permutation groups and the coset construction of harmonic covers
//! from a graph of subgroups.
//!
//! Given a target graph, a finite group `G`, a subgroup `H_v` per vertex, a
//! subgroup `H_e` per edge and a voltage `a_e` with
//! `H_e ⊆ H_tail ∩ a_e H_head a_e⁻¹`, the source has vertices `(v, gH_v)`
//! and edges `(e, gH_e)` from `(tail, gH_tail)` to `(head, g a_e H_head)`.
//! `G` acts on it by left multiplication; quotienting by a subgroup `K`
//! gives covers that are not Galois in general.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::cover::{CoverError, CoverParts, DecoratedCover};
use crate::galois::DeckTransformation;
use crate::metric_graph::{Edge, EdgeId, GraphError, MetricGraph, Vertex, VertexId, VertexKind};
use crate::rational::{q, Ext};

/// A finite group given by its elements as permutations of `0..degree`,
/// with element 0 the identity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGroup {
    perms: Vec<Vec<u32>>,
    mul: Vec<usize>,
    inv: Vec<usize>,
}

/// A subgroup as a sorted set of element indices.
pub type Subgroup = BTreeSet<usize>;

impl FiniteGroup {
    /// Closure of the generators in the symmetric group on `degree` points.
    pub fn generated(degree: u32, gens: &[Vec<u32>]) -> Self {
        let id: Vec<u32> = (0..degree).collect();
        let mut perms = vec![id.clone()];
        let mut index = BTreeMap::new();
        index.insert(id, 0usize);
        let mut i = 0;
        while i < perms.len() {
            for g in gens {
                let p: Vec<u32> = perms[i].iter().map(|&x| g[x as usize]).collect();
                if !index.contains_key(&p) {
                    index.insert(p.clone(), perms.len());
                    perms.push(p);
                }
            }
            i += 1;
        }
        let n = perms.len();
        let mut mul = vec![0; n * n];
        for a in 0..n {
            for b in 0..n {
                // (a * b)(x) = a(b(x))
                let p: Vec<u32> = perms[b].iter().map(|&x| perms[a][x as usize]).collect();
                mul[a * n + b] = index[&p];
            }
        }
        let inv = (0..n).map(|a| (0..n).find(|&b| mul[a * n + b] == 0).expect("finite group")).collect();
        FiniteGroup { perms, mul, inv }
    }

    pub fn cyclic(n: u32) -> Self {
        assert!(n >= 1);
        Self::generated(n, &[(0..n).map(|i| (i + 1) % n).collect()])
    }

    /// The symmetry group of the `n`-gon, of order `2n`.
    pub fn dihedral(n: u32) -> Self {
        assert!(n >= 3);
        let rot = (0..n).map(|i| (i + 1) % n).collect();
        let flip = (0..n).map(|i| (n - i) % n).collect();
        Self::generated(n, &[rot, flip])
    }

    pub fn symmetric(n: u32) -> Self {
        assert!(n >= 1);
        if n == 1 {
            return Self::generated(1, &[]);
        }
        let cycle = (0..n).map(|i| (i + 1) % n).collect();
        let mut swap: Vec<u32> = (0..n).collect();
        swap.swap(0, 1);
        Self::generated(n, &[cycle, swap])
    }

    pub fn order(&self) -> usize {
        self.perms.len()
    }

    pub fn perm(&self, a: usize) -> &[u32] {
        &self.perms[a]
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a * self.order() + b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inv[a]
    }

    pub fn trivial(&self) -> Subgroup {
        [0].into_iter().collect()
    }

    pub fn whole(&self) -> Subgroup {
        (0..self.order()).collect()
    }

    /// The subgroup generated by the given elements.
    pub fn subgroup(&self, gens: &[usize]) -> Subgroup {
        let mut h = self.trivial();
        let mut frontier = vec![0];
        while let Some(x) = frontier.pop() {
            for &g in gens {
                let y = self.mul(x, g);
                if h.insert(y) {
                    frontier.push(y);
                }
            }
        }
        h
    }

    /// Every subgroup generated by at most two elements, sorted by order
    /// then contents. This is every subgroup for the groups used here.
    pub fn subgroups(&self) -> Vec<Subgroup> {
        let n = self.order();
        let mut all = BTreeSet::new();
        for a in 0..n {
            for b in a..n {
                all.insert(self.subgroup(&[a, b]));
            }
        }
        let mut v: Vec<Subgroup> = all.into_iter().collect();
        v.sort_by(|x, y| x.len().cmp(&y.len()).then_with(|| x.cmp(y)));
        v
    }

    /// `a H a⁻¹`.
    pub fn conjugate(&self, h: &Subgroup, a: usize) -> Subgroup {
        h.iter().map(|&x| self.mul(self.mul(a, x), self.inv(a))).collect()
    }

    pub fn intersection(&self, a: &Subgroup, b: &Subgroup) -> Subgroup {
        a.intersection(b).copied().collect()
    }

    pub fn is_subgroup(&self, h: &Subgroup) -> bool {
        h.contains(&0) && h.iter().all(|&a| h.iter().all(|&b| h.contains(&self.mul(a, b))))
    }

    /// The left coset `gH`.
    pub fn left_coset(&self, g: usize, h: &Subgroup) -> BTreeSet<usize> {
        h.iter().map(|&x| self.mul(g, x)).collect()
    }

    /// The double coset `K g H`.
    pub fn double_coset(&self, k: &Subgroup, g: usize, h: &Subgroup) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for &a in k {
            for &b in h {
                out.insert(self.mul(self.mul(a, g), b));
            }
        }
        out
    }

    /// Representatives (smallest elements) of `K \ G / H`.
    pub fn double_coset_reps(&self, k: &Subgroup, h: &Subgroup) -> Vec<usize> {
        let mut seen = BTreeSet::new();
        let mut reps = Vec::new();
        for g in 0..self.order() {
            if seen.contains(&g) {
                continue;
            }
            let dc = self.double_coset(k, g, h);
            reps.push(g);
            seen.extend(dc);
        }
        reps
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum GroupCoverError {
    #[error("table sizes do not match the target graph")]
    Shape,
    #[error("{0} is not a subgroup")]
    NotSubgroup(String),
    #[error("edge {0:?}: its group is not contained in both endpoint groups")]
    EdgeGroup(String),
    #[error("puncture {0:?}: its group must equal the group of its ray")]
    PunctureGroup(String),
    #[error("voltage out of range")]
    Voltage,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Cover(#[from] CoverError),
}

/// Target graph decorated with the data of the coset construction.
#[derive(Clone, Debug)]
pub struct GraphOfGroups {
    pub target: MetricGraph,
    pub group: FiniteGroup,
    pub vertex_groups: Vec<Subgroup>,
    pub edge_groups: Vec<Subgroup>,
    pub voltages: Vec<usize>,
}

/// A generated cover and the deck transformations induced by the group
/// (empty after a nontrivial quotient).
#[derive(Clone, Debug)]
pub struct GroupCover {
    pub cover: DecoratedCover,
    pub deck: Vec<DeckTransformation>,
}

impl GraphOfGroups {
    pub fn check(&self) -> Result<(), GroupCoverError> {
        let t = &self.target;
        let g = &self.group;
        if self.vertex_groups.len() != t.vertex_count()
            || self.edge_groups.len() != t.edge_count()
            || self.voltages.len() != t.edge_count()
        {
            return Err(GroupCoverError::Shape);
        }
        for (v, vx) in t.vertices() {
            if !g.is_subgroup(&self.vertex_groups[v.index()]) {
                return Err(GroupCoverError::NotSubgroup(format!("group of {}", vx.name)));
            }
        }
        for (e, ex) in t.edges() {
            let he = &self.edge_groups[e.index()];
            let a = self.voltages[e.index()];
            if a >= g.order() {
                return Err(GroupCoverError::Voltage);
            }
            if !g.is_subgroup(he) {
                return Err(GroupCoverError::NotSubgroup(format!("group of {}", ex.name)));
            }
            let tail_ok = he.is_subset(&self.vertex_groups[ex.tail.index()]);
            let head_ok = he.is_subset(&g.conjugate(&self.vertex_groups[ex.head.index()], a));
            if !tail_ok || !head_ok {
                return Err(GroupCoverError::EdgeGroup(ex.name.clone()));
            }
            for end in [ex.tail, ex.head] {
                if t.kind(end) == VertexKind::Puncture && self.vertex_groups[end.index()].len() != he.len() {
                    return Err(GroupCoverError::PunctureGroup(t.vertex(end).name.clone()));
                }
            }
        }
        Ok(())
    }

    /// Source vertex genera making every local Riemann-Hurwitz line hold
    /// with tame ramification concentrated on the germs; `None` at a vertex
    /// where no genus works (the branching data has the wrong parity).
    fn consistent_genus(sep: u32, g_target: u32, germ_sum: i64) -> Option<(u32, u32)> {
        let rhs = sep as i64 * (2 * g_target as i64 - 2) + germ_sum;
        if rhs % 2 != 0 || rhs < -2 {
            return None;
        }
        Some((((rhs + 2) / 2) as u32, germ_sum as u32))
    }

    /// The cover `K \ (coset graph) -> target`. Decorations: `insep = 1`,
    /// `sep = local degree`, `R_{p'}` the tame germ contribution, and the
    /// source genus forced by the local Riemann-Hurwitz line.
    pub fn cover(&self, kernel: Option<&Subgroup>) -> Result<GroupCover, GroupCoverError> {
        self.check()?;
        let g = &self.group;
        let t = &self.target;
        let trivial = g.trivial();
        let k = kernel.unwrap_or(&trivial);
        if !g.is_subgroup(k) {
            return Err(GroupCoverError::NotSubgroup(String::from("kernel")));
        }

        // vertex classes K g H_v, keyed by their smallest element
        let mut vclass: Vec<BTreeMap<usize, usize>> = Vec::new();
        let mut vertices = Vec::new();
        let mut vmap = Vec::new();
        let mut local = Vec::new();
        for (v, vx) in t.vertices() {
            let h = &self.vertex_groups[v.index()];
            let mut m = BTreeMap::new();
            for r in g.double_coset_reps(k, h) {
                let dc = g.double_coset(k, r, h);
                let id = vertices.len();
                for &x in &dc {
                    m.insert(x, id);
                }
                let stab = g.intersection(k, &g.conjugate(h, r)).len();
                vertices.push(Vertex { name: format!("{}[{}]", vx.name, r), genus: 0, kind: vx.kind });
                vmap.push(v);
                local.push((h.len() / stab) as u32);
            }
            vclass.push(m);
        }

        let mut edges = Vec::new();
        let mut emap = Vec::new();
        let mut ram = Vec::new();
        let mut eclass: Vec<BTreeMap<usize, usize>> = Vec::new();
        for (e, ex) in t.edges() {
            let h = &self.edge_groups[e.index()];
            let a = self.voltages[e.index()];
            let mut m = BTreeMap::new();
            for r in g.double_coset_reps(k, h) {
                let id = edges.len();
                for x in g.double_coset(k, r, h) {
                    m.insert(x, id);
                }
                let stab = g.intersection(k, &g.conjugate(h, r)).len();
                let ramification = (h.len() / stab) as u32;
                let tail = vclass[ex.tail.index()][&r];
                let head = vclass[ex.head.index()][&g.mul(r, a)];
                let length = match ex.length {
                    Ext::Finite(l) => Ext::Finite(l / q(ramification as i64)),
                    Ext::Infinite => Ext::Infinite,
                };
                edges.push(Edge {
                    name: format!("{}[{}]", ex.name, r),
                    tail: VertexId(tail as u32),
                    head: VertexId(head as u32),
                    length,
                });
                emap.push(e);
                ram.push(ramification);
            }
            eclass.push(m);
        }

        // local Riemann-Hurwitz fixes the genus of each skeletal vertex
        let mut germ_sum = vec![0i64; vertices.len()];
        for (i, ex) in edges.iter().enumerate() {
            germ_sum[ex.tail.index()] += ram[i] as i64 - 1;
            germ_sum[ex.head.index()] += ram[i] as i64 - 1;
        }
        let mut ram_div = vec![0u32; vertices.len()];
        for (i, vx) in vertices.iter_mut().enumerate() {
            if vx.kind == VertexKind::Skeletal {
                let gt = t.vertex(vmap[i]).genus;
                let (genus, r) = Self::consistent_genus(local[i], gt, germ_sum[i]).ok_or_else(|| {
                    GroupCoverError::Cover(CoverError::Structure(format!("no residue genus fits {}", vx.name)))
                })?;
                vx.genus = genus;
                ram_div[i] = r;
            }
        }

        let source = MetricGraph::new(vertices, edges)?;
        let mut puncture_ram = BTreeMap::new();
        for (v, vx) in source.vertices() {
            if vx.kind == VertexKind::Puncture {
                puncture_ram.insert(v, local[v.index()]);
            }
        }
        let n = source.vertex_count();
        let parts = CoverParts {
            source,
            target: t.clone(),
            vertex_map: vmap,
            edge_map: emap,
            ram,
            insep_degree: vec![1; n],
            sep_degree: local.clone(),
            local_degree: local,
            ram_div_degree: ram_div,
            puncture_ram,
            residue_char: 0,
        };
        let cover = DecoratedCover::new(parts)?;

        let mut deck = Vec::new();
        if k.len() == 1 {
            for s in 0..g.order() {
                let mut dv = vec![VertexId(0); cover.source().vertex_count()];
                for m in &vclass {
                    for (&x, &id) in m {
                        dv[id] = VertexId(m[&g.mul(s, x)] as u32);
                    }
                }
                let mut de = vec![EdgeId(0); cover.source().edge_count()];
                for m in &eclass {
                    for (&x, &id) in m {
                        de[id] = EdgeId(m[&g.mul(s, x)] as u32);
                    }
                }
                deck.push(DeckTransformation { vertices: dv, edges: de });
            }
        }
        Ok(GroupCover { cover, deck })
    }
}
