//! Decorated covers of finite metric graphs.
//!
//! The crate models a finite morphism of skeleta as a [`DecoratedCover`]:
//! a graph map carrying edge ramification, local degrees and the
//! separable/inseparable split of each residue extension. On top of that it
//! provides divisors, genus and Riemann-Hurwitz audits, retraction flows and
//! the compatible-skeleton construction, Galois fiber checks, and an exact
//! tree-of-balls model of the projective line that generates covers from
//! factored polynomial maps.
//!
//! Everything is exact: lengths and valuations are rationals, `∞` is a
//! separate value.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cover;
pub mod divisor;
pub mod fixtures;
pub mod galois;
pub mod genus_audit;
pub mod group;
pub mod metric_graph;
pub mod pone_oracle;
#[cfg(any(test, feature = "random"))]
pub mod random;
pub mod rational;
pub mod retraction;

pub use cover::{CoverBuilder, CoverError, CoverParts, DecoratedCover, Violation};
pub use divisor::{canonical_graph_divisor, pushforward, Divisor};
pub use metric_graph::{
    Edge, EdgeId, GraphBuilder, GraphError, GraphPoint, Germ, MetricGraph, Vertex, VertexId, VertexKind,
};
pub use rational::{Ext, Q};
