//! Potts and random-cluster models on d-regular trees and random regular graphs.
//!
//! - [`bethe`]: Bethe fixed points, critical curves, region classification.
//! - [`treeexact`]: exact laws on finite tree balls with boundary conditions.
//! - [`oracle`]: brute-force enumeration of small instances.
//! - [`graphgen`]: random regular graphs, balls, surgery.
//! - [`sampler`]: Swendsen-Wang dynamics and estimators.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod bethe;
mod dsu;
mod error;
mod graph;
pub mod graphgen;
mod law;
pub mod oracle;
mod params;
pub mod sampler;
pub mod scalar;
mod tree;
pub mod treeexact;

pub use dsu::UnionFind;
pub use error::{Error, Result};
pub use graph::{BondConfig, GhostGraph, Graph, SpinConfig};
pub use law::{table_size, NeighborhoodLaw, LAW_TABLE_CAP};
pub use params::{Params, SymmetricMeasure};
pub use scalar::{Exact, Real};
pub use tree::{decode_pattern, encode_pattern, tree_size, TreeIndex, TREE_VERTEX_CAP};

pub type Params64 = Params<f64>;
pub type Params32 = Params<f32>;
pub type Measure64 = SymmetricMeasure<f64>;
pub type Measure32 = SymmetricMeasure<f32>;
pub type Law64 = NeighborhoodLaw<f64>;
pub type PhasePoint64 = bethe::PhasePoint<f64>;
/// Exact rational used for purely combinatorial laws.
pub type Rational = num_rational::Ratio<i128>;

/// Fixed 17-significant-digit rendering used in every CSV output.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}
