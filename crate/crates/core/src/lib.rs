//! Vertex discrepancy over influence networks.
//!
//! A unit's expected complaint rate is the weighted mean of the rates of the
//! units that influence it; the discrepancy `d_i = x_i / y_i` measures how much
//! worse than expected the unit performs. The crate builds the influence
//! network from urban-relations tables, turns complaint and subscriber counts
//! into smoothed rates, ranks units for inspection and watches discrepancy
//! series with CUSUM.

pub mod cusum;
pub mod graph;
pub mod influence;
pub mod io;
pub mod numfmt;
pub mod pipeline;
pub mod ranking;
pub mod scalar;
pub mod scenario;

pub use graph::{
    Discrepancy, DiscrepancyValue, GraphBuilder, GraphError, GraphSignal, InfluenceGraph, VertexId,
};
pub use scalar::Scalar;

/// Exact rational scalar.
pub use num_rational::Rational64;

/// Production graph in 64-bit floating point.
pub type Graph = InfluenceGraph<f64>;
pub type Signal = GraphSignal<f64>;
pub type DiscrepancyF64 = DiscrepancyValue<f64>;
/// Graph with exact rational weights.
pub type ExactGraph = InfluenceGraph<Rational64>;
pub type GraphF32 = InfluenceGraph<f32>;
