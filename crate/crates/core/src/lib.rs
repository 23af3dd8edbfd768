//! Scalar-flat toric Kähler metrics on unbounded toric surfaces.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod chart;
pub mod corpus;
pub mod error;
pub mod exec;
pub mod fd;
pub mod harmonic;
pub mod oracles;
pub mod polygon;
pub mod potential;
pub mod quadrature;
pub mod specfile;

pub use chart::{solve_a, BoundaryImage, Chart};
pub use error::{Error, Result};
pub use exec::Execution;
pub use harmonic::{HalfPlanePoint, NutParameter, XiField, XiJet};
pub use polygon::{LatticeVector, MomentPolygon, PolygonClass};
pub use potential::{Hessian, MetricSample};
pub use specfile::PolygonSpec;
