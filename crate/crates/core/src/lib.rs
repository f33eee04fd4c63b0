//! Numerical laboratory for Hele-Shaw flow on conformal surfaces of the
//! unit disk.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod contour;
pub mod error;
pub mod expmap;
pub mod flow;
pub mod geodesics;
pub mod grid;
pub mod kernels;
pub mod korenblum;
pub mod num;
pub mod obstacle;
pub mod quadrature;
pub mod report;
pub mod surface;
pub mod svg;

pub use error::{LabError, Result};
pub use report::{CheckRow, VerificationReport};

/// Double-precision point of the closed disk.
pub type Point = kernels::DiskPoint<f64>;
pub type Weight = surface::WeightSpec<f64>;
pub type Profile = surface::RadialProfile<f64>;
pub type Field = grid::GridField<f64>;
pub type Snapshot = obstacle::FlowSnapshot<f64>;
pub type Solver = obstacle::FlowSolver<f64>;
pub type Chart = expmap::ExpMapChart<f64>;
pub type Path = geodesics::GeodesicPath<f64>;

/// Single-precision aliases.
pub mod f32 {
    pub type Point = crate::kernels::DiskPoint<f32>;
    pub type Weight = crate::surface::WeightSpec<f32>;
    pub type Field = crate::grid::GridField<f32>;
    pub type Snapshot = crate::obstacle::FlowSnapshot<f32>;
}
