//! The discretized necklace graph: grids, functions, and the Kirchhoff
//! Laplacian.

pub mod function;
pub mod grid;
pub mod operator;

pub use function::{l2_inner, l2_norm, ComplexGraphFunction, GraphFunction, GraphScalar, RealGraphFunction};
pub use grid::{Boundary, DofInfo, DofLocation, Edge, NecklaceGrid, Segment};
pub use operator::{
    apply_laplacian, apply_stiffness, kirchhoff_flux_residual, max_flux_residual,
    stiffness_tridiag, stiffness_triplets,
};
