//! Spectral structure and breather-type waves of the semilinear Klein-Gordon
//! equation on the periodic necklace graph.
//!
//! The crate provides, in dependency order:
//!
//! - [`graph`]: the discretized metric graph, trapezoidal inner products, and
//!   the Kirchhoff Laplacian with flux-balancing vertex rows;
//! - [`spectrum`]: closed-form and monodromy-based Floquet-Bloch band
//!   structure with normalized cell eigenfunctions;
//! - [`bloch`]: the discrete Bloch transform (a unitary DFT over cells) and
//!   band-coefficient analysis;
//! - [`gapcheck`]: certificates that the shifted operators
//!   `L_k = -d^2/dx^2 - omega^2 k^2 + alpha` stay uniformly invertible over
//!   the odd harmonic lattice, and the minimal admissible antiperiod divisor;
//! - [`solver`]: a time-Fourier Galerkin discretization, the indefinite
//!   action functional with its generalized Nehari minimization, and a damped
//!   Newton alternative;
//! - [`timesim`]: leapfrog time integration of the wave equation from
//!   breather initial data;
//! - [`io`] and [`cli`]: file formats, run manifests, and the command-line
//!   front end.

pub mod bloch;
pub mod gapcheck;
pub mod solver;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod spectrum;
pub mod trig;

pub use error::{Error, Result};
