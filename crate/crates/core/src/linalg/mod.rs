//! Small dense/banded kernels used by the discrete operators.

pub mod banded;
pub mod tridiag;

pub use banded::{BandedLu, BandedMatrix};
pub use tridiag::{SymTridiag, TridiagEigen};
