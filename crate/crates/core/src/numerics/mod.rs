//! Shared numerical substrate.

pub mod bracket;
pub mod eigen;
pub mod grid;
pub mod kernel;
pub mod quadrature;
pub mod sampling;

pub use bracket::{poisson_bracket_fd, poisson_bracket_with, BracketMethod};
pub use eigen::{hermitian_eigendecomposition, HermitianEigen, C64};
pub use grid::{Axis, GridSpec};
pub use kernel::{KernelKind, KernelSpec};
pub use quadrature::{periodic_nodes, periodic_trapezoid, GaussLegendre};
pub use sampling::SeededStream;
