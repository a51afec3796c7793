//! Heat kernels on generalized diamond hierarchical lattices.
//!
//! The lattice `F_i` is a circle whose arcs are subdivided and duplicated
//! level by level according to two integer sequences. Its heat kernel is the
//! circle kernel plus one Dirichlet interval correction per level, chosen by
//! how the two points sit relative to each other. The limit space `F_∞`
//! inherits a kernel that agrees with a finite level for every off-diagonal
//! pair.
//!
//! Modules:
//! - [`params`]: branching sequences, cumulative products, diagnostics.
//! - [`geometry`]: words, cells, bundles and pair classification.
//! - [`kernel1d`]: circle and Dirichlet interval kernels, real and complex time.
//! - [`fractal`]: level kernels, the limit kernel and the Schrödinger kernel.
//! - [`semigroup`]: quadrature fields, projections, semigroup checks.
//! - [`oracle`]: discretized graph Laplacian and random walks.

pub mod error;
pub mod fractal;
pub mod geometry;
pub mod kernel1d;
pub mod oracle;
pub mod par;
pub mod params;
pub mod semigroup;

pub use error::{Error, Result};
pub use geometry::{Address, Angle, CellCoord, CellWord, PairConfig};
pub use par::Exec;
pub use params::ParameterSequences;
