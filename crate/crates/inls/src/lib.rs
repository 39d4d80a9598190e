//! Workbench for weighted nonlinear eigenvalue problems
//!
//! `-Δu + |u|^{q-2}u/|x|^b = λ|u|^{p-2}u/|x|^a + f(x, u)` with power-type `f`:
//! exponent and regime calculus ([`regimes`]), log-uniform radial discretization
//! ([`grid`]), discrete energies and verification residuals ([`functionals`]) and
//! descent/Newton solvers ([`solver`]).

pub mod error;
pub mod fmt;
pub mod functionals;
pub mod grid;
pub mod regimes;
pub mod solver;
pub mod tridiag;

pub use error::{InlsError, Result};
pub use functionals::{FunctionalReport, TermSpec};
pub use grid::{Family, RadialGrid, RadialProfile};
pub use regimes::{EmbeddingInterval, Params, Regime, RegimeVerdict, WeightedPair};
pub use solver::{SolveOptions, SolveReport};
