//! Exact multi-soliton construction and numerical verification for the
//! ZS-AKNS n×n hierarchy.
//!
//! The crate builds solutions of the positive (`j ≥ 1`) and negative
//! (`j = −1`) flows of the hierarchy generated by a fixed diagonal
//! skew-Hermitian matrix `a` by dressing the vacuum trivialization with
//! rational loop-group factors, and verifies everything it builds against
//! independent routes: finite-difference PDE residuals, zero-curvature
//! checks, conserved functionals, projector ODEs and classical closed
//! forms (one-solitons, kinks, breathers, Bianchi permutability).
//!
//! Module map:
//! - [`algebra`]: small dense complex matrix kernel and the `a`-centralizer
//!   decomposition,
//! - [`frames`]: vacuum and dressed trivializations `E(x,t,λ)`,
//! - [`dressing`]: simple factors, projector transport, Bäcklund updates,
//!   permutability, scaling, breathers,
//! - [`hierarchy`]: the `Q`-recursion, flow right-hand sides, Hamiltonians,
//!   symplectic pairings, recursion operators, negative flows,
//! - [`equations`]: named PDE residual evaluators and the classical
//!   sine-Gordon transformation suite,
//! - [`verify`]: finite differences, quadrature, conservation and
//!   convergence-order helpers.

pub mod algebra;
pub mod dressing;
pub mod equations;
pub mod error;
pub mod frames;
pub mod hierarchy;
pub mod tol;
pub mod verify;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
