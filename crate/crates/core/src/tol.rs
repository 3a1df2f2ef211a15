//! Central numerical tolerances.
//!
//! Every threshold used by the library lives here, with its origin.  The
//! values are double-precision headroom choices: exact algebraic identities
//! are held to ~1e-10..1e-12, finite-difference and quadrature residuals
//! scale with the grid and are not gated here.

/// Hermitian / idempotent acceptance for projectors and centralizer splits.
pub const TAU_ALG: f64 = 1e-10;

/// Relative smallest-singular-value cutoff for basis rank checks.
pub const TAU_RANK: f64 = 1e-10;

/// Relative dedup tolerance for eigenvalue coincidence of the generator:
/// `|a_j - a_k| <= DEDUP_REL * max(1, |a_j|, |a_k|)` marks a repeated root.
pub const DEDUP_REL: f64 = 1e-9;

/// Pole guard for spectral-parameter evaluation: `tau = POLE_REL * (1 + |z|)`.
pub const POLE_REL: f64 = 1e-8;

/// Condition-number ceiling for the transport Gram matrix.
pub const GRAM_COND_MAX: f64 = 1e12;

/// Edge decay required of fields before quadrature from the left edge
/// stands in for integrals from -infinity.
pub const EDGE_DECAY: f64 = 1e-6;

/// Unitarity drift allowed along an integrated trivialization.
pub const UNITARITY_DRIFT: f64 = 1e-9;

/// Deviation ceiling for the projector ODE cross-check before it is
/// reported as a step-size failure rather than a residual.
pub const ODE_DEVIATION_CEILING: f64 = 1e-3;

/// Compatibility drift allowed between x-then-t and t-then-x sweeps of the
/// classical Bäcklund and gauge-transform integrators.
pub const COMPAT_DRIFT: f64 = 1e-6;

/// Pole guard scaled by the pole in question.
pub fn pole_guard(z: num_complex::Complex64) -> f64 {
    POLE_REL * (1.0 + z.norm())
}

/// Eigenvalue dedup threshold for a pair of generator entries.
pub fn dedup_tol(aj: f64, ak: f64) -> f64 {
    DEDUP_REL * 1f64.max(aj.abs()).max(ak.abs())
}
