use thiserror::Error;

/// Errors raised across the crate.
///
/// Variants follow the failure modes of the construction: misuse of the
/// centralizer split, numerically singular soliton data, spectral-parameter
/// collisions with factor poles, and diagnostics from the cross-check
/// integrators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input has a nonzero a-diagonal part (|entry| = {0:.3e}); expected a-off-diagonal")]
    NonOffDiagonalInput(f64),

    #[error("basis is numerically rank deficient (smallest singular value ratio {0:.3e})")]
    RankDeficient(f64),

    #[error("Im z must be nonzero")]
    RealPole,

    #[error("vacuum frame pole: lambda = 0 is not admissible for negative flows")]
    PoleAtZero,

    #[error("lambda = {0} is within the pole guard of factor pole z = {1}")]
    NearPole(num_complex::Complex64, num_complex::Complex64),

    #[error("simple factor pole hit: lambda = {0} is at the conjugate pole of z = {1}")]
    PoleHit(num_complex::Complex64, num_complex::Complex64),

    #[error(
        "Gram matrix is numerically singular (condition estimate {0:.3e}); soliton data coincide"
    )]
    GramSingular(f64),

    #[error("involution constraint violated: {0}")]
    InvolutionViolation(String),

    #[error("degenerate factor pair: permutability requires r1 != r2 or s1^2 != s2^2")]
    DegeneratePair,

    #[error("permutability matrix M is numerically singular")]
    MSingular,

    #[error("realness violated: {0}")]
    RealnessViolation(String),

    #[error("projector ODE step too large: deviation {0:.3e} exceeds 1e-3")]
    StepTooLarge(f64),

    #[error("local Q-recursion not applicable: {0}")]
    NotApplicable(String),

    #[error("unitarity drift {0:.3e} along the trivialization; grid too coarse")]
    UnitarityDrift(f64),

    #[error("field shape does not match equation {0}: {1}")]
    ShapeMismatch(String, String),

    #[error("compatibility drift {0:.3e} between x-then-t and t-then-x integration")]
    CompatibilityDrift(f64),

    #[error("arctan branch unwrapping failed near node ({0}, {1}); grid too coarse")]
    BranchJump(usize, usize),

    #[error("grid too small for stencil: need at least {0} nodes, have {1}")]
    GridTooSmall(usize, usize),

    #[error("singular linear system in {0}")]
    SingularSystem(&'static str),

    #[error("invalid construction: {0}")]
    Invalid(String),
}
