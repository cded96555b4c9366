//! Crate-wide error type.

/// Errors surfaced by the laboratory's operations.
///
/// Messages are preformatted so the type stays independent of the scalar
/// parameter; the CLI prints them verbatim.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// Parameter point violates the family's admissible region.
    #[error("inadmissible parameters: {0}")]
    Inadmissible(String),
    /// Argument outside an operation's domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// Phase-space origin: action 0, angle undefined.
    #[error("singular phase-space point: action 0, angle undefined")]
    SingularPoint,
    /// Mismatched dimensions between arguments.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// Quadrature order below the Nyquist margin of the truncation.
    #[error("aliasing refused: quadrature order {q} too small for truncation {n_max} (need q > 2*n_max)")]
    Aliasing { q: usize, n_max: i64 },
    /// Finite-difference stencil left the chart domain.
    #[error("stencil error: {0}")]
    Stencil(String),
    /// Angle increment across a finite-difference step is branch-cut ambiguous.
    #[error("step too large: {0}")]
    StepTooLarge(String),
    /// A consecutive overlap in a state chain vanished.
    #[error("degenerate overlap chain at segment {0}")]
    DegenerateChain(usize),
    /// The evolved curve does not close in projective space.
    #[error("not a loop: curve does not close in projective space ({0})")]
    NotALoop(String),
    /// Energy level set is not a closed bounded curve.
    #[error("level-set error: {0}")]
    LevelSet(String),
    /// Invalid input to an operation.
    #[error("input error: {0}")]
    Input(String),
    /// Requested grid or truncation exceeds the resource cap.
    #[error("resource limit: {0}")]
    Resource(String),
    /// An oracle trajectory left the chart domain.
    #[error("oracle domain error: {0}")]
    OracleDomain(String),
    /// State vector expected to be normalized is not.
    #[error("normalization error: {0}")]
    NotNormalized(String),
}

pub type Result<T> = core::result::Result<T, Error>;
