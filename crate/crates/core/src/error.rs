use thiserror::Error;

/// Failures raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("metric is degenerate: det = {det:e} <= threshold {threshold:e}")]
    DegenerateMetric { det: f64, threshold: f64 },

    #[error("stencil point ({x1}, {x2}) lies outside the metric field domain")]
    DomainViolation { x1: f64, x2: f64 },

    #[error("grid of {nx}x{ny} samples is too small (need at least 5x5)")]
    GridTooSmall { nx: usize, ny: usize },

    #[error("parameters lie in the wrong phase: {0}")]
    WrongPhase(String),

    #[error("operation undefined at the critical point: {0}")]
    CriticalPoint(String),

    #[error("mixing angle is singular at omega = omega0; use the resonant formulas")]
    AngleSingular,

    #[error("eigensolver failed on a {dim}x{dim} matrix: {reason}")]
    SolverFailure { dim: usize, reason: String },

    #[error("ground state is degenerate: gap {gap:e} below {gap_min:e}")]
    DegenerateGroundState { gap: f64, gap_min: f64 },

    #[error("fidelity probe at ({x1}, {x2}) has a degenerate ground state (gap {gap:e})")]
    ProbeDegenerate { x1: f64, x2: f64, gap: f64 },

    #[error("probe displacement too large: 1 - F = {infidelity:e} exceeds {limit:e}")]
    DeltaTooLarge { infidelity: f64, limit: f64 },

    #[error("harmonic projection is ill-conditioned (condition number {0:e})")]
    IllConditionedProjection(f64),

    #[error("connected correlator has a DC component {0:e}")]
    DcLeakage(f64),

    #[error("least-squares fit is singular: {0}")]
    SingularFit(String),

    #[error("expected peak not found: {0}")]
    MissingPeak(String),

    #[error("no sign change to bracket a zero crossing")]
    NoBracket,

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
