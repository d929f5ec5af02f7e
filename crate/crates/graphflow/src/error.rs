//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Point is deeper than R/2, nearest-point projection may be non-unique.
    #[error("point at distance {dist:.6e} from the boundary is too deep for projection (limit {limit:.6e})")]
    PointTooDeep { dist: f64, limit: f64 },

    #[error("point lies outside the domain")]
    OutsideDomain,

    #[error("kernel evaluated at t = {t} >= pole time s = {s}")]
    TimeOrderViolation { t: f64, s: f64 },

    #[error("grid functions live on different grids")]
    GridMismatch,

    #[error("non-finite input in {context}")]
    NonFiniteInput { context: &'static str },

    #[error("explicit time step {dt:.6e} violates the parabolic CFL limit {limit:.6e}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("Picard iteration failed to contract within {max_iter} iterations (last increment {increment:.6e})")]
    PicardDivergence { max_iter: usize, increment: f64 },

    #[error("linear solve did not reach relative residual {tol:.3e} in {iterations} iterations (residual {residual:.6e})")]
    LinearSolveFailure {
        iterations: usize,
        residual: f64,
        tol: f64,
    },

    #[error("empty time interval for norm computation")]
    EmptyInterval,

    #[error("trajectory ends at t = {last_time} and does not approach the pole time s = {s}")]
    PoleNotCovered { last_time: f64, s: f64 },

    #[error("need at least {needed} consecutive snapshots, trajectory has {got}")]
    InsufficientSnapshots { needed: usize, got: usize },

    #[error("evaluation at or past the self-similar singular time: t = {t} >= 1")]
    TimeAtSingularity { t: f64 },

    #[error("grid resolution {resolution} too coarse for domain (need at least {minimum})")]
    GridTooCoarse { resolution: usize, minimum: usize },

    #[error("invalid run configuration: {0}")]
    ConfigInvalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
