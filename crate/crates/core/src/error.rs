use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular evaluation on a wedge wall: {0}")]
    Singularity(String),

    #[error("chart mismatch: point is in the {point} chart but the system is {system}")]
    ChartMismatch {
        point: &'static str,
        system: &'static str,
    },

    #[error("no real turning points: discriminant {discriminant} is not positive")]
    NoTurningPoints { discriminant: f64 },

    #[error("unbounded motion: energy {energy} is not negative")]
    Unbounded { energy: f64 },

    #[error("degenerate orbit: {0}")]
    DegenerateOrbit(String),

    #[error("integration failed at t = {t}: {reason}")]
    Integration {
        t: f64,
        /// Last accepted state (q1, q2, p1, p2).
        state: [f64; 4],
        reason: String,
    },

    #[error("arcsin branch resolution failed: {0}")]
    Branch(String),

    #[error("finite-difference stencil could not be evaluated: {0}")]
    Stencil(String),

    #[error("quadrature did not converge: {0}")]
    Accuracy(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
