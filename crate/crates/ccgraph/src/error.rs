use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Orbital index outside 1..=K, or K outside the single-word range.
    #[error("invalid orbital configuration: {0}")]
    InvalidOrbital(String),

    /// The two determinants are not comparable in the reference order.
    #[error("determinants are not comparable: {0}")]
    NotComparable(String),

    /// Two excitations try to create the same virtual orbital.
    #[error("pauli violation: overlapping virtual parts {0}")]
    PauliViolation(String),

    /// An amplitude or operator refers to a label outside the graph.
    #[error("unknown excitation label {0}")]
    UnknownExcitation(String),

    /// Operation requires an excitation complete graph.
    #[error("graph is not excitation complete: {0}")]
    NotExcitationComplete(String),

    /// Newton step hit a numerically singular Jacobian.
    #[error("singular jacobian at iteration {iteration} (pivot {pivot:e})")]
    SingularJacobian { iteration: usize, pivot: f64 },

    /// Bad user-supplied configuration (graph spec, reference list, model parameters...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Integral file could not be parsed.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Dense matrix would exceed the dimension cap.
    #[error("dense dimension {dim} exceeds cap {cap} (set CCGRAPH_MAX_DIM to raise)")]
    SizeLimit { dim: usize, cap: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
