use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    /// `AB* = BA*` or `rank(A, B) = n` fails.
    #[error("interface condition is not self-adjoint: {reason} (residual {residual:.3e})")]
    D3Violation { reason: String, residual: f64 },

    #[error("interface condition does not mix edges (D4 fails): {0}")]
    D4Violation(String),

    #[error("too many artificial edges: {non_artificial} genuine edges but rank B = {rank}")]
    D5Violation { non_artificial: usize, rank: usize },

    #[error("ill-conditioned matrix: {0}")]
    Conditioning(String),

    #[error("matrix is not invertible: {0}")]
    Invertibility(String),

    /// `z` sits on an eigenvalue of the edge's Dirichlet operator.
    #[error("Weyl function has a pole at z = {z}; residue estimate {residue}")]
    Pole {
        z: num_complex::Complex64,
        residue: num_complex::Complex64,
    },

    #[error("ODE integration failed: {0}")]
    Solver(String),

    #[error("Herglotz property violated: {0}")]
    Herglotz(String),

    #[error("edge {edge}: {source}")]
    Edge {
        edge: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("precondition not met: {0}")]
    Precondition(String),

    #[error("random construction failed after {attempts} attempts: {reason}")]
    Randomization { attempts: usize, reason: String },

    #[error("internal inconsistency: {0}")]
    Inconsistency(String),

    #[error("theorem consistency check failed: {0}")]
    TheoremViolation(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn at_edge(self, edge: usize) -> Self {
        Error::Edge {
            edge,
            source: Box::new(self),
        }
    }
}
