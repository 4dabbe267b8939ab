use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A geometric configuration outside the region where the requested
    /// quantity is defined (nonexistent or degenerate tetrahedron, empty
    /// existence interval, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("rejected move: {0}")]
    RejectedMove(String),

    #[error("not a closed 3-manifold triangulation: {0}")]
    Manifold(String),

    #[error("search budget of {budget} nodes exceeded")]
    BudgetExceeded { budget: u64 },

    #[error("accuracy target missed in {what}: achieved {achieved:.3e}, wanted {target:.3e}")]
    Accuracy {
        what: String,
        achieved: f64,
        target: f64,
    },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag used in structured error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::Domain(_) => "domain",
            Error::RejectedMove(_) => "rejected_move",
            Error::Manifold(_) => "manifold",
            Error::BudgetExceeded { .. } => "budget_exceeded",
            Error::Accuracy { .. } => "accuracy",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
