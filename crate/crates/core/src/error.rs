use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    /// The unnormalized trace fell below the normalization guard.
    #[error("trajectory extinguished{}: trace {trace:e} below guard", branch_suffix(.branch))]
    TrajectoryExtinguished { trace: f64, branch: Option<String> },

    #[error("integration diverged at step {step}")]
    IntegrationDiverged { step: usize },

    #[error("eigenvalue iteration did not converge for {matrix} after {iterations} sweeps")]
    NoConvergence { matrix: String, iterations: usize },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("singular coefficients: {0}")]
    SingularCoefficients(String),

    #[error("near-degenerate roots (gap {gap:e}); use the numerical propagator instead")]
    DegenerateRoots { gap: f64 },

    #[error("gamma = {gamma} outside the fit domain [0.05, 1) U (2, 5]")]
    OutOfDomain { gamma: f64 },

    #[error("all evaluation points failed: {0}")]
    Masked(String),
}

fn branch_suffix(branch: &Option<String>) -> String {
    match branch {
        Some(b) => format!(" on branch {b}"),
        None => String::new(),
    }
}

impl Error {
    /// Attach the name of the measurement branch to an extinction error.
    pub fn on_branch(self, name: &str) -> Self {
        match self {
            Error::TrajectoryExtinguished { trace, .. } => Error::TrajectoryExtinguished {
                trace,
                branch: Some(name.to_string()),
            },
            other => other,
        }
    }
}
