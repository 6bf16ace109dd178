use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Parameter(String),

    /// `element` is `None` when the failing gradient did not come from mesh assembly.
    #[error("inverted element{}: det(F) = {det:e}", element.map(|e| format!(" {e}")).unwrap_or_default())]
    InvertedElement { element: Option<usize>, det: f64 },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    Solver {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("time step violates advective CFL: {cfl:.4} > {limit}")]
    StepSize { cfl: f64, limit: f64 },

    #[error("quadrature point {point} at {position:?} lies within the kernel support of the domain boundary")]
    OutOfSupport { point: usize, position: [f64; 3] },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag used in CLI error lines and sweep summaries.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parameter(_) => "parameter",
            Error::InvertedElement { .. } => "inverted_element",
            Error::Unsupported(_) => "unsupported",
            Error::Solver { .. } => "solver",
            Error::StepSize { .. } => "step_size",
            Error::OutOfSupport { .. } => "out_of_support",
            Error::Config(_) => "config",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        }
    }

    pub(crate) fn with_element(self, element: usize) -> Self {
        match self {
            Error::InvertedElement { element: None, det } => Error::InvertedElement {
                element: Some(element),
                det,
            },
            other => other,
        }
    }
}
