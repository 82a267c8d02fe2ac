//! Crate-wide error type.

pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced by the library.
#[derive(Debug)]
pub enum Error {
    /// Structural mismatch between matrix/vector dimensions.
    Dimension(String),
    /// A matrix that must be (semi)definite is not.
    NotPositiveDefinite(String),
    /// An iterative solver ran out of budget; carries the final residual.
    Convergence { context: String, residual: f64 },
    /// Argument outside the mathematical domain of the operation.
    Domain(String),
    /// The requested optimization has an empty feasible set.
    Infeasible(String),
    /// An enumeration would exceed the admissible support size.
    TooLarge(String),
    /// A closed-loop quantity diverged.
    Unstable(String),
    /// Invalid or incomplete experiment configuration.
    Config(String),
    /// A variable selector does not match the table it is applied to.
    Selector(String),
    /// Underlying I/O failure.
    Io(std::io::Error),
}

impl std::fmt::Display for Error {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Error::Dimension(msg) => write!(f, "dimension mismatch: {msg}"),
            Error::NotPositiveDefinite(msg) => write!(f, "not positive definite: {msg}"),
            Error::Convergence { context, residual } => {
                write!(f, "failed to converge: {context} (residual {residual:.3e})")
            }
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Infeasible(msg) => write!(f, "infeasible: {msg}"),
            Error::TooLarge(msg) => write!(f, "size limit exceeded: {msg}"),
            Error::Unstable(msg) => write!(f, "instability: {msg}"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Selector(msg) => write!(f, "selector error: {msg}"),
            Error::Io(err) => write!(f, "i/o error: {err}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err)
    }
}
