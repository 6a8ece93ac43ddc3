use thiserror::Error;

/// Errors raised by grid construction, the solvers and the io layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("linear solver stalled after {iterations} iterations (relative residual {residual:.3e})")]
    LinearSolver { iterations: usize, residual: f64 },

    #[error("{field} went negative in cell {cell}: {value:.3e}")]
    Negative {
        field: &'static str,
        cell: usize,
        value: f64,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("fixed-point iteration did not converge: {iterations} iterations, last update {update:.3e}, dt {dt:.3e}")]
    Picard {
        iterations: usize,
        update: f64,
        dt: f64,
    },

    #[error("step failed at t = {time}: {source}")]
    Step {
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{} hypothesis check(s) failed: {}", .0.len(), join(.0))]
    Hypotheses(Vec<String>),

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("unsupported format version {found} (expected {expected})")]
    Version { expected: u32, found: u32 },

    #[error("{0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join(items: &[String]) -> String {
    items.join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
