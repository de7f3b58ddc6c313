//! Error types shared across the library.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("singular matrix: pivot {pivot:.3e} below {threshold:.3e}{}", context_suffix(.context))]
    SingularMatrix {
        pivot: f64,
        threshold: f64,
        context: Option<String>,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in finite-difference stencil at {context}")]
    NonFiniteValue { context: String },

    #[error("syntax error at byte {offset}: expected {expected}, found {found}")]
    SyntaxError {
        offset: usize,
        expected: String,
        found: String,
    },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("`{func}` takes {expected} argument(s), got {got} (at byte {offset})")]
    ArityError {
        func: String,
        expected: usize,
        got: usize,
        offset: usize,
    },

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("unbound variable x{index} (dimension is {dim})")]
    UnboundVariable { index: usize, dim: usize },

    #[error("non-finite state at step {step} (t = {t})")]
    NonFiniteState { step: usize, t: f64 },

    #[error("unstable solver parameters: dt = {dt:.3e} exceeds stability bound {bound:.3e}")]
    UnstableParameters { dt: f64, bound: f64 },

    #[error("Cole-Hopf transform underflowed to a non-positive value (terminal data range too wide)")]
    NonPositiveW,

    #[error("zero diffusion coefficient at (t = {t}, x = {x}): |sigma| < 1e-12")]
    ZeroDiffusion { t: f64, x: f64 },

    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),

    #[error("configuration error: {0}")]
    ConfigError(String),

    #[error("too few paths: got {got}, need at least {need}")]
    TooFewPaths { got: usize, need: usize },
}

fn context_suffix(context: &Option<String>) -> String {
    match context {
        Some(c) => format!(" ({c})"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
