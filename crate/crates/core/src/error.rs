use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("{function}: argument {value} outside domain ({expected})")]
    Domain {
        function: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("({p},{q}) is not a row of the coefficient table")]
    InvalidIndex { p: u8, q: u8 },

    /// Iterative procedure did not reach the requested tolerance.
    #[error("{what} did not converge: estimate {estimate:e}, error bound {error_bound:e}")]
    Convergence {
        what: &'static str,
        estimate: f64,
        error_bound: f64,
    },

    #[error("invalid input: {0}")]
    Validation(String),

    /// Height grid cannot support the finite-difference stencils.
    #[error("stencil error: {0}")]
    Stencil(String),

    #[error("cannot normalize: zero-temperature value is zero")]
    Normalization,
}

pub type Result<T> = std::result::Result<T, Error>;
