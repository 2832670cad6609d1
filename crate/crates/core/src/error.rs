use thiserror::Error;

/// Errors produced by rule construction and reduction.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("moment of order {order} is not representable as a finite f64")]
    MomentOverflow { order: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{0} requires a distribution with bounded support")]
    UnboundedSupport(&'static str),

    #[error("eigenvalue iteration for the {n}-node Jacobi matrix did not converge")]
    EigenNoConvergence { n: usize },

    #[error("nodes {first} and {second} coincide; the Vandermonde system is singular")]
    DuplicateNodes { first: usize, second: usize },

    #[error("{n} nodes exceed the conditioning guard of {limit}")]
    TooManyNodes { n: usize, limit: usize },

    #[error("Vandermonde solve residual {residual:.3e} exceeds {tolerance:.1e} (condition estimate {condition:.3e})")]
    IllConditioned {
        residual: f64,
        tolerance: f64,
        condition: f64,
    },

    #[error("no numerically reliable null vector (residual {residual:.3e}, condition estimate {condition:.3e})")]
    NoKernel { residual: f64, condition: f64 },

    #[error("node set is not mirror-symmetric about its center")]
    NotSymmetric,

    #[error("rule has non-positive weight {weight:.3e} at node {index}")]
    NonPositiveWeight { index: usize, weight: f64 },

    #[error("reduction exhausted: {0}")]
    ReductionExhausted(String),

    #[error("family too short: level {required_level} ({required_nodes} nodes) is required")]
    FamilyTooShort {
        required_level: usize,
        required_nodes: usize,
    },

    #[error("I/O error: {0}")]
    Io(String),

    #[error("malformed rule file: {0}")]
    Format(String),

    #[error("binomial coefficient overflows u64")]
    Overflow,

    #[error("rule does not integrate all monomials up to degree {required} (verified degree {verified})")]
    InsufficientDegree { required: usize, verified: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
