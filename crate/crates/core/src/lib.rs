//! Nested positive quadrature rules and symmetric cubature rules obtained by
//! Carathéodory reduction of Vandermonde systems, Smolyak sparse grids and
//! Genz test integrands.
//!
//! Node coordinates are stored physically. Moment checks and Vandermonde
//! systems work in canonical coordinates `(x - center) / half_width`.

pub mod cubature;
pub mod distributions;
pub mod error;
pub mod genz;
pub mod io;
mod linalg;
pub mod quadrature;
pub mod reduce1d;
pub mod smolyak;

pub use cubature::{tensor_rule, CubatureProvenance, CubatureRule, ReductionMode};
pub use distributions::Distribution;
pub use error::{Error, Result};
pub use quadrature::{clenshaw_curtis_rule, gauss_rule, Provenance, QuadratureRule};
pub use reduce1d::{nested_family, reduction_step, NestedFamily, ReductionCriterion};
pub use smolyak::{smolyak_rule, ClenshawCurtisFamily, GaussFamily, RuleFamily};
