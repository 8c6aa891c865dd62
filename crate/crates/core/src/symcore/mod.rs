//! Exact scalars, polynomials in `z, z̄`, and fractions over powers of `A`.

mod afrac;
mod poly;
mod scalar;

pub use afrac::AFrac;
pub use poly::{MultiIndex, Poly, Var};
pub use scalar::GaussRat;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SymError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("operands live on different charts")]
    ParamsMismatch,
    #[error("point outside the chart domain: {0}")]
    Domain(String),
    #[error("expected a holomorphic polynomial: {0}")]
    NotHolomorphic(String),
}
