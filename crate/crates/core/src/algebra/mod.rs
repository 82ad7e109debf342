//! Exact arithmetic over prime fields: field elements, matrices, univariate
//! polynomials, and resultants.

mod field;
mod matrix;
pub mod resultant;
pub mod unipoly;

pub use field::{Field, FieldElement, DEFAULT_PRIME};
pub use matrix::FieldMatrix;
