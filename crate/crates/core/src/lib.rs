//! Exact-arithmetic laboratory for interval exchange transformations and
//! their step-function skew products.

#![allow(clippy::result_large_err)]

pub mod catalog;
pub mod experiments;
pub mod friendship;
pub mod iet;
pub mod induction;
pub mod io;
pub mod numeric;
pub mod skew;
pub mod step;

pub use numeric::{ExactScalar, NumericError, Sign};
