// `!(a > b)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cauchy;
pub mod classify;
pub mod error;
pub mod grid;
pub mod model;
pub mod montecarlo;
pub mod numerics;
pub mod payoff;
pub mod reference;
pub mod sturm;

pub use error::{Error, ErrorCategory, Result};
