// Negated float comparisons are deliberate: they treat NaN as invalid.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod diagnostics;
pub mod error;
pub mod problems;
pub mod prox;
pub mod solvers;
pub mod spaces;

pub use error::{Error, Result};
