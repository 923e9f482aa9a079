//! Classical-dynamics eigensolvers for large sparse symmetric matrices.
// `!(a > b)` guards are meant to catch NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod config;
pub mod davidson;
pub mod diagnostics;
pub mod error;
pub mod fci;
pub mod linalg;
pub mod precond;
pub mod run;
pub mod sbci1;
pub mod sbci2;

pub use error::{Error, Result};
