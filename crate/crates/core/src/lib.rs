// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod dist;
pub mod engine;
pub mod error;
pub mod models;

pub use error::{Error, Result};
