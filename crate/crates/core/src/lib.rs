// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod esd;
pub mod fuelcell;
pub mod io;
mod par;
pub mod plant;
pub mod policies;
pub mod sim;
pub mod sizing;
pub mod workload;

pub use error::{Error, Result};
