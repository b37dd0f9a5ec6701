// NaN-rejecting guards are written as `!(x > y)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod charfn;
pub mod cmath;
pub mod error;
pub mod experiments;
pub mod liouville;
pub mod ode;
pub mod profiles;
pub mod quad;
pub mod spectrum;

pub use error::{Error, Result};
