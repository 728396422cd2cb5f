// `!(x > 0.0)` is used deliberately so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evolution;
pub mod quad;
pub mod special_functions;
pub mod spectral;
pub mod stationary;

pub use error::{Result, WearError};
