//! Information-theoretic sample-complexity bounds for sparse support recovery,
//! with an exhaustive maximum-likelihood decoder for checking them by simulation.
//!
//! All information quantities are in nats.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod exponent;
pub mod info;
pub mod model;
pub mod numeric;
pub mod sim;

pub use error::{Error, Result};
