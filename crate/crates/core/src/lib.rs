//! Powered order statistics of the general error distribution.

pub mod error;
pub mod expansions;
pub mod ged;
pub mod harness;
pub mod norming;
pub mod orderstats;
pub mod roots;
pub mod specfun;

pub use error::{Error, Result};
