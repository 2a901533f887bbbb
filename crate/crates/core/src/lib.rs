//! Upper bounds on one-way distillable secret key and forward-assisted private
//! capacity from k-unextendibility.
//!
//! - [`qmat`]: dense complex matrices and state/channel constructors.
//! - [`privtest`]: private states, twisting unitaries and privacy tests.
//! - [`conic`]: modeling layer and interior-point solver for small SDPs.
//! - [`diverge`]: hypothesis-testing, max and geometric k-unextendible divergences.
//! - [`bounds`]: key and capacity bounds, minimum-copies and minimum-uses searches.

pub mod bounds;
pub mod conic;
pub mod diverge;
pub mod error;
pub mod privtest;
pub mod qmat;

pub use error::{Error, Result};
