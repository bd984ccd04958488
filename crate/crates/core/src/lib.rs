//! Closed-form approximations of average bit-error rates over Rayleigh fading,
//! built on the sampling (Dirac-impulse) property of the Gaussian Q-function,
//! together with two independent oracles: adaptive quadrature of the exact
//! expectation integrals and Monte Carlo simulation of the channel.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod closed_form;
pub mod curve;
pub mod error;
pub mod quadrature;
mod roots;
pub mod sampling;
pub mod scenario;
pub mod sim;
pub mod special;
pub mod sweep;
pub mod validation;

pub use error::{Error, Result};
pub use special::Probability;
