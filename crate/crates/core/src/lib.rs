//! Diversity-multiplexing tradeoff (DMT) of double-scattering MIMO channels.
//!
//! The crate computes the tradeoff curve three ways (closed form, exact
//! linear program, greedy exponent reduction), estimates outage
//! probabilities by Monte Carlo, and numerically checks the supporting
//! random-matrix lemmas.

pub mod cli;
pub mod closed_form;
pub mod error;
pub mod exponent;
pub mod lemmas;
pub mod outage;
pub mod quadrature;
pub mod randmat;
pub mod rng;

pub use error::{Error, Result};

/// Exact rational used by the closed-form and LP routes.
pub type Rational = num_rational::BigRational;
