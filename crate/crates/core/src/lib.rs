//! Change-of-measure inequalities and their applications.
//!
//! The crate evaluates f-divergences between discrete distributions, the
//! upper bounds on `E_Q[phi]` they induce, PAC-Bayes bound addends for
//! several loss classes, and certified non-asymptotic intervals for Monte
//! Carlo estimates drawn from a strongly log-concave reference measure.
//!
//! All randomness flows through [`rng`], so every experiment is
//! reproducible from a single `u64` seed.

pub mod change_of_measure;
pub mod distributions;
pub mod divergences;
pub mod error;
pub mod mc_certify;
pub mod numeric;
pub mod pac_bayes;
pub mod quadrature;
pub mod rng;

pub use error::{Error, Result};
