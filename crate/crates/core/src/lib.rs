//! Stabilizer Rényi entropies of fermionic Gaussian states.
//!
//! The crate covers the covariance-matrix representation of Gaussian states,
//! exact sequential sampling of Majorana strings, free and monitored lattice
//! dynamics, closed-form generalized Gibbs ensemble predictions, and the
//! finite-size scaling analysis of the resulting entropies.

pub mod dense;
pub mod dynamics;
mod error;
pub mod gaussian;
pub mod gge;
pub mod linalg;
pub mod monitoring;
pub mod sampler;
pub mod scaling;
pub mod validation;

pub use error::{Error, Result};
pub use gaussian::{CorrelationMatrix, CovarianceMatrix, GaussianState, MajoranaString};
pub use sampler::SreEstimate;

/// Scientific notation with 17 significant digits, as used in every CSV.
pub fn format_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/gaussian-states.md")]
    mod gaussian_states {}
    #[doc = include_str!("../../../book/src/sampling.md")]
    mod sampling {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/monitoring.md")]
    mod monitoring {}
    #[doc = include_str!("../../../book/src/gge.md")]
    mod gge {}
    #[doc = include_str!("../../../book/src/scaling.md")]
    mod scaling {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
