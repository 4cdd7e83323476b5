//! Gaussian states and their Majorana covariance matrices.

mod correlation;
mod covariance;
mod state;
mod string;

pub use correlation::{covariance_from_number_block, omega, CorrelationMatrix};
pub use covariance::CovarianceMatrix;
pub use state::{clamp_events, GaussianState, CLAMP_EPS, PURITY_TOL};
pub use string::MajoranaString;
