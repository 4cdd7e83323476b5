//! Closed forms for the generalized Gibbs ensemble reached by a hopping
//! quench from a Néel-type state of filling `n`.
//!
//! Every subsystem of `l` sites relaxes to `l` uncorrelated sites with
//! occupation `n`, so the covariance is block diagonal and the string
//! distribution only depends on the number `m` of fully occupied Majorana
//! pairs: `pi(m) = q^m / (1 + q)^l` with `q = (1 - 2n)^2`.

use std::f64::consts::LN_2;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::CovarianceMatrix;

/// Filling and subsystem size of a stationary ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GgeSpec {
    filling: f64,
    sites: usize,
}

impl GgeSpec {
    pub fn new(filling: f64, sites: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&filling) {
            return Err(Error::InvalidParameter(format!(
                "filling must lie in [0, 1], got {filling}"
            )));
        }
        if sites == 0 {
            return Err(Error::InvalidSize("subsystem needs at least one site".into()));
        }
        Ok(GgeSpec { filling, sites })
    }

    pub fn filling(&self) -> f64 {
        self.filling
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    /// Same filling on `sites` sites.
    pub fn with_sites(&self, sites: usize) -> Result<Self> {
        GgeSpec::new(self.filling, sites)
    }

    /// `q = (1 - 2n)^2`, the weight of one occupied pair.
    pub fn pair_weight(&self) -> f64 {
        (1.0 - 2.0 * self.filling).powi(2)
    }
}

/// `1_l (x) [[0, 1 - 2n], [2n - 1, 0]]`.
pub fn gge_covariance(spec: &GgeSpec) -> CovarianceMatrix {
    let g = 1.0 - 2.0 * spec.filling;
    let mut m = DMatrix::zeros(2 * spec.sites, 2 * spec.sites);
    for j in 0..spec.sites {
        m[(2 * j, 2 * j + 1)] = g;
        m[(2 * j + 1, 2 * j)] = -g;
    }
    CovarianceMatrix::from_matrix_unchecked(m)
}

/// Probability of any string made of `m` on-site pairs; `0^0 = 1`.
pub fn gge_string_probability(spec: &GgeSpec, pairs: usize) -> Result<f64> {
    if pairs > spec.sites {
        return Err(Error::InvalidParameter(format!(
            "{pairs} pairs on {} sites",
            spec.sites
        )));
    }
    let q = spec.pair_weight();
    let num = if pairs == 0 { 1.0 } else { q.powi(pairs as i32) };
    Ok(num / (1.0 + q).powi(spec.sites as i32))
}

/// Stabilizer Renyi entropy of the stationary subsystem, in nats.
pub fn gge_sre(spec: &GgeSpec, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidIndex(alpha));
    }
    let q = spec.pair_weight();
    let per_site = if alpha == 1.0 {
        // Shannon entropy of one site: weights 1/(1+q) and q/(1+q)
        let q_log_q = if q == 0.0 { 0.0 } else { q * q.ln() };
        (1.0 + q).ln() - q_log_q / (1.0 + q) - LN_2
    } else {
        ((1.0 + q.powf(alpha)).ln() - alpha * (1.0 + q).ln()) / (1.0 - alpha) - LN_2
    };
    Ok(spec.sites as f64 * per_site)
}
