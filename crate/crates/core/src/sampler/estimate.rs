use std::f64::consts::LN_2;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::StreamKey;
use super::sequential::{SequentialSampler, DEFAULT_REFRESH_EVERY};
use crate::error::{Error, Result};
use crate::gaussian::{GaussianState, MajoranaString};

/// Largest system accepted by [`exact_sre_enumeration`].
pub const ENUMERATION_LIMIT: usize = 7;

/// Monte-Carlo estimate of one stabilizer Renyi entropy, in nats.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SreEstimate {
    pub alpha: f64,
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidIndex(alpha))
    }
}

fn is_shannon(alpha: f64) -> bool {
    alpha == 1.0
}

/// Estimator from sampled `log2 pi(x)` values of a state on `sites` sites.
///
/// For `alpha != 1` the value is `log(mean pi^(alpha-1)) / (1 - alpha) - L log 2`
/// with a delta-method error; for `alpha = 1` it is `mean(-log pi) - L log 2`.
pub fn estimate_from_log2(log2_probs: &[f64], sites: usize, alpha: f64) -> Result<SreEstimate> {
    check_alpha(alpha)?;
    let n = log2_probs.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 samples, got {n}")));
    }
    let nf = n as f64;
    let l = sites as f64;
    if is_shannon(alpha) {
        let mean = log2_probs.iter().sum::<f64>() / nf;
        let var = log2_probs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
        return Ok(SreEstimate {
            alpha,
            value: (-mean - l) * LN_2,
            std_error: (var / nf).sqrt() * LN_2,
            samples: n,
        });
    }
    let k = alpha - 1.0;
    // scale by the largest term so that pi^(alpha-1) never under- or overflows
    let top = log2_probs.iter().map(|&x| k * x).fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log2_probs.iter().map(|&x| (k * x - top).exp2()).collect();
    let mean = w.iter().sum::<f64>() / nf;
    let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let log2_mean = mean.log2() + top;
    Ok(SreEstimate {
        alpha,
        value: (log2_mean / (1.0 - alpha) - l) * LN_2,
        std_error: (var / nf).sqrt() / mean / (1.0 - alpha).abs(),
        samples: n,
    })
}

/// Batch-means standard error, a cross-check of the delta-method error.
pub fn batch_means_error(log2_probs: &[f64], sites: usize, alpha: f64, batches: usize) -> Result<f64> {
    if batches < 2 || log2_probs.len() < 2 * batches {
        return Err(Error::InvalidParameter(format!(
            "cannot form {batches} batches of at least 2 from {} samples",
            log2_probs.len()
        )));
    }
    let size = log2_probs.len() / batches;
    let values = log2_probs
        .chunks_exact(size)
        .take(batches)
        .map(|c| estimate_from_log2(c, sites, alpha).map(|e| e.value))
        .collect::<Result<Vec<f64>>>()?;
    let b = values.len() as f64;
    let mean = values.iter().sum::<f64>() / b;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (b - 1.0);
    Ok((var / b).sqrt())
}

/// Draws `samples` strings from a caller-supplied generator.
pub fn estimate_sre<R: Rng + ?Sized>(
    state: &GaussianState,
    alpha: f64,
    samples: usize,
    rng: &mut R,
) -> Result<SreEstimate> {
    check_alpha(alpha)?;
    let sampler = SequentialSampler::new(state)?;
    let logs = (0..samples)
        .map(|_| sampler.sample(rng).map(|s| s.log2_probability))
        .collect::<Result<Vec<f64>>>()?;
    estimate_from_log2(&logs, state.sites(), alpha)
}

/// Options for [`estimate_sres`].
#[derive(Clone, Copy, Debug)]
pub struct SamplingOptions {
    pub samples: usize,
    pub refresh_every: usize,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        SamplingOptions {
            samples: 1000,
            refresh_every: DEFAULT_REFRESH_EVERY,
        }
    }
}

/// Samples `log2 pi(x)` with sample `i` drawn from stream `key.sample(i)`.
/// The output order, and hence every reduction over it, is independent of
/// the thread count.
pub fn sample_log2_probabilities(state: &GaussianState, key: StreamKey, options: SamplingOptions) -> Result<Vec<f64>> {
    let sampler = SequentialSampler::with_refresh(state, options.refresh_every)?;
    (0..options.samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = key.sample(i).rng();
            sampler.sample(&mut rng).map(|s| s.log2_probability)
        })
        .collect()
}

/// Estimates several Renyi indices from one shared set of samples.
pub fn estimate_sres(
    state: &GaussianState,
    alphas: &[f64],
    key: StreamKey,
    options: SamplingOptions,
) -> Result<Vec<SreEstimate>> {
    for &a in alphas {
        check_alpha(a)?;
    }
    let logs = sample_log2_probabilities(state, key, options)?;
    alphas
        .iter()
        .map(|&a| estimate_from_log2(&logs, state.sites(), a))
        .collect()
}

/// Exact `M_alpha` by enumerating all `4^L` strings, for `L <= 7`.
pub fn exact_sre_enumeration(state: &GaussianState, alpha: f64) -> Result<f64> {
    exact_sre_enumeration_bounded(state, alpha, ENUMERATION_LIMIT)
}

/// [`exact_sre_enumeration`] with a caller-chosen size bound (at most 15).
pub fn exact_sre_enumeration_bounded(state: &GaussianState, alpha: f64, max_sites: usize) -> Result<f64> {
    Ok(exact_sres_bounded(state, &[alpha], max_sites)?[0])
}

/// Exact values for several indices from a single enumeration.
pub fn exact_sres_bounded(state: &GaussianState, alphas: &[f64], max_sites: usize) -> Result<Vec<f64>> {
    for &a in alphas {
        check_alpha(a)?;
    }
    let l = state.sites();
    let limit = max_sites.min(15);
    if l > limit {
        return Err(Error::TooLarge { sites: l, limit });
    }
    let n = state.modes();
    let mut sums = vec![0.0f64; alphas.len()];
    for idx in 0..(1u64 << n) {
        if idx.count_ones() % 2 == 1 {
            continue;
        }
        let Some(lp) = state.log_string_probability(&MajoranaString::from_index(idx, n)) else {
            continue;
        };
        for (s, &a) in sums.iter_mut().zip(alphas) {
            if is_shannon(a) {
                *s -= lp.exp() * lp;
            } else {
                *s += (a * lp).exp();
            }
        }
    }
    Ok(sums
        .iter()
        .zip(alphas)
        .map(|(&s, &a)| {
            let h = if is_shannon(a) { s } else { s.ln() / (1.0 - a) };
            h - l as f64 * LN_2
        })
        .collect())
}
