use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::gaussian::{GaussianState, MajoranaString};

/// Default number of bits between full recomputations of the working inverse;
/// `0` recomputes only when a conditional leaves `[0, 1]`.
pub const DEFAULT_REFRESH_EVERY: usize = 0;

// Conditionals outside [-TOL, 1 + TOL] trigger a from-scratch recompute.
const CONDITIONAL_TOL: f64 = 1e-9;

/// A string drawn from `pi` together with its log-probability.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub string: MajoranaString,
    /// `log2 pi(x)`, accumulated from the per-bit conditionals.
    pub log2_probability: f64,
}

impl Sample {
    pub fn log_probability(&self) -> f64 {
        self.log2_probability * std::f64::consts::LN_2
    }
}

/// Exact sampler for the string distribution `pi(x) = det(Gamma|_x) / det(1 + Gamma)`.
///
/// Bits are drawn one at a time. The marginal of a prefix is the determinant
/// of `Gamma + 1` on the unspecified modes, restricted to the chosen and the
/// unspecified modes; every conditional is then a diagonal element of the
/// inverse of that matrix, which is maintained by rank-one updates.
#[derive(Clone, Debug)]
pub struct SequentialSampler<'a> {
    state: &'a GaussianState,
    base_inverse: Vec<f64>,
    refresh_every: usize,
}

impl<'a> SequentialSampler<'a> {
    pub fn new(state: &'a GaussianState) -> Result<Self> {
        Self::with_refresh(state, DEFAULT_REFRESH_EVERY)
    }

    /// `refresh_every = 0` disables periodic recomputation.
    pub fn with_refresh(state: &'a GaussianState, refresh_every: usize) -> Result<Self> {
        let n = state.modes();
        let shifted = DMatrix::<f64>::identity(n, n) + state.covariance().matrix();
        let inv = shifted
            .try_inverse()
            .ok_or_else(|| Error::Singular("1 + Gamma is not invertible".into()))?;
        Ok(SequentialSampler {
            state,
            base_inverse: row_major(&inv),
            refresh_every,
        })
    }

    pub fn state(&self) -> &GaussianState {
        self.state
    }

    pub fn start(&self) -> SamplerState<'_> {
        SamplerState {
            sampler: self,
            prefix: Vec::with_capacity(self.state.modes()),
            log2_probability: 0.0,
            inverse: self.base_inverse.clone(),
            recomputes: 0,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Sample> {
        let mut s = self.start();
        for _ in 0..self.state.modes() {
            let p0 = s.zero_probability()?;
            let u: f64 = rng.random();
            s.push(u >= p0)?;
        }
        Ok(s.finish())
    }
}

/// A partially drawn string.
#[derive(Clone, Debug)]
pub struct SamplerState<'s> {
    sampler: &'s SequentialSampler<'s>,
    prefix: Vec<bool>,
    log2_probability: f64,
    // row-major; only the trailing block past the prefix is meaningful
    inverse: Vec<f64>,
    recomputes: usize,
}

impl SamplerState<'_> {
    pub fn prefix(&self) -> &[bool] {
        &self.prefix
    }

    /// Number of from-scratch recomputations performed so far.
    pub fn recomputes(&self) -> usize {
        self.recomputes
    }

    /// `log2` of the marginal probability of the current prefix.
    pub fn log2_probability(&self) -> f64 {
        self.log2_probability
    }

    /// `pi(next bit = 0 | prefix)`.
    pub fn zero_probability(&mut self) -> Result<f64> {
        let mu = self.prefix.len();
        let n = self.sampler.state.modes();
        assert!(mu < n, "string already complete");
        let mut p0 = self.inverse[mu * n + mu];
        if !(-CONDITIONAL_TOL..=1.0 + CONDITIONAL_TOL).contains(&p0) || !p0.is_finite() {
            self.recompute()?;
            p0 = self.inverse[mu * n + mu];
            if !(-CONDITIONAL_TOL..=1.0 + CONDITIONAL_TOL).contains(&p0) || !p0.is_finite() {
                return Err(Error::Singular(format!(
                    "conditional probability {p0} at bit {mu} after recompute"
                )));
            }
        }
        Ok(p0.clamp(0.0, 1.0))
    }

    /// Fixes the next bit.
    pub fn push(&mut self, bit: bool) -> Result<()> {
        let mu = self.prefix.len();
        let n = self.sampler.state.modes();
        let p0 = self.zero_probability()?;
        let chosen = if bit { 1.0 - p0 } else { p0 };
        if chosen <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "bit {mu} = {} has zero probability",
                bit as u8
            )));
        }
        self.log2_probability += chosen.log2();
        let c = self.inverse[mu * n + mu] - if bit { 1.0 } else { 0.0 };
        self.prefix.push(bit);
        let every = self.sampler.refresh_every;
        if every > 0 && self.prefix.len().is_multiple_of(every) && self.prefix.len() < n {
            return self.recompute();
        }
        // Schur complement (bit 0) or Sherman-Morrison (bit 1) on the trailing block
        let b = &mut self.inverse;
        let (head, tail) = b.split_at_mut((mu + 1) * n);
        let pivot_row = &head[mu * n..];
        for a in 0..n - mu - 1 {
            let row = &mut tail[a * n..(a + 1) * n];
            let f = row[mu] / c;
            if f == 0.0 {
                continue;
            }
            for j in mu + 1..n {
                row[j] -= f * pivot_row[j];
            }
        }
        Ok(())
    }

    pub fn finish(self) -> Sample {
        assert_eq!(self.prefix.len(), self.sampler.state.modes(), "string not complete");
        Sample {
            string: MajoranaString::new(self.prefix),
            log2_probability: self.log2_probability,
        }
    }

    // Rebuilds the trailing block of the inverse from the prefix alone.
    fn recompute(&mut self) -> Result<()> {
        self.recomputes += 1;
        let n = self.sampler.state.modes();
        let mu = self.prefix.len();
        let g = self.sampler.state.covariance().matrix();
        let idx: Vec<usize> = self
            .prefix
            .iter()
            .enumerate()
            .filter_map(|(k, &b)| b.then_some(k))
            .chain(mu..n)
            .collect();
        let s = idx.len() - (n - mu);
        let mut m = DMatrix::from_fn(idx.len(), idx.len(), |i, j| g[(idx[i], idx[j])]);
        for k in s..idx.len() {
            m[(k, k)] += 1.0;
        }
        let inv = m
            .try_inverse()
            .ok_or_else(|| Error::Singular(format!("marginal matrix singular at bit {mu}")))?;
        for a in 0..n - mu {
            for b in 0..n - mu {
                self.inverse[(mu + a) * n + mu + b] = inv[(s + a, s + b)];
            }
        }
        Ok(())
    }
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn vacuum_samples_pair_up() {
        let state = GaussianState::vacuum(5).unwrap();
        let sampler = SequentialSampler::new(&state).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let s = sampler.sample(&mut rng).unwrap();
            let bits = s.string.bits();
            for j in 0..5 {
                assert_eq!(bits[2 * j], bits[2 * j + 1]);
            }
            assert_eq!(s.log2_probability, -5.0);
        }
    }

    #[test]
    fn forced_zero_probability_branch_is_rejected() {
        let state = GaussianState::vacuum(1).unwrap();
        let sampler = SequentialSampler::new(&state).unwrap();
        let mut s = sampler.start();
        s.push(false).unwrap();
        assert!(s.push(true).is_err());
    }

    #[test]
    fn refresh_cadence_matches_plain_updates() {
        let mut m = DMatrix::<f64>::zeros(8, 8);
        let vals = [0.3, -0.2, 0.5, 0.1, 0.05, -0.4, 0.2, 0.15];
        for (k, v) in vals.iter().enumerate() {
            let (i, j) = (k % 8, (3 * k + 1) % 8);
            if i != j {
                m[(i, j)] += v;
                m[(j, i)] -= v;
            }
        }
        let state = GaussianState::from_covariance(crate::gaussian::CovarianceMatrix::new(m).unwrap());
        let plain = SequentialSampler::with_refresh(&state, 0).unwrap();
        let refreshed = SequentialSampler::with_refresh(&state, 2).unwrap();
        for seed in 0..20 {
            let a = plain.sample(&mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let b = refreshed.sample(&mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            assert_eq!(a.string, b.string);
            assert!((a.log2_probability - b.log2_probability).abs() < 1e-10);
        }
    }
}
