use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{CovarianceMatrix, GaussianState};

/// Outcomes with Born probability below this are never drawn.
pub const CERTAINTY_TOL: f64 = 1e-12;
/// Largest allowed per-step measurement probability `gamma * dt`.
pub const MAX_STEP_PROBABILITY: f64 = 0.5;

/// One projective occupation measurement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementEvent {
    pub time: f64,
    pub site: usize,
    /// Measured occupation `n_k`.
    pub outcome: bool,
    /// Probability of the recorded outcome.
    pub born_probability: f64,
}

/// A pure state on which local occupations can be measured.
pub trait Measurable {
    fn sites(&self) -> usize;
    fn occupation(&self, site: usize) -> f64;
    /// Conditions on `n_site = outcome`; the outcome must have nonzero probability.
    fn project(&mut self, site: usize, outcome: bool);
}

/// Draws a Born outcome for `site` and collapses the state onto it.
pub fn measure<S: Measurable, R: Rng + ?Sized>(state: &mut S, site: usize, time: f64, rng: &mut R) -> MeasurementEvent {
    let p1 = state.occupation(site).clamp(0.0, 1.0);
    let u: f64 = rng.random();
    let outcome = if p1 < CERTAINTY_TOL {
        false
    } else if p1 > 1.0 - CERTAINTY_TOL {
        true
    } else {
        u < p1
    };
    let born = if outcome { p1 } else { 1.0 - p1 };
    // a near-certain outcome still carries O(sqrt(1 - born)) cross terms
    state.project(site, outcome);
    MeasurementEvent {
        time,
        site,
        outcome,
        born_probability: born,
    }
}

/// `<c^dag c>` block of a number-conserving pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct NumberState(pub DMatrix<Complex64>);

impl Measurable for NumberState {
    fn sites(&self) -> usize {
        self.0.nrows()
    }

    fn occupation(&self, site: usize) -> f64 {
        self.0[(site, site)].re
    }

    fn project(&mut self, site: usize, outcome: bool) {
        let c = &mut self.0;
        let l = c.nrows();
        let ckk = c[(site, site)].re;
        let col: Vec<Complex64> = (0..l).map(|i| c[(i, site)]).collect();
        let row: Vec<Complex64> = (0..l).map(|j| c[(site, j)]).collect();
        let scale = if outcome { -1.0 / ckk } else { 1.0 / (1.0 - ckk) };
        for i in 0..l {
            for j in 0..l {
                c[(i, j)] += col[i] * row[j] * scale;
            }
        }
        for i in 0..l {
            c[(i, site)] = Complex64::new(0.0, 0.0);
            c[(site, i)] = Complex64::new(0.0, 0.0);
        }
        c[(site, site)] = Complex64::new(if outcome { 1.0 } else { 0.0 }, 0.0);
    }
}

/// Majorana covariance of a pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceState(pub DMatrix<f64>);

impl Measurable for CovarianceState {
    fn sites(&self) -> usize {
        self.0.nrows() / 2
    }

    fn occupation(&self, site: usize) -> f64 {
        0.5 * (1.0 - self.0[(2 * site, 2 * site + 1)])
    }

    fn project(&mut self, site: usize, outcome: bool) {
        project_pair(&mut self.0, site, outcome);
    }
}

// Gaussian conditioning on the pair (2k, 2k+1): with s = 1 - 2n,
// Gamma' = Gamma + s / (1 + s Gamma_ab) (u_b u_a^T - u_a u_b^T), then the
// pair is decoupled and set to the measured value.
fn project_pair(g: &mut DMatrix<f64>, site: usize, outcome: bool) {
    let (a, b) = (2 * site, 2 * site + 1);
    let n = g.nrows();
    let s = if outcome { -1.0 } else { 1.0 };
    let denom = 1.0 + s * g[(a, b)];
    let ua: Vec<f64> = (0..n).map(|i| g[(i, a)]).collect();
    let ub: Vec<f64> = (0..n).map(|i| g[(i, b)]).collect();
    let f = s / denom;
    for i in 0..n {
        for j in 0..n {
            g[(i, j)] += f * (ub[i] * ua[j] - ua[i] * ub[j]);
        }
    }
    for i in 0..n {
        g[(i, a)] = 0.0;
        g[(a, i)] = 0.0;
        g[(i, b)] = 0.0;
        g[(b, i)] = 0.0;
    }
    g[(a, b)] = s;
    g[(b, a)] = -s;
}

fn check_site(state: &GaussianState, site: usize) -> Result<()> {
    if site >= state.sites() {
        return Err(Error::InvalidSize(format!(
            "site {site} outside a chain of {}",
            state.sites()
        )));
    }
    Ok(())
}

/// Projective measurement of `n_site` on a pure Gaussian state.
pub fn measure_occupation<R: Rng + ?Sized>(
    state: &GaussianState,
    site: usize,
    time: f64,
    rng: &mut R,
) -> Result<(bool, GaussianState, MeasurementEvent)> {
    check_site(state, site)?;
    let mut work = CovarianceState(state.covariance().matrix().clone());
    let event = measure(&mut work, site, time, rng);
    let next = GaussianState::from_covariance(CovarianceMatrix::from_matrix_unchecked(work.0));
    Ok((event.outcome, next, event))
}

/// Projective `Z_site` measurement; `Z = 1 - 2 n`, so the returned outcome
/// bit is the occupation (`false` for `Z = +1`).
pub fn measure_z<R: Rng + ?Sized>(
    state: &GaussianState,
    site: usize,
    time: f64,
    rng: &mut R,
) -> Result<(bool, GaussianState, MeasurementEvent)> {
    measure_occupation(state, site, time, rng)
}

/// Checks the per-step measurement probability `gamma * dt`.
pub fn check_schedule(rate: f64, dt: f64) -> Result<()> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "measurement rate must be non-negative, got {rate}"
        )));
    }
    if rate * dt > MAX_STEP_PROBABILITY {
        return Err(Error::InvalidParameter(format!(
            "gamma * dt = {} exceeds {MAX_STEP_PROBABILITY}; use a smaller dt",
            rate * dt
        )));
    }
    Ok(())
}

/// One measurement round: every site is measured independently with
/// probability `rate * dt`, in ascending site order.
pub fn measurement_sweep<S: Measurable, R: Rng + ?Sized>(
    state: &mut S,
    rate: f64,
    dt: f64,
    time: f64,
    rng: &mut R,
) -> Result<Vec<MeasurementEvent>> {
    check_schedule(rate, dt)?;
    let p = rate * dt;
    let mut events = Vec::new();
    if p == 0.0 {
        return Ok(events);
    }
    for site in 0..state.sites() {
        let u: f64 = rng.random();
        if u < p {
            events.push(measure(state, site, time, rng));
        }
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn occupied_site_is_certain() {
        let s = GaussianState::occupation_product(&[true, false, true, false]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (out, next, ev) = measure_occupation(&s, 0, 0.0, &mut rng).unwrap();
        assert!(out);
        assert_eq!(ev.born_probability, 1.0);
        assert_eq!(next.covariance(), s.covariance());
        let (out, _, _) = measure_z(&s, 1, 0.0, &mut rng).unwrap();
        assert!(!out);
    }

    #[test]
    fn number_block_projection_on_fock_state() {
        let mut c = NumberState(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
        ])));
        let before = c.clone();
        c.project(0, true);
        assert_eq!(c, before);
    }

    #[test]
    fn zero_rate_never_measures() {
        let mut st = CovarianceState(CovarianceMatrix::vacuum(6).unwrap().into_matrix());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert!(measurement_sweep(&mut st, 0.0, 0.05, 0.0, &mut rng).unwrap().is_empty());
        }
    }

    #[test]
    fn schedule_guard() {
        assert!(check_schedule(20.0, 0.05).is_err());
        assert!(check_schedule(10.0, 0.05).is_ok());
        assert!(check_schedule(-1.0, 0.05).is_err());
    }

    #[test]
    fn bad_site_rejected() {
        let s = GaussianState::vacuum(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(measure_occupation(&s, 2, 0.0, &mut rng).is_err());
    }
}
