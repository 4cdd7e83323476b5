//! Dense-oracle validation suite.
//!
//! Every check compares a polynomial routine against the brute-force
//! Hilbert-space implementation in [`crate::dense`] on small chains and
//! reports the largest deviation seen.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::{self, Ket, Operator};
use crate::dynamics::{majorana_propagator, HoppingModel};
use crate::error::Result;
use crate::gaussian::{covariance_from_number_block, CorrelationMatrix, MajoranaString};
use crate::monitoring::{CovarianceState, Measurable, Protocol, TrajectoryEngine, TrajectoryParams};
use crate::sampler::{exact_sre_enumeration, StreamKey};
use crate::GaussianState;

/// One named comparison against the dense oracle.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub max_error: f64,
    pub tolerance: f64,
    /// Number of individual comparisons folded into `max_error`.
    pub comparisons: usize,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.max_error.is_finite() && self.max_error < self.tolerance
    }
}

#[derive(Default)]
struct Tally {
    max: f64,
    count: usize,
}

impl Tally {
    fn add(&mut self, err: f64) {
        self.max = if err.is_nan() { f64::NAN } else { self.max.max(err) };
        self.count += 1;
    }

    fn finish(self, name: &'static str, tolerance: f64) -> Check {
        Check {
            name,
            max_error: self.max,
            tolerance,
            comparisons: self.count,
        }
    }
}

fn neel(sites: usize) -> Vec<bool> {
    (0..sites).map(|j| j % 2 == 0).collect()
}

fn max_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

/// A random pure Gaussian state as a (dense ket, Gaussian state) pair.
pub fn random_pure_state(occupations: &[bool], rng: &mut impl Rng) -> Result<(Ket, GaussianState)> {
    let modes = 2 * occupations.len();
    let mut a = DMatrix::from_fn(modes, modes, |_, _| rng.random_range(-1.0..1.0));
    crate::linalg::antisymmetrize(&mut a);
    let h = dense::quadratic_hamiltonian(&a.map(|x| Complex64::new(x, 0.0)));
    let psi = dense::evolve(&dense::occupation_state(occupations)?, &h, 1.0);
    let state = GaussianState::occupation_product(occupations)?.rotate(&majorana_propagator(&a, 1.0))?;
    Ok((psi, state))
}

/// String-probability normalization and exact SREs for `states` random pure
/// states cycling through `L = 2, 3, 4`.
pub fn enumeration_checks(states: usize, seed: u64) -> Result<[Check; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut norm, mut sre) = (Tally::default(), Tally::default());
    for k in 0..states {
        let l = 2 + k % 3;
        let occ: Vec<bool> = (0..l).map(|_| rng.random()).collect();
        let (psi, state) = random_pure_state(&occ, &mut rng)?;
        let total: f64 = (0..1u64 << (2 * l))
            .map(|i| state.string_probability(&MajoranaString::from_index(i, 2 * l)))
            .sum();
        norm.add((total - 1.0).abs());
        let rho = dense::density(&psi);
        for alpha in [0.5, 1.0, 2.0, 3.0] {
            let fast = exact_sre_enumeration(&state, alpha)?;
            sre.add((fast - dense::stabilizer_renyi_entropy(&rho, alpha)).abs());
        }
    }
    Ok([
        norm.finish("string probabilities sum to one", 1e-9),
        sre.finish("enumerated SRE matches Pauli spectrum", 1e-8),
    ])
}

/// Gaussian projections of random states against dense `P rho P / Tr(P rho)`.
pub fn projection_check(seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally::default();
    for _ in 0..4 {
        let (psi, state) = random_pure_state(&neel(4), &mut rng)?;
        for site in 0..4 {
            for outcome in [false, true] {
                let (proj, p) = dense::project_occupation(&psi, site, outcome);
                if p < 1e-6 {
                    continue;
                }
                let mut work = CovarianceState(state.covariance().matrix().clone());
                work.project(site, outcome);
                tally.add(max_diff(&work.0, dense::covariance_of(&proj)?.matrix()));
            }
        }
    }
    Ok(tally.finish("measurement projection", 1e-8))
}

/// Hopping quench two-point functions at `L = 4`.
pub fn hopping_check() -> Result<Check> {
    let model = HoppingModel::new(4, 0.05)?;
    let occ = neel(4);
    let start = GaussianState::occupation_product(&occ)?;
    let h = dense::hopping_hamiltonian(&model.single_particle());
    let mut psi = dense::occupation_state(&occ)?;
    let c0 = CorrelationMatrix::from_covariance(start.covariance()).number_block();
    let mut tally = Tally::default();
    for k in 1..=10 {
        psi = dense::evolve(&psi, &h, 0.25);
        let c = model.evolve_number_block(&c0, 0.25 * k as f64);
        let g = covariance_from_number_block(&c);
        tally.add(max_diff(g.matrix(), dense::covariance_of(&psi)?.matrix()));
    }
    Ok(tally.finish("hopping evolution", 1e-8))
}

fn replay(params: TrajectoryParams, h: &Operator, steps: usize, seed: u64, tally: &mut Tally) -> Result<usize> {
    let mut engine = TrajectoryEngine::new(params.clone(), StreamKey::new(seed))?;
    let mut psi = dense::occupation_state(&params.initial)?;
    let mut events = 0;
    for _ in 0..steps {
        let fired = engine.step()?.to_vec();
        psi = dense::evolve(&psi, h, params.dt);
        for ev in &fired {
            let (proj, p) = dense::project_occupation(&psi, ev.site, ev.outcome);
            tally.add((p - ev.born_probability).abs());
            psi = proj;
            events += 1;
        }
        tally.add(max_diff(
            engine.covariance().matrix(),
            dense::covariance_of(&psi)?.matrix(),
        ));
    }
    Ok(events)
}

/// Monitored trajectories replayed step by step on the dense oracle with the
/// engine's own measurement schedule.
pub fn trajectory_checks(seed: u64) -> Result<[Check; 3]> {
    let mut hopping = Tally::default();
    let mut p = TrajectoryParams::new(Protocol::HoppingProjective, neel(4));
    p.rate = 0.5;
    p.dt = 0.1;
    let h = dense::hopping_hamiltonian(&HoppingModel::new(4, p.dt)?.single_particle());
    replay(p, &h, 100, seed, &mut hopping)?;

    let mut ising = Tally::default();
    let mut p = TrajectoryParams::new(Protocol::IsingProjective, neel(4));
    p.rate = 0.5;
    p.dt = 0.1;
    p.field = 0.8;
    let h = dense::ising_hamiltonian(4, p.coupling, p.field, true);
    replay(p, &h, 80, seed.wrapping_add(1), &mut ising)?;

    let mut noclick = Tally::default();
    let mut p = TrajectoryParams::new(Protocol::IsingNoclick, neel(4));
    p.rate = 0.7;
    p.dt = 0.05;
    let h = dense::noclick_hamiltonian(4, p.coupling, p.rate);
    replay(p, &h, 120, seed.wrapping_add(2), &mut noclick)?;

    Ok([
        hopping.finish("monitored hopping trajectory", 1e-7),
        ising.finish("monitored Ising trajectory", 1e-7),
        noclick.finish("no-click trajectory", 1e-7),
    ])
}

/// The full suite.
pub fn dense_suite(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    checks.extend(enumeration_checks(25, seed)?);
    checks.push(projection_check(seed)?);
    checks.push(hopping_check()?);
    checks.extend(trajectory_checks(seed)?);
    Ok(checks)
}
