#![allow(dead_code)]

use fermion_magic::dense::{self, Ket};
use fermion_magic::dynamics::{majorana_propagator, HoppingModel};
use fermion_magic::gaussian::covariance_from_number_block;
use fermion_magic::linalg;
use fermion_magic::sampler::SequentialSampler;
use fermion_magic::CorrelationMatrix;
use fermion_magic::{CovarianceMatrix, GaussianState};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_generator(modes: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let mut a = DMatrix::from_fn(modes, modes, |_, _| rng.random_range(-1.0..1.0));
    linalg::antisymmetrize(&mut a);
    a
}

/// A random pure Gaussian state as a (dense ket, Gaussian state) pair.
pub fn random_pure_state(occupations: &[bool], rng: &mut impl Rng) -> (Ket, GaussianState) {
    let a = random_generator(2 * occupations.len(), rng);
    let h = dense::quadratic_hamiltonian(&a.map(|x| Complex64::new(x, 0.0)));
    let psi = dense::evolve(&dense::occupation_state(occupations).unwrap(), &h, 1.0);
    let start = GaussianState::occupation_product(occupations).unwrap();
    let state = start.rotate(&majorana_propagator(&a, 1.0)).unwrap();
    (psi, state)
}

pub fn neel(sites: usize) -> Vec<bool> {
    (0..sites).map(|j| j % 2 == 0).collect()
}

pub fn max_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

pub fn dense_covariance(psi: &Ket) -> CovarianceMatrix {
    dense::covariance_of(psi).unwrap()
}

pub fn quenched_neel(l: usize, t: f64) -> GaussianState {
    let model = HoppingModel::new(l, 0.05).unwrap();
    let start = GaussianState::occupation_product(&neel(l)).unwrap();
    let c = CorrelationMatrix::from_covariance(start.covariance()).number_block();
    GaussianState::from_covariance(covariance_from_number_block(&model.evolve_number_block(&c, t)))
}

/// p-value of a chi-square goodness-of-fit test, pooling cells with
/// expected count below 5.
pub fn chi_square_p(counts: &[u64], probs: &[f64], total: u64) -> f64 {
    let mut stat = 0.0;
    let mut cells = 0usize;
    let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
    for (&c, &p) in counts.iter().zip(probs) {
        let e = p * total as f64;
        if e < 5.0 {
            pooled_obs += c as f64;
            pooled_exp += e;
            continue;
        }
        stat += (c as f64 - e).powi(2) / e;
        cells += 1;
    }
    if pooled_exp >= 5.0 {
        stat += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        cells += 1;
    }
    let dist = ChiSquared::new((cells - 1) as f64).unwrap();
    1.0 - dist.cdf(stat)
}

pub fn empirical_counts(state: &GaussianState, samples: u64, seed: u64) -> Vec<u64> {
    let n = state.modes();
    let sampler = SequentialSampler::new(state).unwrap();
    let mut rng = rng(seed);
    let mut counts = vec![0u64; 1 << n];
    for _ in 0..samples {
        let s = sampler.sample(&mut rng).unwrap();
        counts[s.string.to_index() as usize] += 1;
    }
    counts
}
