mod common;

use common::*;
use fermion_magic::dense;
use fermion_magic::dynamics::HoppingModel;
use fermion_magic::sampler::{
    estimate_sre, estimate_sres, exact_sre_enumeration, SamplingOptions, SequentialSampler, StreamKey,
};
use fermion_magic::{GaussianState, MajoranaString};
use rand::Rng;

#[test]
fn chain_reproduces_string_probability() {
    let mut r = rng(20);
    for l in 2..=6 {
        let (_, state) = random_pure_state(&neel(l), &mut r);
        let sampler = SequentialSampler::new(&state).unwrap();
        for _ in 0..50 {
            let s = sampler.sample(&mut r).unwrap();
            let direct = state.string_probability(&s.string);
            assert!((s.log2_probability.exp2() - direct).abs() < 1e-8);
            assert!((s.log_probability() - direct.ln()).abs() < 1e-8);
        }
    }
}

#[test]
fn conditionals_are_normalized_marginal_ratios() {
    let mut r = rng(21);
    let (_, state) = random_pure_state(&[true, false, true], &mut r);
    let sampler = SequentialSampler::with_refresh(&state, 4).unwrap();
    let mut s = sampler.start();
    let mut prefix_prob = 1.0;
    for _ in 0..state.modes() {
        let p0 = s.zero_probability().unwrap();
        let mut with0 = s.prefix().to_vec();
        with0.push(false);
        let mut with1 = s.prefix().to_vec();
        with1.push(true);
        let m0 = state.marginal_probability(&with0);
        let m1 = state.marginal_probability(&with1);
        assert!((p0 + (1.0 - p0) - 1.0).abs() < 1e-10);
        assert!((m0 / prefix_prob - p0).abs() < 1e-10);
        assert!((m1 / prefix_prob - (1.0 - p0)).abs() < 1e-10);
        let bit = if p0 <= 0.0 {
            true
        } else if p0 >= 1.0 {
            false
        } else {
            r.random()
        };
        prefix_prob = if bit { m1 } else { m0 };
        s.push(bit).unwrap();
        assert!((s.log2_probability().exp2() - prefix_prob).abs() < 1e-10);
    }
}

#[test]
fn vacuum_samples_are_uniform_over_pairs() {
    let state = GaussianState::vacuum(2).unwrap();
    let counts = empirical_counts(&state, 40_000, 22);
    let probs: Vec<f64> = (0..16u64)
        .map(|i| state.string_probability(&MajoranaString::from_index(i, 4)))
        .collect();
    for (i, (&c, &p)) in counts.iter().zip(&probs).enumerate() {
        if p == 0.0 {
            assert_eq!(c, 0, "string {i} has zero probability");
        } else {
            assert!((p - 0.25).abs() < 1e-15);
        }
    }
    assert!(chi_square_p(&counts, &probs, 40_000) > 0.001);
}

#[test]
fn quenched_frequencies_pass_chi_square() {
    let state = quenched_neel(4, 1.0);
    let h = dense::hopping_hamiltonian(&HoppingModel::new(4, 0.05).unwrap().single_particle());
    let psi = dense::evolve(&dense::occupation_state(&neel(4)).unwrap(), &h, 1.0);
    let rho = dense::density(&psi);
    let probs: Vec<f64> = (0..256u64)
        .map(|i| {
            let x = MajoranaString::from_index(i, 8);
            dense::string_expectation(&rho, &x.support()).norm_sqr() / 16.0
        })
        .collect();
    let total = 200_000;
    let counts = empirical_counts(&state, total, 23);
    let p = chi_square_p(&counts, &probs, total);
    assert!(p > 0.001, "p = {p}");
}

#[test]
fn subsystem_sampling_matches_enumeration() {
    let mut r = rng(24);
    let (_, state) = random_pure_state(&neel(5), &mut r);
    let sub = state.subsystem(3).unwrap();
    let probs: Vec<f64> = (0..64u64)
        .map(|i| sub.string_probability(&MajoranaString::from_index(i, 6)))
        .collect();
    let total = 100_000;
    let counts = empirical_counts(&sub, total, 25);
    assert!(chi_square_p(&counts, &probs, total) > 0.001);
}

#[test]
fn exact_enumeration_matches_dense_pauli_spectrum() {
    let mut r = rng(26);
    for l in 2..=4 {
        let (psi, state) = random_pure_state(&neel(l), &mut r);
        let rho = dense::density(&psi);
        for alpha in [0.5, 1.0, 2.0, 3.0] {
            let fast = exact_sre_enumeration(&state, alpha).unwrap();
            let slow = dense::stabilizer_renyi_entropy(&rho, alpha);
            assert!((fast - slow).abs() < 1e-8, "L={l} alpha={alpha}: {fast} vs {slow}");
            assert!(fast <= l as f64 * std::f64::consts::LN_2 + 1e-12);
            assert!(fast >= -(l as f64) * std::f64::consts::LN_2 - 1e-12);
        }
        // mixed reduced state
        let red = dense::reduce_leading(&rho, l - 1);
        let sub = state.subsystem(l - 1).unwrap();
        let fast = exact_sre_enumeration(&sub, 2.0).unwrap();
        assert!((fast - dense::stabilizer_renyi_entropy(&red, 2.0)).abs() < 1e-8);
    }
}

#[test]
fn estimate_agrees_with_enumeration() {
    let state = quenched_neel(4, 1.0);
    for alpha in [1.0, 2.0] {
        let exact = exact_sre_enumeration(&state, alpha).unwrap();
        let est = estimate_sre(&state, alpha, 100_000, &mut rng(27)).unwrap();
        assert!(
            (est.value - exact).abs() < 3.0 * est.std_error,
            "alpha={alpha}: {} +- {} vs {exact}",
            est.value,
            est.std_error
        );
        assert!(est.std_error > 0.0);
    }
}

#[test]
fn estimator_is_unbiased_over_seeds() {
    let state = quenched_neel(4, 1.0);
    let exact = exact_sre_enumeration(&state, 2.0).unwrap();
    let opts = SamplingOptions {
        samples: 1000,
        ..Default::default()
    };
    let mut values = Vec::new();
    let mut var = 0.0;
    for seed in 0..100 {
        let e = estimate_sres(&state, &[2.0], StreamKey::new(seed), opts).unwrap()[0];
        values.push(e.value);
        var += e.std_error.powi(2);
    }
    let mean = values.iter().sum::<f64>() / 100.0;
    let aggregated = var.sqrt() / 100.0;
    assert!(
        (mean - exact).abs() < 3.0 * aggregated,
        "{mean} vs {exact} (+- {aggregated})"
    );
}

#[test]
fn estimates_are_deterministic() {
    let state = quenched_neel(6, 0.8);
    let opts = SamplingOptions {
        samples: 300,
        ..Default::default()
    };
    let key = StreamKey::new(99).trajectory(4).snapshot(2);
    let a = estimate_sres(&state, &[1.0, 2.0], key, opts).unwrap();
    let b = estimate_sres(&state, &[1.0, 2.0], key, opts).unwrap();
    assert_eq!(a, b);
    let c = estimate_sres(&state, &[1.0, 2.0], key.snapshot(3), opts).unwrap();
    assert_ne!(a, c);
}

#[test]
fn standard_error_scales_as_inverse_root_samples() {
    let state = quenched_neel(8, 2.0);
    let key = StreamKey::new(5);
    let small = estimate_sres(
        &state,
        &[2.0],
        key,
        SamplingOptions {
            samples: 2000,
            ..Default::default()
        },
    )
    .unwrap()[0];
    let large = estimate_sres(
        &state,
        &[2.0],
        key.trajectory(1),
        SamplingOptions {
            samples: 8000,
            ..Default::default()
        },
    )
    .unwrap()[0];
    let ratio = small.std_error / large.std_error;
    assert!(ratio > 2.0 / 1.5 && ratio < 2.0 * 1.5, "ratio {ratio}");
}

#[test]
fn neel_state_matches_dense_oracle() {
    let state = GaussianState::occupation_product(&neel(4)).unwrap();
    let rho = dense::density(&dense::occupation_state(&neel(4)).unwrap());
    let exact = dense::stabilizer_renyi_entropy(&rho, 2.0);
    let est = estimate_sre(&state, 2.0, 1000, &mut rng(28)).unwrap();
    assert!(exact.abs() < 1e-12);
    assert_eq!(est.value, 0.0);
}
