use std::f64::consts::LN_2;

use fermion_magic::gge::{gge_covariance, gge_sre, gge_string_probability, GgeSpec};
use fermion_magic::sampler::exact_sre_enumeration;
use fermion_magic::{GaussianState, MajoranaString};
use proptest::prelude::*;

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[test]
fn matches_enumeration_on_small_subsystems() {
    for l in 1..=5 {
        for n in [0.0, 0.125, 0.25, 0.5] {
            let spec = GgeSpec::new(n, l).unwrap();
            let state = GaussianState::from_covariance(gge_covariance(&spec));
            for alpha in [0.5, 1.0, 2.0, 3.0] {
                let exact = exact_sre_enumeration(&state, alpha).unwrap();
                let closed = gge_sre(&spec, alpha).unwrap();
                assert!((exact - closed).abs() < 1e-10, "l={l} n={n} alpha={alpha}");
            }
        }
    }
}

#[test]
fn string_probabilities_match_covariance() {
    let spec = GgeSpec::new(0.25, 2).unwrap();
    let state = GaussianState::from_covariance(gge_covariance(&spec));
    for idx in 0..16u64 {
        let x = MajoranaString::from_index(idx, 4);
        let bits = x.bits();
        let paired = (0..2).all(|j| bits[2 * j] == bits[2 * j + 1]);
        let m = (0..2).filter(|&j| bits[2 * j] && bits[2 * j + 1]).count();
        let expect = if paired {
            gge_string_probability(&spec, m).unwrap()
        } else {
            0.0
        };
        assert!((state.string_probability(&x) - expect).abs() < 1e-14, "{x}");
    }
    assert!((state.purity() - 0.625f64.powi(2)).abs() < 1e-14);
}

#[test]
fn half_filling_exactly_minus_l_log_two() {
    for l in 1..=64 {
        let spec = GgeSpec::new(0.5, l).unwrap();
        for alpha in [0.5, 1.0, 2.0] {
            assert_eq!(gge_sre(&spec, alpha).unwrap(), -(l as f64) * LN_2);
        }
    }
}

proptest! {
    #[test]
    fn normalization(n in 0.0f64..=1.0, l in 1usize..=20) {
        let spec = GgeSpec::new(n, l).unwrap();
        let total: f64 = (0..=l)
            .map(|m| binomial(l, m) * gge_string_probability(&spec, m).unwrap())
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn particle_hole_symmetry(n in 0.0f64..=1.0, l in 1usize..40, alpha in 0.2f64..4.0) {
        let a = gge_sre(&GgeSpec::new(n, l).unwrap(), alpha).unwrap();
        let b = gge_sre(&GgeSpec::new(1.0 - n, l).unwrap(), alpha).unwrap();
        prop_assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn extensive_in_subsystem_size(n in 0.0f64..=1.0, l in 1usize..40, alpha in 0.2f64..4.0) {
        let spec = GgeSpec::new(n, l).unwrap();
        let one = gge_sre(&spec, alpha).unwrap();
        let two = gge_sre(&spec.with_sites(2 * l).unwrap(), alpha).unwrap();
        prop_assert_eq!(two, 2.0 * one);
    }

    #[test]
    fn shannon_is_the_limit(n in 0.01f64..0.49, l in 1usize..10) {
        let spec = GgeSpec::new(n, l).unwrap();
        let at_one = gge_sre(&spec, 1.0).unwrap();
        let near = gge_sre(&spec, 1.0 + 1e-6).unwrap();
        prop_assert!((at_one - near).abs() < 1e-5 * l as f64);
    }
}
