use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{CovarianceMatrix, MajoranaString};
use crate::error::{Error, Result};
use crate::linalg;

/// States with `|purity - 1|` below this are flagged pure.
pub const PURITY_TOL: f64 = 1e-8;
/// Round-off window below zero that is clamped to an exact zero probability.
pub const CLAMP_EPS: f64 = 1e-12;
const ORTHOGONALITY_TOL: f64 = 1e-10;
const U1_TOL: f64 = 1e-10;

static CLAMP_EVENTS: AtomicU64 = AtomicU64::new(0);

/// Number of probabilities in `[-1e-12, 0)` clamped to zero so far.
pub fn clamp_events() -> u64 {
    CLAMP_EVENTS.load(Ordering::Relaxed)
}

pub(crate) fn clamp_probability(p: f64) -> f64 {
    if p < 0.0 {
        if p >= -CLAMP_EPS {
            CLAMP_EVENTS.fetch_add(1, Ordering::Relaxed);
        }
        0.0
    } else {
        p
    }
}

/// A fermionic Gaussian state, fully described by its covariance matrix.
#[derive(Clone, Debug)]
pub struct GaussianState {
    cov: CovarianceMatrix,
    // log det(1 + Gamma), the normalization of the string distribution
    log_norm: f64,
    pure: bool,
    number_conserving: bool,
}

impl GaussianState {
    pub fn from_covariance(cov: CovarianceMatrix) -> Self {
        let n = cov.modes();
        let shifted = DMatrix::<f64>::identity(n, n) + cov.matrix();
        let log_norm = linalg::log_det(&shifted).log_abs;
        let purity = (log_norm - cov.sites() as f64 * std::f64::consts::LN_2).exp();
        let number_conserving = commutes_with_vacuum(cov.matrix());
        GaussianState {
            cov,
            log_norm,
            pure: (purity - 1.0).abs() < PURITY_TOL,
            number_conserving,
        }
    }

    pub fn vacuum(sites: usize) -> Result<Self> {
        Ok(Self::from_covariance(CovarianceMatrix::vacuum(sites)?))
    }

    /// Fock product `|n_1 n_2 ...>`.
    pub fn occupation_product(occupations: &[bool]) -> Result<Self> {
        Ok(Self::from_covariance(CovarianceMatrix::occupation_product(
            occupations,
        )?))
    }

    pub fn covariance(&self) -> &CovarianceMatrix {
        &self.cov
    }

    pub fn sites(&self) -> usize {
        self.cov.sites()
    }

    pub fn modes(&self) -> usize {
        self.cov.modes()
    }

    pub fn is_pure(&self) -> bool {
        self.pure
    }

    /// True when `[Gamma, Gamma_0] = 0`, i.e. no anomalous correlations.
    pub fn is_number_conserving(&self) -> bool {
        self.number_conserving
    }

    /// `Gamma -> O Gamma O^T` for a real orthogonal `O`.
    pub fn rotate(&self, o: &DMatrix<f64>) -> Result<Self> {
        let n = self.modes();
        if o.nrows() != n || o.ncols() != n {
            return Err(Error::InvalidSize(format!(
                "rotation must be {n}x{n}, got {}x{}",
                o.nrows(),
                o.ncols()
            )));
        }
        let deviation = linalg::orthogonality_defect(o);
        if deviation > ORTHOGONALITY_TOL {
            return Err(Error::NotOrthogonal { deviation });
        }
        let g = o * self.cov.matrix() * o.transpose();
        let mut next = Self::from_covariance(CovarianceMatrix::from_matrix_unchecked(g));
        next.pure = self.pure;
        Ok(next)
    }

    /// `Tr rho^2 = det(1 + Gamma) / 2^L`.
    pub fn purity(&self) -> f64 {
        (self.log_norm - self.sites() as f64 * std::f64::consts::LN_2).exp()
    }

    /// `<n_k> = (1 - Gamma_{2k, 2k+1}) / 2`.
    pub fn occupation(&self, site: usize) -> f64 {
        let g = self.cov.matrix();
        0.5 * (1.0 - g[(2 * site, 2 * site + 1)])
    }

    /// `Tr(rho gamma^x) = i^{|x|/2} Pf(Gamma|_x)`. The value is real for
    /// `|x| = 0 mod 4` and imaginary for `|x| = 2 mod 4`; odd weights vanish.
    pub fn majorana_expectation(&self, x: &MajoranaString) -> Complex64 {
        self.check_len(x);
        let w = x.weight();
        if w % 2 == 1 {
            return Complex64::new(0.0, 0.0);
        }
        let sub = linalg::principal_submatrix(self.cov.matrix(), &x.support());
        let pf = linalg::pfaffian(&sub);
        let phase = match (w / 2) % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        phase * pf
    }

    /// `pi(x) = det(Gamma|_x) / det(1 + Gamma)`.
    pub fn string_probability(&self, x: &MajoranaString) -> f64 {
        match self.log_string_probability(x) {
            Some(lp) => lp.exp(),
            None => 0.0,
        }
    }

    /// Natural log of `pi(x)`, or `None` when the probability is zero.
    pub fn log_string_probability(&self, x: &MajoranaString) -> Option<f64> {
        self.check_len(x);
        if x.weight() % 2 == 1 {
            return None;
        }
        let sub = linalg::principal_submatrix(self.cov.matrix(), &x.support());
        let ld = linalg::log_det(&sub);
        if ld.is_zero() {
            return None;
        }
        let lp = ld.log_abs - self.log_norm;
        if ld.sign < 0.0 {
            clamp_probability(-lp.exp());
            return None;
        }
        Some(lp)
    }

    /// Marginal probability of the first `prefix.len()` bits, from a single
    /// determinant over the selected prefix modes and all unspecified modes,
    /// with unit diagonal on the unspecified block.
    pub fn marginal_probability(&self, prefix: &[bool]) -> f64 {
        let n = self.modes();
        assert!(
            !prefix.is_empty() && prefix.len() <= n,
            "prefix length must lie in [1, 2L]"
        );
        let mu = prefix.len();
        let idx: Vec<usize> = prefix
            .iter()
            .enumerate()
            .filter_map(|(k, &b)| b.then_some(k))
            .chain(mu..n)
            .collect();
        let mut sub = linalg::principal_submatrix(self.cov.matrix(), &idx);
        let fixed = idx.len() - (n - mu);
        for k in fixed..idx.len() {
            sub[(k, k)] += 1.0;
        }
        let ld = linalg::log_det(&sub);
        if ld.is_zero() {
            return 0.0;
        }
        clamp_probability(ld.sign * (ld.log_abs - self.log_norm).exp())
    }

    /// Reduced state on sites `0..l`: the leading `2l x 2l` block.
    pub fn subsystem(&self, l: usize) -> Result<Self> {
        if l == 0 || l > self.sites() {
            return Err(Error::InvalidSize(format!(
                "subsystem size {l} outside [1, {}]",
                self.sites()
            )));
        }
        if l == self.sites() {
            return Ok(self.clone());
        }
        Ok(Self::from_covariance(self.cov.leading_block(l)))
    }

    fn check_len(&self, x: &MajoranaString) {
        assert_eq!(x.len(), self.modes(), "Majorana string length must equal 2L");
    }
}

fn commutes_with_vacuum(g: &DMatrix<f64>) -> bool {
    let l = g.nrows() / 2;
    for i in 0..l {
        for j in 0..l {
            let a = g[(2 * i, 2 * j)];
            let d = g[(2 * i + 1, 2 * j + 1)];
            let b = g[(2 * i, 2 * j + 1)];
            let c = g[(2 * i + 1, 2 * j)];
            if (a - d).abs() > U1_TOL || (b + c).abs() > U1_TOL {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::CorrelationMatrix;

    fn all_strings(modes: usize) -> impl Iterator<Item = MajoranaString> {
        (0..(1u64 << modes)).map(move |i| MajoranaString::from_index(i, modes))
    }

    #[test]
    fn vacuum_purity_is_one() {
        for l in 1..6 {
            let s = GaussianState::vacuum(l).unwrap();
            assert!((s.purity() - 1.0).abs() < 1e-14);
            assert!(s.is_pure());
            assert!(s.is_number_conserving());
        }
    }

    #[test]
    fn maximally_mixed_purity() {
        let cov = CovarianceMatrix::new(DMatrix::zeros(2, 2)).unwrap();
        let s = GaussianState::from_covariance(cov);
        assert!((s.purity() - 0.5).abs() < 1e-15);
        assert!(!s.is_pure());
    }

    #[test]
    fn partially_polarized_purity() {
        let cov = CovarianceMatrix::new(DMatrix::from_row_slice(2, 2, &[0.0, 0.5, -0.5, 0.0])).unwrap();
        let s = GaussianState::from_covariance(cov);
        // rho = diag(0.75, 0.25)
        assert!((s.purity() - 0.625).abs() < 1e-15);
    }

    #[test]
    fn occupation_product_reads_back() {
        let empty = GaussianState::occupation_product(&[false; 4]).unwrap();
        let vac = GaussianState::vacuum(4).unwrap();
        assert_eq!(empty.covariance(), vac.covariance());
        let s = GaussianState::occupation_product(&[true, false]).unwrap();
        let c = CorrelationMatrix::from_covariance(s.covariance());
        assert!((c.occupation(0) - 1.0).abs() < 1e-15);
        assert!(c.occupation(1).abs() < 1e-15);
        assert_eq!(s.occupation(0), 1.0);
        assert_eq!(s.occupation(1), 0.0);
    }

    #[test]
    fn identity_expectation_is_one() {
        let s = GaussianState::vacuum(3).unwrap();
        let e = s.majorana_expectation(&MajoranaString::identity(6));
        assert_eq!(e, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn vacuum_pair_expectation_has_unit_magnitude() {
        let s = GaussianState::vacuum(3).unwrap();
        let mut bits = vec![false; 6];
        bits[0] = true;
        bits[1] = true;
        let e = s.majorana_expectation(&MajoranaString::new(bits));
        assert_eq!(e, Complex64::new(0.0, 1.0));
        assert!((e.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn odd_strings_vanish() {
        let s = GaussianState::vacuum(2).unwrap();
        let x = MajoranaString::from_index(0b0111, 4);
        assert_eq!(s.majorana_expectation(&x), Complex64::new(0.0, 0.0));
        assert_eq!(s.string_probability(&x), 0.0);
    }

    #[test]
    fn identity_string_probability_is_inverse_dimension() {
        let s = GaussianState::vacuum(2).unwrap();
        assert!((s.string_probability(&MajoranaString::identity(4)) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn vacuum_all_ones_probability() {
        for l in 1..6 {
            let s = GaussianState::vacuum(l).unwrap();
            let x = MajoranaString::new(vec![true; 2 * l]);
            let expected = 0.5f64.powi(l as i32);
            assert!((s.string_probability(&x) - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn vacuum_distribution_normalized() {
        let s = GaussianState::vacuum(3).unwrap();
        let total: f64 = all_strings(6).map(|x| s.string_probability(&x)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_prefix_marginal_is_string_probability() {
        let cov = CovarianceMatrix::new(DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, 0.3, 0.2, 0.1, -0.3, 0.0, 0.4, -0.2, -0.2, -0.4, 0.0, 0.5, -0.1, 0.2, -0.5, 0.0,
            ],
        ))
        .unwrap();
        let s = GaussianState::from_covariance(cov);
        for x in all_strings(4) {
            let m = s.marginal_probability(x.bits());
            assert!((m - s.string_probability(&x)).abs() < 1e-14);
        }
        let p0 = s.marginal_probability(&[false]);
        let p1 = s.marginal_probability(&[true]);
        assert!((p0 + p1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn subsystem_bounds() {
        let s = GaussianState::vacuum(4).unwrap();
        assert!(s.subsystem(0).is_err());
        assert!(s.subsystem(5).is_err());
        let full = s.subsystem(4).unwrap();
        assert_eq!(full.covariance(), s.covariance());
        let part = s.subsystem(2).unwrap();
        assert_eq!(part.covariance(), GaussianState::vacuum(2).unwrap().covariance());
        assert!(part.is_pure());
    }

    #[test]
    fn identity_rotation_is_noop_and_bad_rotation_rejected() {
        let s = GaussianState::occupation_product(&[true, false, true]).unwrap();
        let r = s.rotate(&DMatrix::identity(6, 6)).unwrap();
        assert_eq!(r.covariance(), s.covariance());
        let bad = DMatrix::<f64>::identity(6, 6) * 1.1;
        assert!(matches!(s.rotate(&bad), Err(Error::NotOrthogonal { .. })));
    }
}
