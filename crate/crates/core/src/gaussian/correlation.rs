use nalgebra::DMatrix;
use num_complex::Complex64;

use super::CovarianceMatrix;
use crate::error::{Error, Result};

const HERMITICITY_TOL: f64 = 1e-12;

/// Nambu correlation matrix `C_{mu nu} = <cc_mu^dag cc_nu>` with the
/// ordering `cc_{2i} = c_i`, `cc_{2i+1} = c_i^dag` (zero-based).
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationMatrix {
    sites: usize,
    matrix: DMatrix<Complex64>,
}

/// Block-diagonal unitary `Omega` with `gamma = sqrt(2) Omega cc`:
/// per site `[[1, 1], [-i, i]] / sqrt(2)`.
pub fn omega(sites: usize) -> DMatrix<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut w = DMatrix::<Complex64>::zeros(2 * sites, 2 * sites);
    for i in 0..sites {
        w[(2 * i, 2 * i)] = Complex64::new(s, 0.0);
        w[(2 * i, 2 * i + 1)] = Complex64::new(s, 0.0);
        w[(2 * i + 1, 2 * i)] = Complex64::new(0.0, -s);
        w[(2 * i + 1, 2 * i + 1)] = Complex64::new(0.0, s);
    }
    w
}

impl CorrelationMatrix {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        let n = matrix.nrows();
        if !matrix.is_square() || n == 0 || !n.is_multiple_of(2) {
            return Err(Error::InvalidSize(format!(
                "correlation matrix must be 2L x 2L, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let herm = (&matrix - matrix.adjoint()).camax();
        if herm > HERMITICITY_TOL {
            return Err(Error::InvalidCovariance(format!(
                "correlation matrix not Hermitian (defect {herm:e})"
            )));
        }
        Ok(CorrelationMatrix { sites: n / 2, matrix })
    }

    /// `C = Omega^T (1 + i Gamma) / 2 Omega^*`.
    pub fn from_covariance(cov: &CovarianceMatrix) -> Self {
        let l = cov.sites();
        let w = omega(l);
        let g = cov.matrix().map(|x| Complex64::new(0.0, x));
        let m = (DMatrix::<Complex64>::identity(2 * l, 2 * l) + g) * Complex64::new(0.5, 0.0);
        let c = w.transpose() * m * w.conjugate();
        CorrelationMatrix {
            sites: l,
            matrix: hermitize(c),
        }
    }

    /// `Gamma = -i (2 Omega^* C Omega^T - 1)`.
    pub fn to_covariance(&self) -> CovarianceMatrix {
        let w = omega(self.sites);
        let n = 2 * self.sites;
        let inner = w.conjugate() * &self.matrix * w.transpose() * Complex64::new(2.0, 0.0)
            - DMatrix::<Complex64>::identity(n, n);
        let g = inner.map(|z| (z * Complex64::new(0.0, -1.0)).re);
        CovarianceMatrix::from_matrix_unchecked(g)
    }

    /// Nambu matrix of a particle-number conserving state with
    /// `number[(i, j)] = <c_i^dag c_j>`.
    pub fn from_number_block(number: &DMatrix<Complex64>) -> Self {
        let l = number.nrows();
        let mut c = DMatrix::<Complex64>::zeros(2 * l, 2 * l);
        for i in 0..l {
            for j in 0..l {
                c[(2 * i, 2 * j)] = number[(i, j)];
                let delta = if i == j { 1.0 } else { 0.0 };
                c[(2 * i + 1, 2 * j + 1)] = Complex64::new(delta, 0.0) - number[(j, i)];
            }
        }
        CorrelationMatrix { sites: l, matrix: c }
    }

    /// The `L x L` block `<c_i^dag c_j>`.
    pub fn number_block(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.sites, self.sites, |i, j| self.matrix[(2 * i, 2 * j)])
    }

    pub fn occupation(&self, site: usize) -> f64 {
        self.matrix[(2 * site, 2 * site)].re
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub(crate) fn from_matrix_unchecked(matrix: DMatrix<Complex64>) -> Self {
        CorrelationMatrix {
            sites: matrix.nrows() / 2,
            matrix: hermitize(matrix),
        }
    }
}

fn hermitize(m: DMatrix<Complex64>) -> DMatrix<Complex64> {
    (&m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Covariance of a number-conserving state straight from `<c_i^dag c_j>`.
pub fn covariance_from_number_block(number: &DMatrix<Complex64>) -> CovarianceMatrix {
    let l = number.nrows();
    let mut g = DMatrix::<f64>::zeros(2 * l, 2 * l);
    for i in 0..l {
        for j in 0..l {
            let c = number[(i, j)];
            let delta = if i == j { 1.0 } else { 0.0 };
            g[(2 * i, 2 * j)] = 2.0 * c.im;
            g[(2 * i + 1, 2 * j + 1)] = 2.0 * c.im;
            g[(2 * i, 2 * j + 1)] = delta - 2.0 * c.re;
            g[(2 * i + 1, 2 * j)] = 2.0 * c.re - delta;
        }
    }
    CovarianceMatrix::from_matrix_unchecked(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_is_unitary() {
        let w = omega(3);
        let p = &w * w.adjoint();
        assert!((p - DMatrix::<Complex64>::identity(6, 6)).camax() < 1e-15);
    }

    #[test]
    fn vacuum_has_no_particles() {
        let g = CovarianceMatrix::vacuum(2).unwrap();
        let c = CorrelationMatrix::from_covariance(&g);
        assert!(c.occupation(0).abs() < 1e-15);
        assert!((c.matrix()[(1, 1)].re - 1.0).abs() < 1e-15);
        assert!((c.to_covariance().matrix() - g.matrix()).amax() < 1e-15);
    }

    #[test]
    fn occupation_read_back() {
        let g = CovarianceMatrix::occupation_product(&[true, false]).unwrap();
        let c = CorrelationMatrix::from_covariance(&g);
        assert!((c.occupation(0) - 1.0).abs() < 1e-15);
        assert!(c.occupation(1).abs() < 1e-15);
    }

    #[test]
    fn number_block_paths_agree() {
        // an arbitrary Hermitian projector-like number block
        let v = DMatrix::from_row_slice(
            3,
            1,
            &[
                Complex64::new(0.6, 0.0),
                Complex64::new(0.0, 0.64),
                Complex64::new(0.48, 0.0),
            ],
        );
        let n = &v * v.adjoint();
        let direct = covariance_from_number_block(&n);
        let via_nambu = CorrelationMatrix::from_number_block(&n).to_covariance();
        assert!((direct.matrix() - via_nambu.matrix()).amax() < 1e-14);
        let back = CorrelationMatrix::from_covariance(&direct).number_block();
        assert!((back - n).camax() < 1e-14);
    }
}
