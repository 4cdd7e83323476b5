use nalgebra::DMatrix;
use num_complex::Complex64;

use super::ising::{Boundary, IsingModel, Parity};
use crate::error::{Error, Result};
use crate::gaussian::CovarianceMatrix;

const COLLAPSE_NORM: f64 = 1e-14;

/// Complex generator of `H - i (rate/2) sum_j n_j` in the Majorana
/// representation `(i/4) sum_ab A_ab gamma_a gamma_b`.
#[derive(Clone, Debug)]
pub struct NoClickGenerator {
    matrix: DMatrix<Complex64>,
    rate: f64,
}

impl NoClickGenerator {
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Part generating the Hermitian (unitary) dynamics, `(A - A^dag)/2`.
    pub fn hermitian_part(&self) -> DMatrix<Complex64> {
        (&self.matrix - self.matrix.adjoint()) * Complex64::new(0.5, 0.0)
    }

    /// Map acting on the mode columns over one interval `s`: `exp(A^* s)`.
    pub fn mode_propagator(&self, s: f64) -> DMatrix<Complex64> {
        (self.matrix.conjugate() * Complex64::new(s, 0.0)).exp()
    }
}

/// The no-click generator for an open chain.
pub fn noclick_generator(model: &IsingModel, rate: f64) -> Result<NoClickGenerator> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "measurement rate must be non-negative, got {rate}"
        )));
    }
    if model.boundary() != Boundary::Open {
        return Err(Error::InvalidParameter(
            "no-click evolution requires an open chain".into(),
        ));
    }
    let mut matrix = model.generator(Parity::Even).map(|x| Complex64::new(x, 0.0));
    let damp = Complex64::new(0.0, 0.5 * rate);
    for j in 0..model.sites() {
        matrix[(2 * j, 2 * j + 1)] -= damp;
        matrix[(2 * j + 1, 2 * j)] += damp;
    }
    Ok(NoClickGenerator { matrix, rate })
}

/// The `L` annihilation modes of a pure Gaussian state, stored as the
/// orthonormal columns of a `2L x L` matrix `U` with `Gamma = -i (2 U U^dag - 1)`.
#[derive(Clone, Debug)]
pub struct ModeMatrix {
    modes: DMatrix<Complex64>,
}

impl ModeMatrix {
    pub fn from_occupations(occupations: &[bool]) -> Result<Self> {
        if occupations.is_empty() {
            return Err(Error::InvalidSize("need at least one site".into()));
        }
        let l = occupations.len();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut u = DMatrix::<Complex64>::zeros(2 * l, l);
        for (k, &occ) in occupations.iter().enumerate() {
            u[(2 * k, k)] = Complex64::new(s, 0.0);
            u[(2 * k + 1, k)] = Complex64::new(0.0, if occ { s } else { -s });
        }
        Ok(ModeMatrix { modes: u })
    }

    pub fn vacuum(sites: usize) -> Result<Self> {
        Self::from_occupations(&vec![false; sites])
    }

    pub fn sites(&self) -> usize {
        self.modes.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.modes
    }

    /// Largest deviation of `U^dag U` from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let l = self.sites();
        (self.modes.adjoint() * &self.modes - DMatrix::<Complex64>::identity(l, l)).camax()
    }

    pub fn to_covariance(&self) -> CovarianceMatrix {
        let n = 2 * self.sites();
        let p = &self.modes * self.modes.adjoint() * Complex64::new(2.0, 0.0) - DMatrix::<Complex64>::identity(n, n);
        CovarianceMatrix::from_matrix_unchecked(p.map(|z| z.im))
    }
}

/// One no-click step: propagate the modes with `step` (from
/// [`NoClickGenerator::mode_propagator`]) and re-orthonormalize.
pub fn evolve_noclick(modes: &ModeMatrix, step: &DMatrix<Complex64>, step_index: usize) -> Result<ModeMatrix> {
    let next = step * &modes.modes;
    for col in next.column_iter() {
        let norm = col.norm();
        if norm < COLLAPSE_NORM || !norm.is_finite() {
            return Err(Error::DegenerateTrajectory { step: step_index, norm });
        }
    }
    let q = next.qr().q();
    Ok(ModeMatrix { modes: q })
}
