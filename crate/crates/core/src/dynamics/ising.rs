use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gaussian::CovarianceMatrix;
use crate::linalg;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    Open,
}

/// Fermion parity `prod_j Z_j` of a state, `+1` or `-1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }

    /// For a pure state `<P> = Pf(Gamma)`.
    pub fn of(cov: &CovarianceMatrix) -> Parity {
        if linalg::pfaffian(cov.matrix()) >= 0.0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// Transverse-field Ising chain `-J sum X_j X_{j+1} - h sum Z_j`.
///
/// With periodic boundaries the wrap-around bond becomes a fermionic
/// boundary term whose sign depends on the parity sector, so generators
/// and propagators take the parity of the state they act on.
#[derive(Clone, Debug)]
pub struct IsingModel {
    sites: usize,
    coupling: f64,
    field: f64,
    boundary: Boundary,
}

impl IsingModel {
    pub fn new(sites: usize, coupling: f64, field: f64, boundary: Boundary) -> Result<Self> {
        if sites == 0 {
            return Err(Error::InvalidSize("Ising chain needs at least one site".into()));
        }
        if !coupling.is_finite() || !field.is_finite() {
            return Err(Error::InvalidParameter("non-finite Ising parameters".into()));
        }
        Ok(IsingModel {
            sites,
            coupling,
            field,
            boundary,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn field(&self) -> f64 {
        self.field
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Real antisymmetric `A` with `H = (i/4) sum_ab A_ab gamma_a gamma_b`.
    pub fn generator(&self, parity: Parity) -> DMatrix<f64> {
        let l = self.sites;
        let n = 2 * l;
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut put = |p: usize, q: usize, v: f64| {
            a[(p, q)] += v;
            a[(q, p)] -= v;
        };
        for j in 0..l {
            put(2 * j, 2 * j + 1, 2.0 * self.field);
        }
        for j in 0..l.saturating_sub(1) {
            put(2 * j + 1, 2 * j + 2, 2.0 * self.coupling);
        }
        if self.boundary == Boundary::Periodic && l > 1 {
            put(n - 1, 0, -2.0 * parity.sign() * self.coupling);
        }
        a
    }

    /// `exp(A s)`, real orthogonal with unit determinant.
    pub fn propagator(&self, s: f64, parity: Parity) -> DMatrix<f64> {
        majorana_propagator(&self.generator(parity), s)
    }

    /// `<H> = -(1/4) sum_ab A_ab Gamma_ab`, up to the constant of the
    /// single-site periodic bond.
    pub fn energy(&self, cov: &CovarianceMatrix) -> f64 {
        let a = self.generator(Parity::of(cov));
        -0.25 * a.component_mul(cov.matrix()).sum()
    }
}

/// `exp(A s)` for a real antisymmetric generator, polished back onto the
/// orthogonal group.
pub fn majorana_propagator(generator: &DMatrix<f64>, s: f64) -> DMatrix<f64> {
    let mut r = (generator * s).exp();
    for _ in 0..2 {
        if linalg::orthogonality_defect(&r) < 1e-15 {
            break;
        }
        r = linalg::polish_orthogonal(&r);
    }
    r
}
