use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::CorrelationMatrix;

/// Nearest-neighbour hopping `-1/2 sum (c_j^dag c_{j+1} + h.c.)` on a ring.
#[derive(Clone, Debug)]
pub struct HoppingModel {
    sites: usize,
    dt: f64,
    step: DMatrix<Complex64>,
}

impl HoppingModel {
    pub fn new(sites: usize, dt: f64) -> Result<Self> {
        if sites == 0 {
            return Err(Error::InvalidSize("hopping chain needs at least one site".into()));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
        }
        Ok(HoppingModel {
            sites,
            dt,
            step: propagator(sites, dt),
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Single-particle matrix `h` with `H = sum_ij h_ij c_i^dag c_j`.
    pub fn single_particle(&self) -> DMatrix<Complex64> {
        let l = self.sites;
        let mut h = DMatrix::<Complex64>::zeros(l, l);
        for j in 0..l {
            let k = (j + 1) % l;
            h[(j, k)] -= Complex64::new(0.5, 0.0);
            h[(k, j)] -= Complex64::new(0.5, 0.0);
        }
        h
    }

    /// `exp(-i h s)`.
    pub fn propagator(&self, s: f64) -> DMatrix<Complex64> {
        if s == self.dt {
            self.step.clone()
        } else {
            propagator(self.sites, s)
        }
    }

    /// The cached one-step propagator `exp(-i h dt)`.
    pub fn step_propagator(&self) -> &DMatrix<Complex64> {
        &self.step
    }

    /// Nambu correlation matrix after time `s`.
    pub fn evolve_correlation(&self, c: &CorrelationMatrix, s: f64) -> CorrelationMatrix {
        let u = self.propagator(s);
        let l = self.sites;
        let mut v = DMatrix::<Complex64>::zeros(2 * l, 2 * l);
        for i in 0..l {
            for j in 0..l {
                v[(2 * i, 2 * j)] = u[(i, j)];
                v[(2 * i + 1, 2 * j + 1)] = u[(i, j)].conj();
            }
        }
        let next = v.conjugate() * c.matrix() * v.transpose();
        CorrelationMatrix::from_matrix_unchecked(next)
    }

    /// `<c^dag c>` block after time `s`.
    pub fn evolve_number_block(&self, number: &DMatrix<Complex64>, s: f64) -> DMatrix<Complex64> {
        apply_propagator(number, &self.propagator(s))
    }

    /// `<H> = sum_ij h_ij <c_i^dag c_j>`.
    pub fn energy(&self, number: &DMatrix<Complex64>) -> f64 {
        let h = self.single_particle();
        h.component_mul(number).sum().re
    }
}

/// `C -> U^* C U^T`.
pub fn apply_propagator(number: &DMatrix<Complex64>, u: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let next = u.conjugate() * number * u.transpose();
    (&next + next.adjoint()) * Complex64::new(0.5, 0.0)
}

// Momentum-space form: the ring is diagonal in plane waves with band
// energy -cos(2 pi k / L).
fn propagator(sites: usize, s: f64) -> DMatrix<Complex64> {
    let l = sites as f64;
    let phases: Vec<Complex64> = (0..sites)
        .map(|k| Complex64::from_polar(1.0, (2.0 * PI * k as f64 / l).cos() * s))
        .collect();
    // the propagator is circulant: entry (j, m) depends on j - m only
    let column: Vec<Complex64> = (0..sites)
        .map(|d| {
            phases
                .iter()
                .enumerate()
                .map(|(k, &ph)| {
                    let kd = ((k * d) % sites) as f64;
                    ph * Complex64::from_polar(1.0, 2.0 * PI * kd / l)
                })
                .sum::<Complex64>()
                / l
        })
        .collect();
    DMatrix::from_fn(sites, sites, |j, m| column[(j + sites - m) % sites])
}
