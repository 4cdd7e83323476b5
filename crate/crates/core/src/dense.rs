//! Brute-force reference implementation on the full `2^L` Hilbert space.
//!
//! Everything here is exponential in the number of sites and exists to
//! validate the polynomial covariance-matrix routines. Basis index bit `j`
//! holds the occupation of site `j`; `Z_j |n> = (1 - 2 n_j) |n>`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::CovarianceMatrix;

type C = Complex64;
pub type Operator = DMatrix<C>;
pub type Ket = DVector<C>;

/// Largest system handled by the dense routines.
pub const MAX_SITES: usize = 10;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);
const I: C = C::new(0.0, 1.0);

fn check_sites(sites: usize) -> Result<()> {
    if sites == 0 {
        return Err(Error::InvalidSize("need at least one site".into()));
    }
    if sites > MAX_SITES {
        return Err(Error::TooLarge {
            sites,
            limit: MAX_SITES,
        });
    }
    Ok(())
}

fn occupied(b: usize, j: usize) -> bool {
    (b >> j) & 1 == 1
}

/// Operator from a per-basis-state action `b -> (amplitude, b')`.
fn from_action(sites: usize, f: impl Fn(usize) -> (C, usize)) -> Operator {
    let d = 1 << sites;
    let mut m = Operator::zeros(d, d);
    for b in 0..d {
        let (amp, out) = f(b);
        m[(out, b)] += amp;
    }
    m
}

fn string_sign(b: usize, j: usize) -> f64 {
    let below = b & ((1 << j) - 1);
    if below.count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Majorana operator `gamma_mu`: `Z...Z X_j` for `mu = 2j`,
/// `Z...Z Y_j` for `mu = 2j + 1`.
pub fn majorana(sites: usize, mu: usize) -> Operator {
    let j = mu / 2;
    let y = mu % 2 == 1;
    from_action(sites, |b| {
        let s = string_sign(b, j);
        let amp = if y {
            // Y |n> = i (-1)^n |1 - n>
            if occupied(b, j) {
                -I * s
            } else {
                I * s
            }
        } else {
            C::new(s, 0.0)
        };
        (amp, b ^ (1 << j))
    })
}

/// Annihilation operator `c_j` with the Jordan-Wigner string on sites `< j`.
pub fn annihilator(sites: usize, j: usize) -> Operator {
    let d = 1 << sites;
    let mut m = Operator::zeros(d, d);
    for b in 0..d {
        if occupied(b, j) {
            m[(b ^ (1 << j), b)] = C::new(string_sign(b, j), 0.0);
        }
    }
    m
}

pub fn number(sites: usize, j: usize) -> Operator {
    from_action(sites, |b| (if occupied(b, j) { ONE } else { ZERO }, b))
}

fn pauli_x(sites: usize, j: usize) -> Operator {
    from_action(sites, |b| (ONE, b ^ (1 << j)))
}

fn pauli_z(sites: usize, j: usize) -> Operator {
    from_action(sites, |b| (if occupied(b, j) { -ONE } else { ONE }, b))
}

/// Fock basis state with the given occupations.
pub fn occupation_state(occupations: &[bool]) -> Result<Ket> {
    check_sites(occupations.len())?;
    let idx = occupations
        .iter()
        .enumerate()
        .fold(0usize, |acc, (j, &n)| acc | ((n as usize) << j));
    let mut psi = Ket::zeros(1 << occupations.len());
    psi[idx] = ONE;
    Ok(psi)
}

pub fn density(psi: &Ket) -> Operator {
    psi * psi.adjoint()
}

fn sites_of(rho: &Operator) -> usize {
    rho.nrows().trailing_zeros() as usize
}

/// `Gamma_ab = -i/2 Tr([gamma_a, gamma_b] rho) / Tr rho`.
pub fn covariance(rho: &Operator) -> DMatrix<f64> {
    let l = sites_of(rho);
    let norm = rho.trace();
    let gs: Vec<Operator> = (0..2 * l).map(|mu| majorana(l, mu)).collect();
    DMatrix::from_fn(2 * l, 2 * l, |a, b| {
        let comm = &gs[a] * &gs[b] - &gs[b] * &gs[a];
        ((comm * rho).trace() / norm * C::new(0.0, -0.5)).re
    })
}

/// `<c_i^dag c_j>`.
pub fn number_correlation(rho: &Operator) -> DMatrix<C> {
    let l = sites_of(rho);
    let norm = rho.trace();
    let cs: Vec<Operator> = (0..l).map(|j| annihilator(l, j)).collect();
    DMatrix::from_fn(l, l, |i, j| (cs[i].adjoint() * &cs[j] * rho).trace() / norm)
}

/// `Tr(rho gamma_{x_1} gamma_{x_2} ...)` with ascending indices.
pub fn string_expectation(rho: &Operator, support: &[usize]) -> C {
    let l = sites_of(rho);
    let mut op = Operator::identity(rho.nrows(), rho.nrows());
    for &mu in support {
        op *= majorana(l, mu);
    }
    (op * rho).trace() / rho.trace()
}

/// `(i/4) sum_ab A_ab gamma_a gamma_b` for a (possibly complex) generator.
pub fn quadratic_hamiltonian(a: &DMatrix<C>) -> Operator {
    let l = a.nrows() / 2;
    let gs: Vec<Operator> = (0..2 * l).map(|mu| majorana(l, mu)).collect();
    let d = 1 << l;
    let mut h = Operator::zeros(d, d);
    for p in 0..2 * l {
        for q in 0..2 * l {
            if a[(p, q)] != ZERO {
                h += &gs[p] * &gs[q] * (I * 0.25 * a[(p, q)]);
            }
        }
    }
    h
}

/// `sum_ij h_ij c_i^dag c_j`.
pub fn hopping_hamiltonian(single_particle: &DMatrix<C>) -> Operator {
    let l = single_particle.nrows();
    let cs: Vec<Operator> = (0..l).map(|j| annihilator(l, j)).collect();
    let d = 1 << l;
    let mut h = Operator::zeros(d, d);
    for i in 0..l {
        for j in 0..l {
            if single_particle[(i, j)] != ZERO {
                h += cs[i].adjoint() * &cs[j] * single_particle[(i, j)];
            }
        }
    }
    h
}

/// `-J sum X_j X_{j+1} - h sum Z_j`, with the wrap-around bond if `periodic`.
pub fn ising_hamiltonian(sites: usize, coupling: f64, field: f64, periodic: bool) -> Operator {
    let d = 1 << sites;
    let mut h = Operator::zeros(d, d);
    let bonds = if periodic { sites } else { sites - 1 };
    for j in 0..bonds {
        let k = (j + 1) % sites;
        if k == j {
            h -= Operator::identity(d, d) * C::new(coupling, 0.0);
        } else {
            h -= pauli_x(sites, j) * pauli_x(sites, k) * C::new(coupling, 0.0);
        }
    }
    for j in 0..sites {
        h -= pauli_z(sites, j) * C::new(field, 0.0);
    }
    h
}

/// Open-chain `-J sum X X - i gamma/2 sum n`.
pub fn noclick_hamiltonian(sites: usize, coupling: f64, rate: f64) -> Operator {
    let mut h = ising_hamiltonian(sites, coupling, 0.0, false);
    for j in 0..sites {
        h -= number(sites, j) * C::new(0.0, 0.5 * rate);
    }
    h
}

/// `exp(-i H t) psi`, renormalized.
pub fn evolve(psi: &Ket, h: &Operator, t: f64) -> Ket {
    let u = (h * C::new(0.0, -t)).exp();
    let out = u * psi;
    let n = out.norm();
    out / C::new(n, 0.0)
}

/// Projects site `k` onto occupation `outcome`; returns the normalized state
/// and the Born probability.
pub fn project_occupation(psi: &Ket, site: usize, outcome: bool) -> (Ket, f64) {
    let mut out = psi.clone();
    for b in 0..psi.len() {
        if occupied(b, site) != outcome {
            out[b] = ZERO;
        }
    }
    let p = out.norm_squared();
    if p > 0.0 {
        out /= C::new(p.sqrt(), 0.0);
    }
    (out, p)
}

/// Reduced density matrix of sites `0..l`.
pub fn reduce_leading(rho: &Operator, l: usize) -> Operator {
    let total = sites_of(rho);
    let d = 1 << l;
    let rest = 1 << (total - l);
    DMatrix::from_fn(d, d, |a, b| (0..rest).map(|c| rho[(a | (c << l), b | (c << l))]).sum())
}

/// `Tr(P rho)` for the Pauli string with X-part `xmask` and Z-part `zmask`
/// (both set means Y).
fn pauli_expectation(rho: &Operator, xmask: usize, zmask: usize) -> C {
    let mut acc = ZERO;
    for c in 0..rho.nrows() {
        // P |c> = phase |c ^ xmask>
        let mut phase = ONE;
        let mut bits = xmask | zmask;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let n = occupied(c, j);
            let x = (xmask >> j) & 1 == 1;
            let z = (zmask >> j) & 1 == 1;
            phase *= match (x, z) {
                (true, false) => ONE,
                (false, true) => {
                    if n {
                        -ONE
                    } else {
                        ONE
                    }
                }
                _ => {
                    if n {
                        -I
                    } else {
                        I
                    }
                }
            };
        }
        acc += phase * rho[(c, c ^ xmask)];
    }
    acc
}

/// `Xi_P = Tr(P rho)^2 / (D Tr rho^2)` over all `4^L` Pauli strings.
pub fn pauli_distribution(rho: &Operator) -> Vec<f64> {
    let d = rho.nrows();
    let rho = rho / rho.trace();
    let purity = (&rho * &rho).trace().re;
    let mut out = Vec::with_capacity(d * d);
    for xmask in 0..d {
        for zmask in 0..d {
            let e = pauli_expectation(&rho, xmask, zmask);
            out.push(e.norm_sqr() / (d as f64 * purity));
        }
    }
    out
}

/// Stabilizer Renyi entropy (nats) from the Pauli spectrum.
pub fn stabilizer_renyi_entropy(rho: &Operator, alpha: f64) -> f64 {
    let d = rho.nrows() as f64;
    let xi = pauli_distribution(rho);
    let h = if (alpha - 1.0).abs() < 1e-12 {
        -xi.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
    } else {
        xi.iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p.powf(alpha))
            .sum::<f64>()
            .ln()
            / (1.0 - alpha)
    };
    h - d.ln()
}

/// Covariance of a pure state, validated.
pub fn covariance_of(psi: &Ket) -> Result<CovarianceMatrix> {
    let mut g = covariance(&density(psi));
    crate::linalg::antisymmetrize(&mut g);
    CovarianceMatrix::new(g)
}
