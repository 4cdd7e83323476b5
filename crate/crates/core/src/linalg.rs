//! Dense real linear algebra used throughout the crate: Pfaffians of
//! skew-symmetric matrices, sign/log-magnitude determinants, principal
//! submatrices and small orthogonality utilities.

use nalgebra::DMatrix;

/// Determinant stored as `sign * exp(log_abs)` so that products of many
/// O(1) pivots never overflow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogDet {
    pub sign: f64,
    pub log_abs: f64,
}

impl LogDet {
    pub const ONE: LogDet = LogDet {
        sign: 1.0,
        log_abs: 0.0,
    };

    pub fn zero() -> Self {
        LogDet {
            sign: 0.0,
            log_abs: f64::NEG_INFINITY,
        }
    }

    pub fn value(&self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.log_abs.exp()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0.0
    }
}

/// Determinant by LU factorization with partial pivoting.
pub fn log_det(m: &DMatrix<f64>) -> LogDet {
    assert!(m.is_square(), "log_det of a non-square matrix");
    let n = m.nrows();
    if n == 0 {
        return LogDet::ONE;
    }
    // column-major copy, a[i + j*n]
    let mut a: Vec<f64> = m.as_slice().to_vec();
    let mut sign = 1.0;
    let mut log_abs = 0.0;
    for k in 0..n {
        let mut p = k;
        let mut best = a[k + k * n].abs();
        for i in k + 1..n {
            let v = a[i + k * n].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best == 0.0 {
            return LogDet::zero();
        }
        if p != k {
            for j in 0..n {
                a.swap(k + j * n, p + j * n);
            }
            sign = -sign;
        }
        let pivot = a[k + k * n];
        if pivot < 0.0 {
            sign = -sign;
        }
        log_abs += pivot.abs().ln();
        for i in k + 1..n {
            a[i + k * n] /= pivot;
        }
        for j in k + 1..n {
            let akj = a[k + j * n];
            if akj == 0.0 {
                continue;
            }
            for i in k + 1..n {
                a[i + j * n] -= a[i + k * n] * akj;
            }
        }
    }
    LogDet { sign, log_abs }
}

pub fn det(m: &DMatrix<f64>) -> f64 {
    log_det(m).value()
}

/// Pfaffian of a real skew-symmetric matrix by Parlett-Reid elimination
/// with partial pivoting. Odd dimensions give zero; the empty matrix gives one.
pub fn pfaffian(m: &DMatrix<f64>) -> f64 {
    assert!(m.is_square(), "pfaffian of a non-square matrix");
    let n = m.nrows();
    if n == 0 {
        return 1.0;
    }
    if n % 2 == 1 {
        return 0.0;
    }
    let mut a = m.clone();
    let mut pf = 1.0;
    let mut k = 0;
    while k + 1 < n {
        // pivot: largest entry of column k below the diagonal
        let mut kp = k + 1;
        let mut best = a[(k + 1, k)].abs();
        for i in k + 2..n {
            let v = a[(i, k)].abs();
            if v > best {
                best = v;
                kp = i;
            }
        }
        if kp != k + 1 {
            a.swap_rows(k + 1, kp);
            a.swap_columns(k + 1, kp);
            pf = -pf;
        }
        let piv = a[(k, k + 1)];
        if piv == 0.0 {
            return 0.0;
        }
        pf *= piv;
        if k + 2 < n {
            let tau: Vec<f64> = (k + 2..n).map(|j| a[(k, j)] / piv).collect();
            let col: Vec<f64> = (k + 2..n).map(|i| a[(i, k + 1)]).collect();
            for (ii, i) in (k + 2..n).enumerate() {
                for (jj, j) in (k + 2..n).enumerate() {
                    a[(i, j)] += tau[ii] * col[jj] - col[ii] * tau[jj];
                }
            }
        }
        k += 2;
    }
    pf
}

/// Principal submatrix on the given (sorted or unsorted) index list.
pub fn principal_submatrix(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

/// Largest elementwise deviation of `m + m^T` from zero.
pub fn antisymmetry_defect(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] + m[(j, i)]).abs());
        }
    }
    worst
}

/// Largest elementwise deviation of `O O^T` from the identity.
pub fn orthogonality_defect(o: &DMatrix<f64>) -> f64 {
    let p = o * o.transpose();
    let n = p.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((p[(i, j)] - target).abs());
        }
    }
    worst
}

/// One Newton-Schulz step towards the nearest orthogonal matrix.
pub fn polish_orthogonal(o: &DMatrix<f64>) -> DMatrix<f64> {
    let n = o.nrows();
    let oto = o.transpose() * o;
    let corr = DMatrix::<f64>::identity(n, n) * 3.0 - oto;
    o * corr * 0.5
}

/// Replace `m` by `(m - m^T) / 2`.
pub fn antisymmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)] = 0.0;
        for j in i + 1..n {
            let v = 0.5 * (m[(i, j)] - m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = -v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_skew(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
        let mut m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        antisymmetrize(&mut m);
        m
    }

    // Pfaffian by expansion along the first row.
    fn pfaffian_brute(m: &DMatrix<f64>) -> f64 {
        let n = m.nrows();
        if n == 0 {
            return 1.0;
        }
        if n % 2 == 1 {
            return 0.0;
        }
        let mut total = 0.0;
        for j in 1..n {
            let rest: Vec<usize> = (1..n).filter(|&k| k != j).collect();
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            total += sign * m[(0, j)] * pfaffian_brute(&principal_submatrix(m, &rest));
        }
        total
    }

    #[test]
    fn pfaffian_of_symplectic_block() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert_eq!(pfaffian(&m), 1.0);
        let e = DMatrix::<f64>::zeros(0, 0);
        assert_eq!(pfaffian(&e), 1.0);
        assert_eq!(pfaffian(&DMatrix::<f64>::zeros(3, 3)), 0.0);
    }

    #[test]
    fn pfaffian_matches_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [2, 4, 6, 8] {
            for _ in 0..20 {
                let m = random_skew(n, &mut rng);
                let fast = pfaffian(&m);
                let slow = pfaffian_brute(&m);
                assert!((fast - slow).abs() < 1e-12, "n={n}: {fast} vs {slow}");
            }
        }
    }

    #[test]
    fn pfaffian_squared_is_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2, 4, 6, 10, 16] {
            let m = random_skew(n, &mut rng);
            let pf = pfaffian(&m);
            let d = det(&m);
            assert!((pf * pf - d).abs() < 1e-10 * d.abs().max(1.0));
        }
    }

    #[test]
    fn log_det_sign_and_magnitude() {
        let m = DMatrix::from_row_slice(3, 3, &[0.0, 2.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, -3.0]);
        let ld = log_det(&m);
        assert_eq!(ld.sign, 1.0);
        assert!((ld.value() - 6.0).abs() < 1e-12);
        let nalg = m.clone().determinant();
        assert!((ld.value() - nalg).abs() < 1e-12);
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(log_det(&singular).value().abs() < 1e-15);
    }

    #[test]
    fn log_det_does_not_overflow() {
        let m = DMatrix::<f64>::identity(600, 600) * 10.0;
        let ld = log_det(&m);
        assert!((ld.log_abs - 600.0 * 10f64.ln()).abs() < 1e-9);
        assert!(ld.value().is_infinite());
    }

    #[test]
    fn newton_schulz_reduces_defect() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_skew(6, &mut rng);
        let o = a.exp();
        let noisy = &o + DMatrix::from_fn(6, 6, |_, _| rng.random_range(-1e-7..1e-7));
        let before = orthogonality_defect(&noisy);
        let after = orthogonality_defect(&polish_orthogonal(&noisy));
        assert!(after < before * 1e-3);
    }
}
