use std::io::{BufRead, Read, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;

const ANTISYMMETRY_TOL: f64 = 1e-12;
const SPECTRAL_TOL: f64 = 1e-10;
const MAGIC: &[u8; 4] = b"GCOV";
const FORMAT_VERSION: u32 = 1;

/// Real antisymmetric `2L x 2L` Majorana covariance matrix
/// `Gamma_{ab} = -i/2 Tr([gamma_a, gamma_b] rho)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix {
    sites: usize,
    matrix: DMatrix<f64>,
}

impl CovarianceMatrix {
    /// Validating constructor: even square shape, antisymmetry within
    /// `1e-12`, and all singular values at most `1 + 1e-10`.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if !matrix.is_square() || n == 0 || !n.is_multiple_of(2) {
            return Err(Error::InvalidSize(format!(
                "covariance must be 2L x 2L with L >= 1, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let asym = linalg::antisymmetry_defect(&matrix);
        if asym > ANTISYMMETRY_TOL {
            return Err(Error::InvalidCovariance(format!("antisymmetry violated by {asym:e}")));
        }
        let smax = matrix.clone().singular_values().max();
        if smax > 1.0 + SPECTRAL_TOL {
            return Err(Error::InvalidCovariance(format!(
                "largest singular value {smax} exceeds 1"
            )));
        }
        Ok(CovarianceMatrix { sites: n / 2, matrix })
    }

    /// Skips the spectral check; the matrix is antisymmetrized in place.
    pub(crate) fn from_matrix_unchecked(mut matrix: DMatrix<f64>) -> Self {
        debug_assert!(matrix.is_square() && matrix.nrows().is_multiple_of(2));
        linalg::antisymmetrize(&mut matrix);
        CovarianceMatrix {
            sites: matrix.nrows() / 2,
            matrix,
        }
    }

    /// `Gamma_0 = (+) [[0, 1], [-1, 0]]`.
    pub fn vacuum(sites: usize) -> Result<Self> {
        Self::occupation_product(&vec![false; sites])
    }

    /// Fock product state; site `i` carries `[[0, 1 - 2n_i], [2n_i - 1, 0]]`.
    pub fn occupation_product(occupations: &[bool]) -> Result<Self> {
        if occupations.is_empty() {
            return Err(Error::InvalidSize("need at least one site".into()));
        }
        let l = occupations.len();
        let mut m = DMatrix::<f64>::zeros(2 * l, 2 * l);
        for (i, &occ) in occupations.iter().enumerate() {
            let z = if occ { -1.0 } else { 1.0 };
            m[(2 * i, 2 * i + 1)] = z;
            m[(2 * i + 1, 2 * i)] = -z;
        }
        Ok(CovarianceMatrix { sites: l, matrix: m })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    /// Number of Majorana modes, `2L`.
    pub fn modes(&self) -> usize {
        2 * self.sites
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// `max |Gamma^T Gamma - 1|`; zero for pure states.
    pub fn purity_defect(&self) -> f64 {
        let p = self.matrix.transpose() * &self.matrix;
        let n = p.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let t = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((p[(i, j)] - t).abs());
            }
        }
        worst
    }

    /// Leading `2l x 2l` block: the reduced state on sites `0..l`.
    pub fn leading_block(&self, l: usize) -> CovarianceMatrix {
        CovarianceMatrix {
            sites: l,
            matrix: self.matrix.view((0, 0), (2 * l, 2 * l)).into_owned(),
        }
    }

    /// Binary container: `b"GCOV"`, format version (u32 LE), site count
    /// (u32 LE), then the `(2L)^2` entries as f64 LE in row-major order.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(self.sites as u32).to_le_bytes())?;
        let n = self.modes();
        for i in 0..n {
            for j in 0..n {
                w.write_all(&self.matrix[(i, j)].to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut head = [0u8; 12];
        r.read_exact(&mut head)?;
        if &head[0..4] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let sites = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
        let n = 2 * sites;
        let mut buf = [0u8; 8];
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                r.read_exact(&mut buf)?;
                m[(i, j)] = f64::from_le_bytes(buf);
            }
        }
        Self::new(m)
    }

    /// Row-major CSV, no header, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.modes();
        for i in 0..n {
            let row: Vec<String> = (0..n).map(|j| crate::format_f64(self.matrix[(i, j)])).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Format(format!("bad entry {s:?}: {e}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Format("covariance CSV is not square".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_single_site() {
        let g = CovarianceMatrix::vacuum(1).unwrap();
        assert_eq!(g.matrix(), &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
    }

    #[test]
    fn vacuum_two_sites_is_block_diagonal() {
        let g = CovarianceMatrix::vacuum(2).unwrap();
        let block = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert_eq!(g.matrix().view((0, 0), (2, 2)), block);
        assert_eq!(g.matrix().view((2, 2), (2, 2)), block);
        assert_eq!(g.matrix().view((0, 2), (2, 2)), DMatrix::<f64>::zeros(2, 2));
    }

    #[test]
    fn vacuum_three_sites_is_pure() {
        let g = CovarianceMatrix::vacuum(3).unwrap();
        let p = g.matrix().transpose() * g.matrix();
        assert_eq!(p, DMatrix::<f64>::identity(6, 6));
    }

    #[test]
    fn zero_sites_rejected() {
        assert!(matches!(CovarianceMatrix::vacuum(0), Err(Error::InvalidSize(_))));
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        let sym = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]);
        assert!(CovarianceMatrix::new(sym).is_err());
        let big = DMatrix::from_row_slice(2, 2, &[0.0, 1.5, -1.5, 0.0]);
        assert!(CovarianceMatrix::new(big).is_err());
        assert!(CovarianceMatrix::new(DMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn binary_and_csv_round_trip() {
        let mut m = DMatrix::<f64>::zeros(4, 4);
        m[(0, 1)] = 0.3;
        m[(1, 0)] = -0.3;
        m[(0, 3)] = 1.0 / 3.0;
        m[(3, 0)] = -1.0 / 3.0;
        m[(2, 3)] = -0.7;
        m[(3, 2)] = 0.7;
        let g = CovarianceMatrix::new(m).unwrap();
        let mut bin = Vec::new();
        g.write_binary(&mut bin).unwrap();
        assert_eq!(bin.len(), 12 + 16 * 8);
        assert_eq!(CovarianceMatrix::read_binary(bin.as_slice()).unwrap(), g);
        let mut csv = Vec::new();
        g.write_csv(&mut csv).unwrap();
        assert_eq!(CovarianceMatrix::read_csv(csv.as_slice()).unwrap(), g);
    }

    #[test]
    fn binary_rejects_garbage() {
        assert!(CovarianceMatrix::read_binary(&b"NOPE00000000"[..]).is_err());
    }
}
