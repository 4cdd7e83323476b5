use std::fmt;

/// A Majorana monomial `gamma^x`, labelled by a bit string of length `2L`.
///
/// Bit `2j` selects the X-type Majorana of site `j`, bit `2j + 1` the
/// Y-type one (zero-based indices).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MajoranaString {
    bits: Vec<bool>,
}

impl MajoranaString {
    pub fn new(bits: Vec<bool>) -> Self {
        MajoranaString { bits }
    }

    pub fn identity(modes: usize) -> Self {
        MajoranaString {
            bits: vec![false; modes],
        }
    }

    /// String whose bit `mu` is bit `mu` of `index`.
    pub fn from_index(index: u64, modes: usize) -> Self {
        assert!(modes <= 64, "index encoding limited to 64 modes");
        MajoranaString {
            bits: (0..modes).map(|mu| (index >> mu) & 1 == 1).collect(),
        }
    }

    pub fn to_index(&self) -> u64 {
        assert!(self.bits.len() <= 64, "index encoding limited to 64 modes");
        self.bits
            .iter()
            .enumerate()
            .fold(0u64, |acc, (mu, &b)| acc | ((b as u64) << mu))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Hamming weight `|x|`.
    pub fn weight(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Indices of the selected Majorana modes, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(mu, &b)| b.then_some(mu))
            .collect()
    }

    /// Restriction to the first `modes` bits.
    pub fn truncated(&self, modes: usize) -> Self {
        MajoranaString {
            bits: self.bits[..modes].to_vec(),
        }
    }
}

impl fmt::Display for MajoranaString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}
