use std::fmt;
use std::str::FromStr;

use super::{gates, CMatrix, QsimError, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn has_x(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    fn has_z(self) -> bool {
        matches!(self, Pauli::Z | Pauli::Y)
    }

    fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn matrix(self) -> CMatrix {
        match self {
            Pauli::I => gates::identity(1),
            Pauli::X => gates::x(),
            Pauli::Y => gates::y(),
            Pauli::Z => gates::z(),
        }
    }

    /// Power of `i` picked up by the single-qubit product `self * other`.
    fn product_phase(self, other: Pauli) -> u8 {
        use Pauli::*;
        match (self, other) {
            (X, Y) | (Y, Z) | (Z, X) => 1,
            (Y, X) | (Z, Y) | (X, Z) => 3,
            _ => 0,
        }
    }
}

/// Signed tensor product of single-qubit Paulis, e.g. `-XZZ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    letters: Vec<Pauli>,
    negative: bool,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>, negative: bool) -> Self {
        Self { letters, negative }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(vec![Pauli::I; n], false)
    }

    /// Product of `(position, letter)` factors on an `n`-qubit register.
    pub fn from_sparse(n: usize, factors: &[(usize, Pauli)]) -> Self {
        let mut s = Self::identity(n);
        for &(pos, p) in factors {
            s.letters[pos] = p;
        }
        s
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }

    pub fn sign(&self) -> f64 {
        if self.negative {
            -1.0
        } else {
            1.0
        }
    }

    pub fn negated(&self) -> Self {
        Self::new(self.letters.clone(), !self.negative)
    }

    /// Bit mask of qubits carrying X or Y, in register index convention.
    pub(crate) fn x_mask(&self) -> usize {
        let n = self.len();
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, p)| p.has_x())
            .map(|(i, _)| 1usize << (n - 1 - i))
            .sum()
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let anti = self
            .letters
            .iter()
            .zip(&other.letters)
            .filter(|(a, b)| (a.has_x() && b.has_z()) ^ (a.has_z() && b.has_x()))
            .count();
        anti % 2 == 0
    }

    /// Product `self * other`, or `None` when the operators anticommute
    /// (the product is then not Hermitian).
    pub fn checked_mul(&self, other: &PauliString) -> Option<PauliString> {
        if self.len() != other.len() || !self.commutes_with(other) {
            return None;
        }
        let mut phase: u8 = 2 * (self.negative as u8 ^ other.negative as u8);
        let letters = self
            .letters
            .iter()
            .zip(&other.letters)
            .map(|(&a, &b)| {
                phase = (phase + a.product_phase(b)) % 4;
                Pauli::from_bits(a.has_x() ^ b.has_x(), a.has_z() ^ b.has_z())
            })
            .collect();
        debug_assert!(phase.is_multiple_of(2));
        Some(PauliString::new(letters, phase == 2))
    }

    /// Restriction to the given positions, dropping the sign.
    pub fn restricted(&self, positions: &[usize]) -> PauliString {
        PauliString::new(positions.iter().map(|&p| self.letters[p]).collect(), false)
    }

    /// Drops the given positions, keeping the sign.
    pub fn without(&self, positions: &[usize]) -> PauliString {
        let letters = self
            .letters
            .iter()
            .enumerate()
            .filter(|(i, _)| !positions.contains(i))
            .map(|(_, &p)| p)
            .collect();
        PauliString::new(letters, self.negative)
    }

    /// Concatenation `self (x) other`.
    pub fn tensor(&self, other: &PauliString) -> PauliString {
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        PauliString::new(letters, self.negative ^ other.negative)
    }

    /// Phase of `<j xor x_mask| P |j>` for basis index `j`.
    pub(crate) fn column_phase(&self, j: usize) -> C64 {
        let n = self.len();
        let mut phase = C64::new(self.sign(), 0.0);
        for (i, p) in self.letters.iter().enumerate() {
            let one = j & (1usize << (n - 1 - i)) != 0;
            match p {
                Pauli::I | Pauli::X => {}
                Pauli::Z => {
                    if one {
                        phase = -phase;
                    }
                }
                // Y|0> = i|1>, Y|1> = -i|0>
                Pauli::Y => {
                    phase *= if one { C64::new(0.0, -1.0) } else { C64::new(0.0, 1.0) };
                }
            }
        }
        phase
    }

    /// Dense matrix, for small registers.
    pub fn matrix(&self) -> CMatrix {
        let mut m = CMatrix::from_element(1, 1, C64::new(self.sign(), 0.0));
        for p in &self.letters {
            m = m.kronecker(&p.matrix());
        }
        m
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.negative { "-" } else { "+" })?;
        for p in &self.letters {
            f.write_str(match p {
                Pauli::I => "I",
                Pauli::X => "X",
                Pauli::Y => "Y",
                Pauli::Z => "Z",
            })?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = QsimError;

    fn from_str(s: &str) -> Result<Self, QsimError> {
        let (negative, body) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            Some(b'+') => (false, &s[1..]),
            _ => (false, s),
        };
        let letters = body
            .chars()
            .map(|c| match c.to_ascii_uppercase() {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                _ => Err(QsimError::MalformedPauli(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PauliString::new(letters, negative))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(ps("-XzY").to_string(), "-XZY");
        assert_eq!(ps("ZZ").to_string(), "+ZZ");
        assert!("XQ".parse::<PauliString>().is_err());
    }

    #[test]
    fn products_track_sign() {
        // XX * ZZ = (XZ)(XZ) = (-iY)(-iY) = -YY
        assert_eq!(ps("XX").checked_mul(&ps("ZZ")).unwrap(), ps("-YY"));
        assert_eq!(ps("XI").checked_mul(&ps("ZI")), None);
        assert_eq!(ps("-XZ").checked_mul(&ps("-XZ")).unwrap(), ps("II"));
    }

    #[test]
    fn product_matches_matrices() {
        let cases = [("XYZ", "ZYX"), ("-YXI", "XYZ"), ("ZZZ", "XXI")];
        for (a, b) in cases {
            let (a, b) = (ps(a), ps(b));
            if let Some(p) = a.checked_mul(&b) {
                let diff = super::super::max_abs_diff(&(a.matrix() * b.matrix()), &p.matrix());
                assert!(diff < 1e-15, "{a} * {b}");
            }
        }
    }
}
