//! Fixed single- and two-qubit operators.

use std::f64::consts::FRAC_1_SQRT_2;

use super::{CMatrix, C64};

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn real(dim: usize, entries: &[f64]) -> CMatrix {
    CMatrix::from_row_iterator(dim, dim, entries.iter().map(|&v| c(v)))
}

pub fn identity(k: usize) -> CMatrix {
    CMatrix::identity(1 << k, 1 << k)
}

pub fn x() -> CMatrix {
    real(2, &[0.0, 1.0, 1.0, 0.0])
}

pub fn y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), c(0.0)])
}

pub fn z() -> CMatrix {
    real(2, &[1.0, 0.0, 0.0, -1.0])
}

pub fn h() -> CMatrix {
    let s = FRAC_1_SQRT_2;
    real(2, &[s, s, s, -s])
}

pub fn cz() -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(1.0), c(1.0), c(-1.0)]))
}

/// CNOT with the first qubit as control.
pub fn cnot() -> CMatrix {
    #[rustfmt::skip]
    let m = real(4, &[
        1.0, 0.0, 0.0, 0.0,
        0.0, 1.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 1.0,
        0.0, 0.0, 1.0, 0.0,
    ]);
    m
}

/// `|v><v|` for a (not necessarily normalized) vector.
pub fn projector(v: &[C64]) -> CMatrix {
    let col = nalgebra::DVector::from_column_slice(v);
    &col * col.adjoint()
}

pub fn z_basis() -> Vec<CMatrix> {
    vec![projector(&[c(1.0), c(0.0)]), projector(&[c(0.0), c(1.0)])]
}

/// Projectors onto `|+>` (outcome 0) and `|->` (outcome 1).
pub fn x_basis() -> Vec<CMatrix> {
    let s = FRAC_1_SQRT_2;
    vec![projector(&[c(s), c(s)]), projector(&[c(s), c(-s)])]
}

/// The four Bell states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Bell {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl Bell {
    pub const ALL: [Bell; 4] = [Bell::PhiPlus, Bell::PhiMinus, Bell::PsiPlus, Bell::PsiMinus];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Bell> {
        Self::ALL.get(i).copied()
    }

    pub fn amplitudes(self) -> [C64; 4] {
        let s = FRAC_1_SQRT_2;
        match self {
            Bell::PhiPlus => [c(s), c(0.0), c(0.0), c(s)],
            Bell::PhiMinus => [c(s), c(0.0), c(0.0), c(-s)],
            Bell::PsiPlus => [c(0.0), c(s), c(s), c(0.0)],
            Bell::PsiMinus => [c(0.0), c(s), c(-s), c(0.0)],
        }
    }

    /// Single-qubit Pauli on the second qubit mapping this Bell state to
    /// `|phi+>` up to a global phase.
    pub fn correction(self) -> CMatrix {
        match self {
            Bell::PhiPlus => identity(1),
            Bell::PhiMinus => z(),
            Bell::PsiPlus => x(),
            Bell::PsiMinus => x() * z(),
        }
    }
}

/// Bell-basis projectors in [`Bell::ALL`] order.
pub fn bell_basis() -> Vec<CMatrix> {
    Bell::ALL.iter().map(|b| projector(&b.amplitudes())).collect()
}
