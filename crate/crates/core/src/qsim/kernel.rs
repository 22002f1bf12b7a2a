//! Index arithmetic for applying small operators to a subset of qubits.

use super::{CMatrix, C64};

/// Bit mask of register position `pos` in an `n`-qubit index.
#[inline]
pub(crate) fn bit(n: usize, pos: usize) -> usize {
    1usize << (n - 1 - pos)
}

/// Full-register offsets of every local index of `positions`
/// (first position is the most significant local bit).
pub(crate) fn local_offsets(n: usize, positions: &[usize]) -> Vec<usize> {
    let k = positions.len();
    (0..1usize << k)
        .map(|local| {
            positions
                .iter()
                .enumerate()
                .filter(|(j, _)| local & (1 << (k - 1 - j)) != 0)
                .map(|(_, &p)| bit(n, p))
                .sum()
        })
        .collect()
}

/// Every full index whose bits at `positions` are all zero.
pub(crate) fn base_indices(n: usize, positions: &[usize]) -> Vec<usize> {
    let mask: usize = positions.iter().map(|&p| bit(n, p)).sum();
    (0..1usize << n).filter(|i| i & mask == 0).collect()
}

/// Applies `op` to a strided vector of length `2^n` in place.
fn apply_strided(
    data: &mut [C64],
    start: usize,
    stride: usize,
    op: &CMatrix,
    bases: &[usize],
    offsets: &[usize],
    conjugate: bool,
) {
    let d = offsets.len();
    let mut buf = vec![C64::new(0.0, 0.0); d];
    for &base in bases {
        for (b, off) in buf.iter_mut().zip(offsets) {
            *b = data[start + (base + off) * stride];
        }
        for (r, off) in offsets.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (c, b) in buf.iter().enumerate() {
                let m = op[(r, c)];
                acc += if conjugate { m.conj() } else { m } * b;
            }
            data[start + (base + off) * stride] = acc;
        }
    }
}

/// `psi <- op psi` on the qubits at `positions`.
pub(crate) fn apply_to_vector(data: &mut [C64], n: usize, positions: &[usize], op: &CMatrix) {
    let bases = base_indices(n, positions);
    let offsets = local_offsets(n, positions);
    apply_strided(data, 0, 1, op, &bases, &offsets, false);
}

/// `rho <- op rho op^dagger` on the qubits at `positions`.
pub(crate) fn conjugate_matrix(rho: &mut CMatrix, n: usize, positions: &[usize], op: &CMatrix) {
    let dim = 1usize << n;
    let bases = base_indices(n, positions);
    let offsets = local_offsets(n, positions);
    let data = rho.as_mut_slice();
    // column-major storage: columns are contiguous, rows have stride `dim`
    for col in 0..dim {
        apply_strided(data, col * dim, 1, op, &bases, &offsets, false);
    }
    for row in 0..dim {
        apply_strided(data, row, dim, op, &bases, &offsets, true);
    }
}
