use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Number of qubits in the register.
pub const NUM_QUBITS: usize = 4;
/// Hilbert-space dimension of the register.
pub const DIM: usize = 1 << NUM_QUBITS;

pub(crate) const HERMITICITY_TOL: f64 = 1e-12;
pub(crate) const TRACE_TOL: f64 = 1e-10;
pub(crate) const PSD_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Density matrix of the 4-qubit register.
///
/// Basis index `b = 8*q3 + 4*q2 + 2*q1 + q0`, i.e. kets are written
/// `|q3 q2 q1 q0>` with `q0` least significant.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    entries: Vec<Complex64>,
}

/// Returns `|0000><0000|`.
pub fn initial_state() -> DensityMatrix {
    DensityMatrix::basis_state(0)
}

impl DensityMatrix {
    pub fn basis_state(index: usize) -> Self {
        assert!(index < DIM, "basis index {index} out of range");
        let mut entries = vec![ZERO; DIM * DIM];
        entries[index * DIM + index] = Complex64::new(1.0, 0.0);
        Self { entries }
    }

    /// `|psi><psi|` for a (not necessarily normalized) amplitude vector; the
    /// result is normalized.
    pub fn from_pure(amplitudes: &[Complex64]) -> Result<Self> {
        if amplitudes.len() != DIM {
            return Err(Error::DimensionMismatch {
                expected: DIM,
                got: amplitudes.len(),
            });
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if norm <= 0.0 || !norm.is_finite() {
            return Err(Error::InvalidArgument("zero state vector".into()));
        }
        let mut entries = vec![ZERO; DIM * DIM];
        for i in 0..DIM {
            for j in 0..DIM {
                entries[i * DIM + j] = amplitudes[i] * amplitudes[j].conj() / norm;
            }
        }
        Ok(Self { entries })
    }

    pub fn maximally_mixed() -> Self {
        let mut entries = vec![ZERO; DIM * DIM];
        for i in 0..DIM {
            entries[i * DIM + i] = Complex64::new(1.0 / DIM as f64, 0.0);
        }
        Self { entries }
    }

    /// Builds a state from raw row-major entries and checks every invariant.
    pub fn from_entries(entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != DIM * DIM {
            return Err(Error::DimensionMismatch {
                expected: DIM * DIM,
                got: entries.len(),
            });
        }
        let state = Self { entries };
        state.check_invariants()?;
        Ok(state)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * DIM + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub(crate) fn zeroed() -> Self {
        Self {
            entries: vec![ZERO; DIM * DIM],
        }
    }

    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(DIM, DIM, &self.entries)
    }

    pub fn trace(&self) -> Complex64 {
        (0..DIM).map(|i| self.get(i, i)).sum()
    }

    /// Diagonal of the matrix: computational-basis populations.
    pub fn populations(&self) -> [f64; DIM] {
        let mut out = [0.0; DIM];
        for (i, p) in out.iter_mut().enumerate() {
            *p = self.get(i, i).re;
        }
        out
    }

    /// `tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        // tr(rho rho) = sum_ij rho_ij rho_ji = sum_ij |rho_ij|^2 for Hermitian rho
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..DIM {
            for j in i..DIM {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.to_matrix();
        // symmetrize so the Hermitian eigensolver sees exactly Hermitian input
        let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest entry-wise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Hermitian within 1e-12, unit trace within 1e-10, PSD down to -1e-10.
    pub fn check_invariants(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > HERMITICITY_TOL {
            return Err(Error::InvalidArgument(format!(
                "density matrix not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = self.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidArgument(format!(
                "density matrix trace {tr} differs from 1"
            )));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -PSD_TOL {
            return Err(Error::InvalidArgument(format!(
                "density matrix not positive semidefinite (min eigenvalue {min_eig:e})"
            )));
        }
        Ok(())
    }

    /// Reduced 2x2 density matrix of one qubit.
    pub fn qubit_marginal(&self, qubit: usize) -> Result<[[Complex64; 2]; 2]> {
        if qubit >= NUM_QUBITS {
            return Err(Error::QubitOutOfRange(qubit));
        }
        let bit = 1 << qubit;
        let mut out = [[ZERO; 2]; 2];
        for rest in 0..DIM {
            if rest & bit != 0 {
                continue;
            }
            for (a, row) in out.iter_mut().enumerate() {
                for (b, cell) in row.iter_mut().enumerate() {
                    let i = rest | if a == 1 { bit } else { 0 };
                    let j = rest | if b == 1 { bit } else { 0 };
                    *cell += self.get(i, j);
                }
            }
        }
        Ok(out)
    }

    /// Applies `op` (a `2^k x 2^k` row-major matrix acting on `qubits`) from
    /// the left: `rho <- op * rho`.
    pub(crate) fn left_multiply_local(&mut self, op: &[Complex64], qubits: &[usize]) {
        let layout = LocalLayout::new(qubits);
        let d = layout.local_dim;
        let mut buf = [ZERO; DIM];
        let mut out = [ZERO; DIM];
        for col in 0..DIM {
            for &base in &layout.bases {
                for l in 0..d {
                    buf[l] = self.entries[(base | layout.offsets[l]) * DIM + col];
                }
                for r in 0..d {
                    let row = &op[r * d..(r + 1) * d];
                    out[r] = row.iter().zip(&buf[..d]).map(|(a, b)| a * b).sum();
                }
                for l in 0..d {
                    self.entries[(base | layout.offsets[l]) * DIM + col] = out[l];
                }
            }
        }
    }

    /// `rho <- rho * op^dagger` for a local `op` on `qubits`.
    pub(crate) fn right_multiply_local_adjoint(&mut self, op: &[Complex64], qubits: &[usize]) {
        let layout = LocalLayout::new(qubits);
        let d = layout.local_dim;
        let mut buf = [ZERO; DIM];
        let mut out = [ZERO; DIM];
        for row in 0..DIM {
            let row_slice = &mut self.entries[row * DIM..(row + 1) * DIM];
            for &base in &layout.bases {
                for l in 0..d {
                    buf[l] = row_slice[base | layout.offsets[l]];
                }
                // (rho K^dagger)[r][c] = sum_m rho[r][m] * conj(K[c][m])
                for c in 0..d {
                    let k_row = &op[c * d..(c + 1) * d];
                    out[c] = k_row.iter().zip(&buf[..d]).map(|(k, v)| v * k.conj()).sum();
                }
                for l in 0..d {
                    row_slice[base | layout.offsets[l]] = out[l];
                }
            }
        }
    }

    /// `K rho K^dagger` for a local operator, returned as a new matrix.
    pub(crate) fn conjugated_local(&self, op: &[Complex64], qubits: &[usize]) -> DensityMatrix {
        let mut out = self.clone();
        out.left_multiply_local(op, qubits);
        out.right_multiply_local_adjoint(op, qubits);
        out
    }

    pub(crate) fn add_assign(&mut self, other: &DensityMatrix) {
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a += b;
        }
    }
}

/// Index bookkeeping for an operator acting on a subset of qubits.
///
/// Local index bit `k-1-j` corresponds to `qubits[j]`, so the first listed
/// qubit is the most significant bit of the local index.
pub(crate) struct LocalLayout {
    pub local_dim: usize,
    /// Register offsets contributed by each local basis index.
    pub offsets: Vec<usize>,
    /// Register indices with all acted-on bits cleared.
    pub bases: Vec<usize>,
}

impl LocalLayout {
    pub fn new(qubits: &[usize]) -> Self {
        let k = qubits.len();
        let local_dim = 1 << k;
        let offsets = (0..local_dim)
            .map(|l| {
                qubits
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| l >> (k - 1 - j) & 1 == 1)
                    .map(|(_, &q)| 1usize << q)
                    .sum()
            })
            .collect();
        let mask: usize = qubits.iter().map(|&q| 1usize << q).sum();
        let bases = (0..DIM).filter(|b| b & mask == 0).collect();
        Self {
            local_dim,
            offsets,
            bases,
        }
    }
}

/// Lifts a local operator on `qubits` to a full `DIM x DIM` row-major matrix.
pub(crate) fn lift_local(op: &[Complex64], qubits: &[usize]) -> Vec<Complex64> {
    let layout = LocalLayout::new(qubits);
    let d = layout.local_dim;
    let mut full = vec![ZERO; DIM * DIM];
    for &base in &layout.bases {
        for r in 0..d {
            for c in 0..d {
                full[(base | layout.offsets[r]) * DIM + (base | layout.offsets[c])] = op[r * d + c];
            }
        }
    }
    full
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_state_is_ground_projector() {
        let rho = initial_state();
        assert_eq!(rho.get(0, 0), Complex64::new(1.0, 0.0));
        let nonzero = rho.entries().iter().filter(|z| z.norm() > 0.0).count();
        assert_eq!(nonzero, 1);
        assert_eq!(rho.trace(), Complex64::new(1.0, 0.0));
        rho.check_invariants().unwrap();
    }

    #[test]
    fn maximally_mixed_is_valid() {
        let rho = DensityMatrix::maximally_mixed();
        rho.check_invariants().unwrap();
        assert!((rho.purity() - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn layout_puts_first_qubit_in_msb() {
        let layout = LocalLayout::new(&[0, 2]);
        assert_eq!(layout.offsets, vec![0, 4, 1, 5]);
        assert_eq!(layout.bases, vec![0, 2, 8, 10]);
    }

    #[test]
    fn lifted_identity_is_identity() {
        let id = [
            Complex64::new(1.0, 0.0),
            ZERO,
            ZERO,
            Complex64::new(1.0, 0.0),
        ];
        let full = lift_local(&id, &[3]);
        for i in 0..DIM {
            for j in 0..DIM {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_eq!(full[i * DIM + j], Complex64::new(expected, 0.0));
            }
        }
    }

    #[test]
    fn from_entries_rejects_non_hermitian() {
        let mut entries = DensityMatrix::maximally_mixed().entries().to_vec();
        entries[1] = Complex64::new(0.1, 0.0);
        assert!(DensityMatrix::from_entries(entries).is_err());
    }

    #[test]
    fn qubit_marginal_of_ground_state() {
        let m = initial_state().qubit_marginal(2).unwrap();
        assert_eq!(m[0][0], Complex64::new(1.0, 0.0));
        assert_eq!(m[1][1], ZERO);
        assert!(initial_state().qubit_marginal(4).is_err());
    }
}
