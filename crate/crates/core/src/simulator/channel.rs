use num_complex::Complex64;

use super::state::{lift_local, DensityMatrix, DIM, NUM_QUBITS, TRACE_TOL};
use crate::error::{Error, Result};

/// A completely positive trace-preserving map in Kraus form.
///
/// Operators are stored in their local form on `qubits` (first listed qubit
/// is the most significant local bit); [`KrausChannel::operators`] returns
/// them lifted to the full register.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    qubits: Vec<usize>,
    ops: Vec<Vec<Complex64>>,
}

impl KrausChannel {
    /// Builds a channel from local operators, checking dimensions, qubit
    /// indices and completeness.
    pub fn new(qubits: &[usize], ops: Vec<Vec<Complex64>>) -> Result<Self> {
        if let Some(&q) = qubits.iter().find(|&&q| q >= NUM_QUBITS) {
            return Err(Error::QubitOutOfRange(q));
        }
        let d = 1usize << qubits.len();
        if let Some(bad) = ops.iter().find(|op| op.len() != d * d) {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                got: bad.len(),
            });
        }
        let ch = Self {
            qubits: qubits.to_vec(),
            ops,
        };
        let dev = ch.completeness_error();
        if dev > TRACE_TOL {
            return Err(Error::NonCptp(dev));
        }
        Ok(ch)
    }

    /// Channel from operators already lifted to the full register
    /// (row-major `16 x 16`). Not checked for completeness;
    /// [`apply_channel`] rejects non-CPTP sets.
    pub fn from_full_operators(ops: Vec<Vec<Complex64>>) -> Result<Self> {
        if let Some(bad) = ops.iter().find(|op| op.len() != DIM * DIM) {
            return Err(Error::DimensionMismatch {
                expected: DIM * DIM,
                got: bad.len(),
            });
        }
        // local index ordering with qubits [3,2,1,0] equals the register index
        Ok(Self {
            qubits: (0..NUM_QUBITS).rev().collect(),
            ops,
        })
    }

    pub fn identity() -> Self {
        Self {
            qubits: vec![0],
            ops: vec![identity_local(2)],
        }
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Kraus operators lifted to `16 x 16` row-major matrices.
    pub fn operators(&self) -> Vec<Vec<Complex64>> {
        self.ops
            .iter()
            .map(|op| lift_local(op, &self.qubits))
            .collect()
    }

    /// Max-modulus deviation of `sum_i K_i^dagger K_i` from the identity.
    pub fn completeness_error(&self) -> f64 {
        let d = 1usize << self.qubits.len();
        let mut acc = vec![Complex64::new(0.0, 0.0); d * d];
        for op in &self.ops {
            for r in 0..d {
                for c in 0..d {
                    let mut s = Complex64::new(0.0, 0.0);
                    for m in 0..d {
                        s += op[m * d + r].conj() * op[m * d + c];
                    }
                    acc[r * d + c] += s;
                }
            }
        }
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in 0..d {
                let target = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((acc[r * d + c] - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}

fn identity_local(d: usize) -> Vec<Complex64> {
    let mut m = vec![Complex64::new(0.0, 0.0); d * d];
    for i in 0..d {
        m[i * d + i] = Complex64::new(1.0, 0.0);
    }
    m
}

fn scaled(op: &[Complex64], s: f64) -> Vec<Complex64> {
    op.iter().map(|z| z * s).collect()
}

fn kron(a: &[Complex64], da: usize, b: &[Complex64], db: usize) -> Vec<Complex64> {
    let d = da * db;
    let mut out = vec![Complex64::new(0.0, 0.0); d * d];
    for ar in 0..da {
        for ac in 0..da {
            let x = a[ar * da + ac];
            for br in 0..db {
                for bc in 0..db {
                    out[(ar * db + br) * d + ac * db + bc] = x * b[br * db + bc];
                }
            }
        }
    }
    out
}

fn pauli(index: usize) -> Vec<Complex64> {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    match index {
        0 => vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        1 => vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        2 => vec![c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)],
        3 => vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
        _ => unreachable!("pauli index {index}"),
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidProbability(p))
    }
}

/// Depolarizing channel on `qubits`: with probability `p` the acted-on
/// qubits are replaced by the maximally mixed state.
///
/// Kraus form: identity with weight `1 - p (4^k - 1) / 4^k`, every
/// non-identity Pauli string with weight `p / 4^k`.
pub fn depolarizing_channel(p: f64, qubits: &[usize]) -> Result<KrausChannel> {
    check_probability(p)?;
    let k = qubits.len();
    if !(1..=3).contains(&k) {
        return Err(Error::InvalidArgument(format!(
            "depolarizing channel acts on 1 to 3 qubits, got {k}"
        )));
    }
    let d = 1 << k;
    let n_strings = 1usize << (2 * k);
    let pauli_weight = p / n_strings as f64;
    let id_weight = (1.0 - pauli_weight * (n_strings - 1) as f64).max(0.0);
    let mut ops = vec![scaled(&identity_local(d), id_weight.sqrt())];
    if p > 0.0 {
        let weight = pauli_weight.sqrt();
        for string in 1..n_strings {
            // digit j (base 4, most significant first) selects the Pauli on qubits[j]
            let mut op = vec![Complex64::new(1.0, 0.0)];
            let mut dim = 1;
            for j in 0..k {
                let digit = (string >> (2 * (k - 1 - j))) & 3;
                op = kron(&op, dim, &pauli(digit), 2);
                dim *= 2;
            }
            ops.push(scaled(&op, weight));
        }
    }
    KrausChannel::new(qubits, ops)
}

/// Amplitude damping followed by pure dephasing on one qubit for an elapsed
/// `duration`, parametrized by T1 and T2 (seconds; infinite values allowed).
///
/// `gamma = 1 - exp(-duration / t1)` and
/// `lambda = 1 - exp(-duration * (1/t2 - 1/(2 t1)))`, where the dephasing
/// part multiplies coherences by `1 - lambda`.
pub fn damping_channel(t1: f64, t2: f64, duration: f64, qubit: usize) -> Result<KrausChannel> {
    if !(t1 > 0.0) {
        return Err(Error::InvalidTime(format!("t1 must be positive, got {t1}")));
    }
    if !(t2 > 0.0) {
        return Err(Error::InvalidTime(format!("t2 must be positive, got {t2}")));
    }
    if t2 > 2.0 * t1 {
        return Err(Error::UnphysicalT2 { t1, t2 });
    }
    if !(duration >= 0.0) {
        return Err(Error::InvalidTime(format!(
            "duration must be non-negative, got {duration}"
        )));
    }
    let (gamma, lambda) = damping_parameters(t1, t2, duration);
    let c = |re: f64| Complex64::new(re, 0.0);
    let amp = [
        vec![c(1.0), c(0.0), c(0.0), c((1.0 - gamma).sqrt())],
        vec![c(0.0), c(gamma.sqrt()), c(0.0), c(0.0)],
    ];
    let deph = [
        scaled(&pauli(0), (1.0 - lambda / 2.0).sqrt()),
        scaled(&pauli(3), (lambda / 2.0).sqrt()),
    ];
    let mut ops = Vec::with_capacity(4);
    for dp in &deph {
        for a in &amp {
            let op = matmul2(dp, a);
            if op.iter().any(|z| z.norm() > 0.0) {
                ops.push(op);
            }
        }
    }
    KrausChannel::new(&[qubit], ops)
}

/// `(gamma, lambda)` for the combined damping channel.
pub fn damping_parameters(t1: f64, t2: f64, duration: f64) -> (f64, f64) {
    if duration == 0.0 {
        return (0.0, 0.0);
    }
    let gamma = -(-duration / t1).exp_m1();
    let rate_phi = (1.0 / t2 - 0.5 / t1).max(0.0);
    let lambda = -(-duration * rate_phi).exp_m1();
    (gamma, lambda)
}

fn matmul2(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); 4];
    for r in 0..2 {
        for c in 0..2 {
            out[r * 2 + c] = a[r * 2] * b[c] + a[r * 2 + 1] * b[2 + c];
        }
    }
    out
}

/// `sum_i K_i rho K_i^dagger`.
pub fn apply_channel(state: &DensityMatrix, ch: &KrausChannel) -> Result<DensityMatrix> {
    let dev = ch.completeness_error();
    if dev > TRACE_TOL {
        return Err(Error::NonCptp(dev));
    }
    Ok(apply_channel_unchecked(state, ch))
}

pub(crate) fn apply_channel_unchecked(state: &DensityMatrix, ch: &KrausChannel) -> DensityMatrix {
    let mut out = DensityMatrix::zeroed();
    for op in &ch.ops {
        out.add_assign(&state.conjugated_local(op, &ch.qubits));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::gate::{apply_gate, Gate};
    use crate::simulator::state::initial_state;

    #[test]
    fn zero_depolarization_is_single_identity() {
        let ch = depolarizing_channel(0.0, &[1]).unwrap();
        assert_eq!(ch.len(), 1);
        let full = &ch.operators()[0];
        for i in 0..DIM {
            for j in 0..DIM {
                let e = if i == j { 1.0 } else { 0.0 };
                assert_eq!(full[i * DIM + j], Complex64::new(e, 0.0));
            }
        }
    }

    #[test]
    fn full_single_qubit_depolarization_gives_half_identity() {
        let ch = depolarizing_channel(1.0, &[0]).unwrap();
        let out = apply_channel(&initial_state(), &ch).unwrap();
        let m = out.qubit_marginal(0).unwrap();
        assert!((m[0][0].re - 0.5).abs() < 1e-15);
        assert!((m[1][1].re - 0.5).abs() < 1e-15);
        assert!(m[0][1].norm() < 1e-15);
    }

    #[test]
    fn two_qubit_depolarizing_is_cptp() {
        let ch = depolarizing_channel(0.01, &[0, 2]).unwrap();
        assert_eq!(ch.len(), 16);
        // check on the lifted operators directly
        let mut acc = vec![Complex64::new(0.0, 0.0); DIM * DIM];
        for op in ch.operators() {
            for r in 0..DIM {
                for c in 0..DIM {
                    for m in 0..DIM {
                        acc[r * DIM + c] += op[m * DIM + r].conj() * op[m * DIM + c];
                    }
                }
            }
        }
        for r in 0..DIM {
            for c in 0..DIM {
                let e = if r == c { 1.0 } else { 0.0 };
                assert!((acc[r * DIM + c] - Complex64::new(e, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn invalid_probability_is_rejected() {
        let err = depolarizing_channel(1.5, &[0]).unwrap_err();
        assert!(err.to_string().contains("invalid probability"));
        assert!(depolarizing_channel(-0.1, &[0]).is_err());
        assert!(depolarizing_channel(0.1, &[0, 1, 2, 3]).is_err());
    }

    #[test]
    fn zero_duration_damping_is_identity() {
        let ch = damping_channel(50e-6, 70e-6, 0.0, 2).unwrap();
        let rho = apply_gate(&initial_state(), &Gate::h(2)).unwrap();
        let out = apply_channel(&rho, &ch).unwrap();
        assert!(out.max_abs_diff(&rho) < 1e-12);
    }

    #[test]
    fn long_duration_relaxes_to_ground() {
        let excited = DensityMatrix::basis_state(1 << 3);
        let ch = damping_channel(100e-6, 150e-6, 1.0, 3).unwrap();
        let out = apply_channel(&excited, &ch).unwrap();
        let m = out.qubit_marginal(3).unwrap();
        assert!((m[0][0].re - 1.0).abs() < 1e-9);
        assert!(m[1][1].re.abs() < 1e-9);
    }

    #[test]
    fn gamma_closed_form() {
        let (gamma, _) = damping_parameters(100e-6, 100e-6, 1e-6);
        assert!((gamma - (1.0 - (-0.01f64).exp())).abs() < 1e-15);
        assert!((gamma - 0.00995).abs() < 1e-5);
    }

    #[test]
    fn coherence_decays_with_t2() {
        let (t1, t2, dt) = (80e-6, 60e-6, 5e-6);
        let plus = apply_gate(&initial_state(), &Gate::h(0)).unwrap();
        let out = apply_channel(&plus, &damping_channel(t1, t2, dt, 0).unwrap()).unwrap();
        let coh = out.qubit_marginal(0).unwrap()[0][1].re;
        assert!((coh - 0.5 * (-dt / t2).exp()).abs() < 1e-12);
    }

    #[test]
    fn unphysical_t2_is_rejected() {
        let err = damping_channel(50e-6, 101e-6, 1e-6, 0).unwrap_err();
        assert!(err.to_string().contains("unphysical T2"));
    }

    #[test]
    fn non_cptp_set_is_rejected_on_apply() {
        let mut ops = depolarizing_channel(0.0, &[0]).unwrap().operators();
        ops.push(ops[0].clone());
        let ch = KrausChannel::from_full_operators(ops).unwrap();
        let err = apply_channel(&initial_state(), &ch).unwrap_err();
        assert!(err.to_string().contains("non-CPTP channel"));
    }

    #[test]
    fn bell_pair_depolarized_on_q0_has_mixed_marginal() {
        let bell = apply_gate(
            &apply_gate(&initial_state(), &Gate::h(0)).unwrap(),
            &Gate::cnot(0, 1),
        )
        .unwrap();
        let out = apply_channel(&bell, &depolarizing_channel(1.0, &[0]).unwrap()).unwrap();
        let m = out.qubit_marginal(0).unwrap();
        assert!((m[0][0].re - 0.5).abs() < 1e-12);
        assert!((m[1][1].re - 0.5).abs() < 1e-12);
        assert!(m[0][1].norm() < 1e-12);
        // full depolarization of one half of a Bell pair leaves I/4 on (q1, q0)
        for i in 0..4 {
            assert!((out.get(i, i).re - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn lifted_full_channel_matches_local_form() {
        let local = damping_channel(40e-6, 50e-6, 3e-6, 2).unwrap();
        let full = KrausChannel::from_full_operators(local.operators()).unwrap();
        let rho = apply_gate(&initial_state(), &Gate::h(2)).unwrap();
        let rho = apply_gate(&rho, &Gate::cnot(2, 3)).unwrap();
        let a = apply_channel(&rho, &local).unwrap();
        let b = apply_channel(&rho, &full).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-14);
    }
}
