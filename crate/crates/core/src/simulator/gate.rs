use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::state::{DensityMatrix, NUM_QUBITS};
use crate::error::{Error, Result};

/// Gate kinds understood by the simulator.
///
/// `T` and `Tdg` only appear in decomposed Toffoli gates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GateKind {
    H,
    X,
    T,
    Tdg,
    Cnot,
    Toffoli,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::H | GateKind::X | GateKind::T | GateKind::Tdg => 1,
            GateKind::Cnot => 2,
            GateKind::Toffoli => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::X => "X",
            GateKind::T => "T",
            GateKind::Tdg => "TDG",
            GateKind::Cnot => "CNOT",
            GateKind::Toffoli => "TOFFOLI",
        }
    }

    /// Row-major unitary in the local basis (first listed qubit is the most
    /// significant bit; the target is listed last).
    pub fn local_unitary(self) -> Vec<Complex64> {
        let c = |re: f64| Complex64::new(re, 0.0);
        match self {
            GateKind::H => vec![
                c(FRAC_1_SQRT_2),
                c(FRAC_1_SQRT_2),
                c(FRAC_1_SQRT_2),
                c(-FRAC_1_SQRT_2),
            ],
            GateKind::X => vec![c(0.0), c(1.0), c(1.0), c(0.0)],
            GateKind::T => vec![
                c(1.0),
                c(0.0),
                c(0.0),
                Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2),
            ],
            GateKind::Tdg => vec![
                c(1.0),
                c(0.0),
                c(0.0),
                Complex64::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
            ],
            GateKind::Cnot | GateKind::Toffoli => {
                let d = 1 << self.arity();
                let mut u = vec![c(0.0); d * d];
                for i in 0..d - 2 {
                    u[i * d + i] = c(1.0);
                }
                u[(d - 2) * d + (d - 1)] = c(1.0);
                u[(d - 1) * d + (d - 2)] = c(1.0);
                u
            }
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "H" => Ok(GateKind::H),
            "X" => Ok(GateKind::X),
            "T" => Ok(GateKind::T),
            "TDG" => Ok(GateKind::Tdg),
            "CNOT" => Ok(GateKind::Cnot),
            "TOFFOLI" => Ok(GateKind::Toffoli),
            other => Err(Error::InvalidGate(format!("unknown gate kind {other:?}"))),
        }
    }
}

/// A gate application: kind, ordered qubits (controls first, target last)
/// and physical duration in seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub duration: f64,
}

impl Gate {
    pub fn new(kind: GateKind, qubits: &[usize], duration: f64) -> Result<Self> {
        let gate = Self {
            kind,
            qubits: qubits.to_vec(),
            duration,
        };
        gate.validate()?;
        Ok(gate)
    }

    pub fn h(q: usize) -> Self {
        Self::unchecked(GateKind::H, &[q])
    }

    pub fn x(q: usize) -> Self {
        Self::unchecked(GateKind::X, &[q])
    }

    pub fn t(q: usize) -> Self {
        Self::unchecked(GateKind::T, &[q])
    }

    pub fn tdg(q: usize) -> Self {
        Self::unchecked(GateKind::Tdg, &[q])
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self::unchecked(GateKind::Cnot, &[control, target])
    }

    pub fn toffoli(c1: usize, c2: usize, target: usize) -> Self {
        Self::unchecked(GateKind::Toffoli, &[c1, c2, target])
    }

    fn unchecked(kind: GateKind, qubits: &[usize]) -> Self {
        Self {
            kind,
            qubits: qubits.to_vec(),
            duration: 0.0,
        }
    }

    pub fn with_duration(mut self, duration: f64) -> Self {
        self.duration = duration;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(&q) = self.qubits.iter().find(|&&q| q >= NUM_QUBITS) {
            return Err(Error::QubitOutOfRange(q));
        }
        if self.qubits.len() != self.kind.arity() {
            return Err(Error::InvalidGate(format!(
                "{} expects {} qubit(s), got {}",
                self.kind,
                self.kind.arity(),
                self.qubits.len()
            )));
        }
        for (i, a) in self.qubits.iter().enumerate() {
            if self.qubits[i + 1..].contains(a) {
                return Err(Error::InvalidGate(format!(
                    "{} acts twice on qubit {a}",
                    self.kind
                )));
            }
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(Error::InvalidTime(format!(
                "gate duration {}",
                self.duration
            )));
        }
        Ok(())
    }
}

/// Returns `U rho U^dagger` for the gate's unitary lifted to the register.
pub fn apply_gate(state: &DensityMatrix, gate: &Gate) -> Result<DensityMatrix> {
    gate.validate()?;
    Ok(state.conjugated_local(&gate.kind.local_unitary(), &gate.qubits))
}
