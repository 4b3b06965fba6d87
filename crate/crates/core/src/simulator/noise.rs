use serde::{Deserialize, Serialize};

use super::channel::{
    apply_channel_unchecked, damping_channel, depolarizing_channel, KrausChannel,
};
use super::gate::{apply_gate, Gate};
use super::state::{initial_state, DensityMatrix, NUM_QUBITS};
use crate::error::{Error, Result};

/// Instantaneous gate-level noise parameters.
///
/// After every gate the simulator applies depolarizing noise on the gate's
/// qubits at the rate of its class (1-, 2- or 3-qubit), then T1/T2 damping on
/// every qubit for the gate's duration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub t1: [f64; NUM_QUBITS],
    pub t2: [f64; NUM_QUBITS],
    pub err_1q: f64,
    pub err_2q: f64,
    pub err_3q: f64,
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self {
            t1: [f64::INFINITY; NUM_QUBITS],
            t2: [f64::INFINITY; NUM_QUBITS],
            err_1q: 0.0,
            err_2q: 0.0,
            err_3q: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for p in [self.err_1q, self.err_2q, self.err_3q] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidProbability(p));
            }
        }
        for q in 0..NUM_QUBITS {
            let (t1, t2) = (self.t1[q], self.t2[q]);
            if !(t1 > 0.0 && t2 > 0.0) {
                return Err(Error::InvalidTime(format!(
                    "qubit {q}: t1 = {t1}, t2 = {t2}"
                )));
            }
            if t2 > 2.0 * t1 {
                return Err(Error::UnphysicalT2 { t1, t2 });
            }
        }
        Ok(())
    }

    fn gate_error(&self, gate: &Gate) -> f64 {
        match gate.qubits.len() {
            1 => self.err_1q,
            2 => self.err_2q,
            _ => self.err_3q,
        }
    }

    /// Channels inserted after `gate`, in application order.
    pub fn channels_after(&self, gate: &Gate) -> Result<Vec<KrausChannel>> {
        let mut out = Vec::with_capacity(1 + NUM_QUBITS);
        let p = self.gate_error(gate);
        if p > 0.0 {
            out.push(depolarizing_channel(p, &gate.qubits)?);
        }
        if gate.duration > 0.0 {
            for q in 0..NUM_QUBITS {
                if self.t1[q].is_finite() || self.t2[q].is_finite() {
                    out.push(damping_channel(self.t1[q], self.t2[q], gate.duration, q)?);
                }
            }
        }
        Ok(out)
    }
}

/// Evolves `state` through `gates`, inserting noise after each gate when a
/// model is given.
pub fn run_circuit(
    state: &DensityMatrix,
    gates: &[Gate],
    noise: Option<&NoiseModel>,
) -> Result<DensityMatrix> {
    let mut snaps = run_with_snapshots(state, gates, noise, &[gates.len()])?;
    Ok(snaps.pop().expect("one snapshot requested"))
}

/// Evolves `state` through `gates` and returns the state after each prefix
/// length listed in `prefix_lengths` (ascending, each `<= gates.len()`).
///
/// Because the evolution is deterministic, the state after a prefix equals the
/// output of the standalone truncated circuit.
pub fn run_with_snapshots(
    state: &DensityMatrix,
    gates: &[Gate],
    noise: Option<&NoiseModel>,
    prefix_lengths: &[usize],
) -> Result<Vec<DensityMatrix>> {
    if prefix_lengths.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument(
            "prefix lengths must be ascending".into(),
        ));
    }
    if let Some(&last) = prefix_lengths.last() {
        if last > gates.len() {
            return Err(Error::InvalidArgument(format!(
                "prefix length {last} exceeds circuit length {}",
                gates.len()
            )));
        }
    }
    if let Some(model) = noise {
        model.validate()?;
    }
    let mut rho = state.clone();
    let mut out = Vec::with_capacity(prefix_lengths.len());
    let mut next = 0;
    while next < prefix_lengths.len() && prefix_lengths[next] == 0 {
        out.push(rho.clone());
        next += 1;
    }
    for (i, gate) in gates.iter().enumerate() {
        rho = apply_gate(&rho, gate)?;
        if let Some(model) = noise {
            for ch in model.channels_after(gate)? {
                rho = apply_channel_unchecked(&rho, &ch);
            }
        }
        while next < prefix_lengths.len() && prefix_lengths[next] == i + 1 {
            out.push(rho.clone());
            next += 1;
        }
    }
    Ok(out)
}

/// Noiseless evolution of `|0000>` through `gates`.
pub fn run_ideal(gates: &[Gate]) -> Result<DensityMatrix> {
    run_circuit(&initial_state(), gates, None)
}
