use rand::Rng;

use super::profile::MachineProfile;
use crate::error::Result;
use crate::simulator::{
    apply_readout, initial_state, measure_pair, run_circuit, run_with_snapshots, sample_counts,
    OutcomeDistribution,
};
use crate::testbed::{
    decompose_toffoli, full_circuit, step_circuit, step_prefix_lens, MeasurementStep, NUM_STEPS,
};

/// Exact observed distribution (noise and readout included, no shot noise)
/// at `step` for an instantaneous profile.
pub fn exact_step_distribution(
    profile: &MachineProfile,
    step: MeasurementStep,
) -> Result<OutcomeDistribution> {
    let circuit = decompose_toffoli(&step_circuit(step), profile.toffoli_style)?
        .with_durations(&profile.gate_durations);
    let rho = run_circuit(
        &initial_state(),
        &circuit.gates,
        Some(&profile.noise_model()),
    )?;
    Ok(apply_readout(&measure_pair(&rho), &profile.readout))
}

/// Exact observed distributions at all nine steps.
///
/// Step circuits are prefixes of one another, so a single pass over the full
/// circuit with snapshots gives the same states as nine separate runs.
pub fn exact_step_distributions(
    profile: &MachineProfile,
) -> Result<[OutcomeDistribution; NUM_STEPS]> {
    let circuit = decompose_toffoli(&full_circuit(), profile.toffoli_style)?
        .with_durations(&profile.gate_durations);
    let lens = step_prefix_lens(profile.toffoli_style)?;
    let snaps = run_with_snapshots(
        &initial_state(),
        &circuit.gates,
        Some(&profile.noise_model()),
        &lens,
    )?;
    let dists: Vec<OutcomeDistribution> = snaps
        .iter()
        .map(|rho| apply_readout(&measure_pair(rho), &profile.readout))
        .collect();
    Ok(dists.try_into().expect("one snapshot per step"))
}

/// Simulates `step` on the instantaneous profile and returns the empirical
/// distribution of `shots` samples.
pub fn execute_step<R: Rng + ?Sized>(
    profile_at_t: &MachineProfile,
    step: MeasurementStep,
    shots: u32,
    rng: &mut R,
) -> Result<OutcomeDistribution> {
    let exact = exact_step_distribution(profile_at_t, step)?;
    sample_counts(&exact, shots, rng)
}
