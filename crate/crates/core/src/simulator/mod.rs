//! Exact density-matrix simulation of the 4-qubit register under Kraus noise.

mod channel;
mod gate;
mod measure;
mod noise;
mod state;

pub use channel::{
    apply_channel, damping_channel, damping_parameters, depolarizing_channel, KrausChannel,
};
pub use gate::{apply_gate, Gate, GateKind};
pub use measure::{
    apply_readout, measure_pair, sample_counts, sample_outcome_counts, ConfusionMatrix,
    OutcomeDistribution,
};
pub use noise::{run_circuit, run_ideal, run_with_snapshots, NoiseModel};
pub use state::{initial_state, DensityMatrix, DIM, NUM_QUBITS};
