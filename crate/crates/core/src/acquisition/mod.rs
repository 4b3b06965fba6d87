//! Synthetic devices, acquisition schedules and persisted datasets of runs.

mod dataset;
mod execute;
mod profile;
mod schedule;

pub use dataset::{
    generate_dataset, generate_dataset_with, load_dataset, runs_per_machine, save_dataset, Dataset,
    GenerationConfig, Protocol, Run, StepSequence, MANIFEST_FILE, RUNS_FILE,
};
pub use execute::{exact_step_distribution, exact_step_distributions, execute_step};
pub use profile::{
    builtin_ids, builtin_profile, builtin_profiles, params_at, DriftSpec, MachineProfile,
};
pub use schedule::{
    fast_start_times, schedule_fast, schedule_slow, slow_start_times, QueueAnomaly, ScheduleConfig,
    ScheduledRun,
};
