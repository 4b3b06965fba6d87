use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::profile::MachineProfile;
use crate::error::{Error, Result};
use crate::rng::derive_rng;

/// A block of consecutive slow-protocol runs whose gaps are inflated, as
/// happens when a shared queue slows down.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueueAnomaly {
    /// First affected run (0-based, inclusive).
    pub start_run: usize,
    /// Last affected run (exclusive).
    pub end_run: usize,
    /// Extra seconds added to each affected gap.
    pub extra_gap_s: f64,
}

/// Timing model for the acquisition protocols.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleConfig {
    /// Concurrent queue slots per machine in the fast protocol.
    pub fast_slots: usize,
    /// Uniform task wall-time range (seconds) for fast tasks.
    pub fast_wall_s: (f64, f64),
    /// Uniform task wall-time range (seconds) for slow tasks.
    pub slow_wall_s: (f64, f64),
    /// Minimum pause between consecutive slow tasks.
    pub slow_min_gap_s: f64,
    pub anomalies: Vec<QueueAnomaly>,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            fast_slots: 20,
            fast_wall_s: (30.0, 90.0),
            slow_wall_s: (60.0, 180.0),
            slow_min_gap_s: 120.0,
            anomalies: Vec::new(),
        }
    }
}

impl ScheduleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fast_slots == 0 {
            return Err(Error::InvalidArgument(
                "fast_slots must be at least 1".into(),
            ));
        }
        for (name, (lo, hi)) in [
            ("fast_wall_s", self.fast_wall_s),
            ("slow_wall_s", self.slow_wall_s),
        ] {
            if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} = ({lo}, {hi})")));
            }
        }
        if !(self.slow_min_gap_s >= 0.0) {
            return Err(Error::InvalidArgument(
                "slow_min_gap_s must be non-negative".into(),
            ));
        }
        if let Some(a) = self
            .anomalies
            .iter()
            .find(|a| !(a.extra_gap_s >= 0.0) || a.end_run < a.start_run)
        {
            return Err(Error::InvalidArgument(format!("bad queue anomaly {a:?}")));
        }
        Ok(())
    }
}

/// When a given run of a machine starts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduledRun {
    pub machine_id: String,
    pub run_id: usize,
    /// Seconds since the schedule origin, rounded to milliseconds.
    pub timestamp: f64,
}

fn round_ms(t: f64) -> f64 {
    (t * 1000.0).round() / 1000.0
}

fn wall_time<R: Rng + ?Sized>(range: (f64, f64), rng: &mut R) -> f64 {
    if range.1 > range.0 {
        rng.random_range(range.0..range.1)
    } else {
        range.0
    }
}

fn check_inputs(n_runs: usize, machines: &[MachineProfile]) -> Result<()> {
    if machines.is_empty() {
        return Err(Error::EmptyMachines);
    }
    if n_runs == 0 {
        return Err(Error::InvalidArgument(
            "n_runs_per_machine must be at least 1".into(),
        ));
    }
    Ok(())
}

/// Start times of fast tasks: each machine keeps `fast_slots` tasks in
/// flight, and a finished slot immediately takes the next task.
pub fn fast_start_times<R: Rng + ?Sized>(
    n_tasks: usize,
    cfg: &ScheduleConfig,
    rng: &mut R,
) -> Vec<f64> {
    let mut free_at: BinaryHeap<Reverse<u64>> = BinaryHeap::new();
    let mut starts = Vec::with_capacity(n_tasks);
    for i in 0..n_tasks {
        // integer milliseconds keep the heap ordering exact
        let start_ms = if i < cfg.fast_slots {
            0
        } else {
            free_at.pop().expect("slots are occupied").0
        };
        let wall_ms = (wall_time(cfg.fast_wall_s, rng) * 1000.0).round() as u64;
        free_at.push(Reverse(start_ms + wall_ms));
        starts.push(start_ms as f64 / 1000.0);
    }
    starts
}

/// Start times of slow tasks: strictly sequential, each gap at least the
/// configured minimum pause plus the previous task's wall-time.
pub fn slow_start_times<R: Rng + ?Sized>(
    n_tasks: usize,
    cfg: &ScheduleConfig,
    rng: &mut R,
) -> Vec<f64> {
    let mut starts = Vec::with_capacity(n_tasks);
    let mut t = 0.0;
    for i in 0..n_tasks {
        starts.push(round_ms(t));
        let extra: f64 = cfg
            .anomalies
            .iter()
            .filter(|a| (a.start_run..a.end_run).contains(&(i + 1)))
            .map(|a| a.extra_gap_s)
            .sum();
        t += cfg.slow_min_gap_s + wall_time(cfg.slow_wall_s, rng) + extra;
    }
    starts
}

fn schedule_with(
    n_runs_per_machine: usize,
    machines: &[MachineProfile],
    cfg: &ScheduleConfig,
    seed: u64,
    fast: bool,
) -> Result<Vec<ScheduledRun>> {
    check_inputs(n_runs_per_machine, machines)?;
    cfg.validate()?;
    let mut out = Vec::with_capacity(n_runs_per_machine * machines.len());
    for m in machines {
        let mut rng = derive_rng(seed, &["schedule".into(), m.machine_id.as_str().into()]);
        let starts = if fast {
            fast_start_times(n_runs_per_machine, cfg, &mut rng)
        } else {
            slow_start_times(n_runs_per_machine, cfg, &mut rng)
        };
        out.extend(
            starts
                .into_iter()
                .enumerate()
                .map(|(run_id, timestamp)| ScheduledRun {
                    machine_id: m.machine_id.clone(),
                    run_id,
                    timestamp,
                }),
        );
    }
    Ok(out)
}

/// Fast protocol schedule for every machine, machine-major order.
pub fn schedule_fast(
    n_runs_per_machine: usize,
    machines: &[MachineProfile],
    cfg: &ScheduleConfig,
    seed: u64,
) -> Result<Vec<ScheduledRun>> {
    schedule_with(n_runs_per_machine, machines, cfg, seed, true)
}

/// Slow protocol schedule for every machine, machine-major order.
pub fn schedule_slow(
    n_runs_per_machine: usize,
    machines: &[MachineProfile],
    cfg: &ScheduleConfig,
    seed: u64,
) -> Result<Vec<ScheduledRun>> {
    schedule_with(n_runs_per_machine, machines, cfg, seed, false)
}
