use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::execute::exact_step_distributions;
use super::profile::{params_at, MachineProfile};
use super::schedule::{schedule_fast, schedule_slow, ScheduleConfig, ScheduledRun};
use crate::error::{Error, Result};
use crate::rng::derive_rng;
use crate::simulator::{sample_counts, OutcomeDistribution};
use crate::testbed::NUM_STEPS;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RUNS_FILE: &str = "runs.csv";
const RUNS_HEADER: &str = "run_id,machine_id,timestamp_s,step,shots,p00,p01,p10,p11";
const FORMAT_VERSION: u32 = 1;
/// Six printed decimals lose at most 5e-7 per component.
const LOAD_SUM_TOL: f64 = 4.0 * 5e-7 + 1e-12;

/// Acquisition regime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    /// Twenty queued tasks in flight per machine, eight 1000-shot
    /// distributions per step and task.
    Fast,
    /// One task at a time with a pause between tasks, one distribution per
    /// step and task.
    Slow,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Fast => "fast",
            Protocol::Slow => "slow",
        }
    }

    /// Distributions recorded per step and run.
    pub fn sub_samples(self) -> usize {
        match self {
            Protocol::Fast => 8,
            Protocol::Slow => 1,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Protocol::Fast),
            "slow" => Ok(Protocol::Slow),
            other => Err(Error::InvalidArgument(format!(
                "unknown protocol {other:?}"
            ))),
        }
    }
}

/// Distributions of one sub-sample at the nine steps.
pub type StepSequence = [OutcomeDistribution; NUM_STEPS];

/// One time-stamped task on one machine.
#[derive(Clone, Debug, PartialEq)]
pub struct Run {
    /// Per-machine run index, starting at 0.
    pub run_id: usize,
    pub machine_id: String,
    /// Seconds since the dataset epoch.
    pub timestamp: f64,
    /// One (slow) or eight (fast) sequences of nine distributions.
    pub samples: Vec<StepSequence>,
    pub shots_per_distribution: u32,
}

/// Options controlling dataset generation beyond the protocol defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub shots: u32,
    pub schedule: ScheduleConfig,
    /// Drift-clock time of the dataset's timestamp zero.
    pub epoch_s: f64,
    /// Start offsets (seconds since the epoch) of acquisition sessions; each
    /// session records `n_runs_per_machine` runs per machine.
    pub sessions_s: Vec<f64>,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            shots: 1000,
            schedule: ScheduleConfig::default(),
            epoch_s: 0.0,
            sessions_s: vec![0.0],
        }
    }
}

/// A generated (or loaded) collection of runs plus everything needed to
/// regenerate it.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub protocol: Protocol,
    pub runs: Vec<Run>,
    pub profiles: Vec<MachineProfile>,
    pub seed: u64,
    pub epoch_s: f64,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    protocol: Protocol,
    seed: u64,
    epoch_s: f64,
    total_runs: usize,
    profiles: Vec<MachineProfile>,
}

impl Dataset {
    pub fn machine_ids(&self) -> Vec<&str> {
        self.profiles
            .iter()
            .map(|p| p.machine_id.as_str())
            .collect()
    }

    /// Runs of one machine in run-id order.
    pub fn runs_of(&self, machine_id: &str) -> Vec<&Run> {
        self.runs
            .iter()
            .filter(|r| r.machine_id == machine_id)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let corrupt = |msg: String| Err(Error::CorruptDataset(msg));
        let ids: Vec<&str> = self.machine_ids();
        for (i, id) in ids.iter().enumerate() {
            if ids[..i].contains(id) {
                return corrupt(format!("duplicate machine id {id}"));
            }
        }
        let expected_samples = self.protocol.sub_samples();
        let mut last: HashMap<&str, (usize, f64)> = HashMap::new();
        for run in &self.runs {
            if !ids.contains(&run.machine_id.as_str()) {
                return corrupt(format!(
                    "run references undeclared machine {}",
                    run.machine_id
                ));
            }
            if run.samples.len() != expected_samples {
                return corrupt(format!(
                    "run {} of {} has {} sub-samples, {} protocol needs {expected_samples}",
                    run.run_id,
                    run.machine_id,
                    run.samples.len(),
                    self.protocol
                ));
            }
            if !(run.timestamp >= 0.0) {
                return corrupt(format!("negative timestamp in run {}", run.run_id));
            }
            if run.shots_per_distribution == 0 {
                return corrupt(format!("zero shots in run {}", run.run_id));
            }
            if let Some(&(prev_id, prev_t)) = last.get(run.machine_id.as_str()) {
                if run.run_id <= prev_id || run.timestamp < prev_t {
                    return corrupt(format!(
                        "runs of {} out of order at run {}",
                        run.machine_id, run.run_id
                    ));
                }
            }
            last.insert(&run.machine_id, (run.run_id, run.timestamp));
        }
        Ok(())
    }

    /// Writes `manifest.json` and `runs.csv` into directory `path`.
    pub fn save(&self, path: &Path) -> Result<()> {
        save_dataset(self, path)
    }

    pub fn load(path: &Path) -> Result<Dataset> {
        load_dataset(path)
    }
}

/// Runs the full acquisition pipeline with default options.
pub fn generate_dataset(
    machines: &[MachineProfile],
    protocol: Protocol,
    n_runs_per_machine: usize,
    seed: u64,
) -> Result<Dataset> {
    generate_dataset_with(
        machines,
        protocol,
        n_runs_per_machine,
        seed,
        &GenerationConfig::default(),
    )
}

/// Schedule, drift, simulation and shot sampling for every machine.
///
/// Each run draws from its own stream keyed by `(seed, machine_id, run_id)`,
/// so the output does not depend on how work is spread across threads.
pub fn generate_dataset_with(
    machines: &[MachineProfile],
    protocol: Protocol,
    n_runs_per_machine: usize,
    seed: u64,
    cfg: &GenerationConfig,
) -> Result<Dataset> {
    for m in machines {
        m.validate()?;
    }
    if cfg.shots == 0 {
        return Err(Error::EmptySample);
    }
    if cfg.sessions_s.is_empty()
        || cfg.sessions_s.windows(2).any(|w| w[1] < w[0])
        || cfg.sessions_s[0] < 0.0
    {
        return Err(Error::InvalidArgument(
            "sessions must be non-empty, non-negative and ascending".into(),
        ));
    }
    let mut plan: Vec<ScheduledRun> = Vec::new();
    for (session, &offset) in cfg.sessions_s.iter().enumerate() {
        let session_seed = crate::rng::derive_seed(seed, &["session".into(), session.into()]);
        let sched = match protocol {
            Protocol::Fast => {
                schedule_fast(n_runs_per_machine, machines, &cfg.schedule, session_seed)?
            }
            Protocol::Slow => {
                schedule_slow(n_runs_per_machine, machines, &cfg.schedule, session_seed)?
            }
        };
        plan.extend(sched.into_iter().map(|mut r| {
            r.run_id += session * n_runs_per_machine;
            r.timestamp = ((r.timestamp + offset) * 1000.0).round() / 1000.0;
            r
        }));
    }
    // machine-major, then run id
    let order: HashMap<&str, usize> = machines
        .iter()
        .enumerate()
        .map(|(i, m)| (m.machine_id.as_str(), i))
        .collect();
    plan.sort_by_key(|r| (order[r.machine_id.as_str()], r.run_id));
    let by_id: HashMap<&str, &MachineProfile> = machines
        .iter()
        .map(|m| (m.machine_id.as_str(), m))
        .collect();

    let runs = plan
        .par_iter()
        .map(|slot| {
            let profile = by_id[slot.machine_id.as_str()];
            let mut rng = derive_rng(
                seed,
                &[
                    "run".into(),
                    slot.machine_id.as_str().into(),
                    slot.run_id.into(),
                ],
            );
            let instant = params_at(profile, cfg.epoch_s + slot.timestamp, &mut rng);
            let exact = exact_step_distributions(&instant)?;
            let samples = (0..protocol.sub_samples())
                .map(|_| {
                    let seq: Vec<OutcomeDistribution> = exact
                        .iter()
                        .map(|d| sample_counts(d, cfg.shots, &mut rng))
                        .collect::<Result<_>>()?;
                    Ok(seq.try_into().expect("nine steps"))
                })
                .collect::<Result<Vec<StepSequence>>>()?;
            Ok(Run {
                run_id: slot.run_id,
                machine_id: slot.machine_id.clone(),
                timestamp: slot.timestamp,
                samples,
                shots_per_distribution: cfg.shots,
            })
        })
        .collect::<Result<Vec<Run>>>()?;
    let ds = Dataset {
        protocol,
        runs,
        profiles: machines.to_vec(),
        seed,
        epoch_s: cfg.epoch_s,
    };
    ds.validate()?;
    Ok(ds)
}

/// Writes the dataset directory (created if missing).
pub fn save_dataset(ds: &Dataset, dir: &Path) -> Result<()> {
    ds.validate()?;
    if let Some(p) = ds
        .profiles
        .iter()
        .find(|p| !p.base_t1.iter().chain(&p.base_t2).all(|t| t.is_finite()))
    {
        return Err(Error::InvalidProfile(format!(
            "{}: infinite relaxation times cannot be stored in a manifest",
            p.machine_id
        )));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        protocol: ds.protocol,
        seed: ds.seed,
        epoch_s: ds.epoch_s,
        total_runs: ds.runs.len(),
        profiles: ds.profiles.clone(),
    };
    let manifest_path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(&manifest_path, text).map_err(|e| Error::io(&manifest_path, e))?;

    let runs_path = dir.join(RUNS_FILE);
    let file = fs::File::create(&runs_path).map_err(|e| Error::io(&runs_path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(&runs_path, e);
    writeln!(w, "{RUNS_HEADER}").map_err(io)?;
    for run in &ds.runs {
        for seq in &run.samples {
            for (k, d) in seq.iter().enumerate() {
                let p = d.probabilities();
                writeln!(
                    w,
                    "{},{},{:.3},{},{},{:.6},{:.6},{:.6},{:.6}",
                    run.run_id,
                    run.machine_id,
                    run.timestamp,
                    k + 1,
                    run.shots_per_distribution,
                    p[0],
                    p[1],
                    p[2],
                    p[3]
                )
                .map_err(io)?;
            }
        }
    }
    w.flush().map_err(io)?;
    Ok(())
}

struct Row {
    run_id: usize,
    machine_id: String,
    timestamp: f64,
    step: usize,
    shots: u32,
    p: [f64; 4],
}

fn parse_row(line: &str) -> std::result::Result<Row, String> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 9 {
        return Err(format!("expected 9 fields, found {}", fields.len()));
    }
    let num = |i: usize, name: &str| -> std::result::Result<f64, String> {
        fields[i]
            .parse::<f64>()
            .map_err(|_| format!("bad {name} {:?}", fields[i]))
    };
    let p = [
        num(5, "p00")?,
        num(6, "p01")?,
        num(7, "p10")?,
        num(8, "p11")?,
    ];
    Ok(Row {
        run_id: fields[0]
            .parse()
            .map_err(|_| format!("bad run_id {:?}", fields[0]))?,
        machine_id: fields[1].to_string(),
        timestamp: num(2, "timestamp_s")?,
        step: fields[3]
            .parse()
            .map_err(|_| format!("bad step {:?}", fields[3]))?,
        shots: fields[4]
            .parse()
            .map_err(|_| format!("bad shots {:?}", fields[4]))?,
        p,
    })
}

/// Reads a dataset directory written by [`save_dataset`].
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Malformed {
        path: manifest_path.clone(),
        line: e.line(),
        msg: e.to_string(),
    })?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::CorruptDataset(format!(
            "unsupported format version {}",
            manifest.format_version
        )));
    }
    for p in &manifest.profiles {
        p.validate()
            .map_err(|e| Error::CorruptDataset(format!("profile {}: {e}", p.machine_id)))?;
    }

    let runs_path = dir.join(RUNS_FILE);
    let body = fs::read_to_string(&runs_path).map_err(|e| Error::io(&runs_path, e))?;
    let malformed = |line: usize, msg: String| Error::Malformed {
        path: runs_path.clone(),
        line,
        msg,
    };
    if !body.is_empty() && !body.ends_with('\n') {
        let n = body.lines().count();
        return Err(malformed(
            n,
            "last record is not newline-terminated (truncated file?)".into(),
        ));
    }
    let mut lines = body.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == RUNS_HEADER => {}
        Some((_, h)) => return Err(malformed(1, format!("unexpected header {h:?}"))),
        None => return Err(malformed(1, "empty file".into())),
    }

    let sub_samples = manifest.protocol.sub_samples();
    let rows_per_run = sub_samples * NUM_STEPS;
    let mut runs: Vec<Run> = Vec::with_capacity(manifest.total_runs);
    let mut pending: Vec<Row> = Vec::with_capacity(rows_per_run);
    let mut pending_start = 2;
    for (i, line) in lines {
        let lineno = i + 1;
        let row = parse_row(line).map_err(|msg| malformed(lineno, msg))?;
        if let Some(first) = pending.first() {
            if (row.run_id, &row.machine_id) != (first.run_id, &first.machine_id) {
                return Err(malformed(
                    lineno,
                    format!(
                        "run {} of {} ended after {} rows, expected {rows_per_run}",
                        first.run_id,
                        first.machine_id,
                        pending.len()
                    ),
                ));
            }
        } else {
            pending_start = lineno;
        }
        let expected_step = pending.len() % NUM_STEPS + 1;
        if row.step != expected_step {
            return Err(malformed(
                lineno,
                format!("expected step {expected_step}, found {}", row.step),
            ));
        }
        pending.push(row);
        if pending.len() == rows_per_run {
            runs.push(assemble_run(&pending).map_err(|msg| malformed(pending_start, msg))?);
            pending.clear();
        }
    }
    if !pending.is_empty() {
        return Err(malformed(
            pending_start,
            format!("incomplete run: {} of {rows_per_run} rows", pending.len()),
        ));
    }
    if runs.len() != manifest.total_runs {
        return Err(Error::CorruptDataset(format!(
            "manifest declares {} runs, file holds {}",
            manifest.total_runs,
            runs.len()
        )));
    }
    let ds = Dataset {
        protocol: manifest.protocol,
        runs,
        profiles: manifest.profiles,
        seed: manifest.seed,
        epoch_s: manifest.epoch_s,
    };
    ds.validate()?;
    Ok(ds)
}

fn assemble_run(rows: &[Row]) -> std::result::Result<Run, String> {
    let first = &rows[0];
    if rows
        .iter()
        .any(|r| r.timestamp != first.timestamp || r.shots != first.shots)
    {
        return Err(format!(
            "inconsistent timestamp or shots within run {}",
            first.run_id
        ));
    }
    let samples = rows
        .chunks(NUM_STEPS)
        .map(|chunk| {
            let seq: Vec<OutcomeDistribution> = chunk
                .iter()
                .map(|r| {
                    OutcomeDistribution::with_tolerance(r.p, LOAD_SUM_TOL)
                        .map_err(|e| e.to_string())
                })
                .collect::<std::result::Result<_, _>>()?;
            Ok(seq.try_into().expect("chunk of nine"))
        })
        .collect::<std::result::Result<Vec<StepSequence>, String>>()?;
    Ok(Run {
        run_id: first.run_id,
        machine_id: first.machine_id.clone(),
        timestamp: first.timestamp,
        samples,
        shots_per_distribution: first.shots,
    })
}

/// Run counts per machine, in profile order.
pub fn runs_per_machine(ds: &Dataset) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for r in &ds.runs {
        *out.entry(r.machine_id.clone()).or_insert(0) += 1;
    }
    out
}
