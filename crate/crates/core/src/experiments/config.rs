use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::acquisition::{Dataset, Protocol};
use crate::error::{Error, Result};
use crate::svm::{KernelKind, SolverSettings, DEFAULT_C_GRID, DEFAULT_MAX_ITER, DEFAULT_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Pairwise,
    Multiclass,
    #[serde(rename = "temporal24h")]
    Temporal24h,
    WindowTemporal,
    GapSweep,
    Robustness,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Pairwise,
        ExperimentKind::Multiclass,
        ExperimentKind::Temporal24h,
        ExperimentKind::WindowTemporal,
        ExperimentKind::GapSweep,
        ExperimentKind::Robustness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Pairwise => "pairwise",
            ExperimentKind::Multiclass => "multiclass",
            ExperimentKind::Temporal24h => "temporal24h",
            ExperimentKind::WindowTemporal => "window-temporal",
            ExperimentKind::GapSweep => "gap-sweep",
            ExperimentKind::Robustness => "robustness",
        }
    }

    /// Protocols a dataset may use for this experiment.
    pub fn accepted_protocols(self) -> &'static [Protocol] {
        match self {
            // device identification works on either regime
            ExperimentKind::Pairwise | ExperimentKind::Multiclass => {
                &[Protocol::Fast, Protocol::Slow]
            }
            ExperimentKind::Temporal24h => &[Protocol::Fast],
            ExperimentKind::WindowTemporal
            | ExperimentKind::GapSweep
            | ExperimentKind::Robustness => &[Protocol::Slow],
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown experiment {s:?}")))
    }
}

/// Model-selection grid and solver settings used for every cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmGrid {
    pub c_grid: Vec<f64>,
    pub kernels: Vec<KernelKind>,
    /// Fixed kernel scale; `None` derives it from each training split.
    pub gamma: Option<f64>,
    pub coef0: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Standardize features with training-split statistics.
    pub standardize: bool,
}

impl Default for SvmGrid {
    fn default() -> Self {
        Self {
            c_grid: DEFAULT_C_GRID.to_vec(),
            kernels: KernelKind::ALL.to_vec(),
            gamma: None,
            coef0: 1.0,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            standardize: false,
        }
    }
}

impl SvmGrid {
    pub fn settings(&self) -> SolverSettings {
        SolverSettings {
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.c_grid.is_empty() || self.kernels.is_empty() {
            return Err(Error::Config(
                "svm grid needs at least one C and one kernel".into(),
            ));
        }
        if let Some(c) = self.c_grid.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
            return Err(Error::Config(format!("C values must be positive, got {c}")));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::Config(format!("gamma must be positive, got {g}")));
            }
        }
        if !(self.coef0 >= 0.0 && self.coef0.is_finite()) {
            return Err(Error::Config(format!(
                "coef0 must be non-negative, got {}",
                self.coef0
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

/// Everything needed to run one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub dataset: PathBuf,
    /// Machines to use, in label order; empty selects every machine in the
    /// dataset.
    pub machines: Vec<String>,
    pub seed: u64,
    pub svm: SvmGrid,
    pub out: PathBuf,
    /// Runs per time window.
    pub window_runs: usize,
    /// Number of consecutive windows.
    pub windows: usize,
    /// Stride of the gap sweep in runs.
    pub gap_step_runs: usize,
    /// Largest gap of the sweep in simulated hours; `None` runs to the end
    /// of the dataset.
    pub max_gap_hours: Option<f64>,
    /// Smallest timestamp gap accepted as the boundary between two days.
    pub min_epoch_gap_hours: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::Pairwise,
            dataset: PathBuf::new(),
            machines: Vec::new(),
            seed: 0,
            svm: SvmGrid::default(),
            out: PathBuf::from("report"),
            window_runs: 200,
            windows: 10,
            gap_step_runs: 15,
            max_gap_hours: None,
            min_epoch_gap_hours: 12.0,
        }
    }
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            ..Self::default()
        }
    }

    /// Reads a TOML config file.
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.svm.validate()?;
        if self.window_runs < 5 {
            return Err(Error::Config("window_runs must be at least 5".into()));
        }
        if self.windows < 2 {
            return Err(Error::Config("windows must be at least 2".into()));
        }
        if self.gap_step_runs == 0 {
            return Err(Error::Config("gap_step_runs must be at least 1".into()));
        }
        if !(self.min_epoch_gap_hours > 0.0) {
            return Err(Error::Config("min_epoch_gap_hours must be positive".into()));
        }
        Ok(())
    }

    /// Selected machines, checked against the dataset.
    pub fn machine_selection<'a>(&'a self, ds: &'a Dataset) -> Result<Vec<&'a str>> {
        let known = ds.machine_ids();
        if self.machines.is_empty() {
            return Ok(known);
        }
        let mut out: Vec<&str> = Vec::with_capacity(self.machines.len());
        for m in &self.machines {
            if !known.contains(&m.as_str()) {
                return Err(Error::UnknownMachine(m.clone()));
            }
            if out.contains(&m.as_str()) {
                return Err(Error::Config(format!("machine {m} selected twice")));
            }
            out.push(m);
        }
        Ok(out)
    }

    /// Checks the dataset's protocol against the experiment.
    pub fn check_dataset(&self, ds: &Dataset) -> Result<()> {
        if !self.experiment.accepted_protocols().contains(&ds.protocol) {
            return Err(Error::Config(format!(
                "{} needs a {} dataset, got {}",
                self.experiment,
                self.experiment
                    .accepted_protocols()
                    .iter()
                    .map(|p| p.name())
                    .collect::<Vec<_>>()
                    .join(" or "),
                ds.protocol
            )));
        }
        self.machine_selection(ds).map(|_| ())
    }

    /// SHA-256 of the settings that shape the results. Paths are left out so
    /// that moving a dataset or report directory keeps the hash.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.dataset = PathBuf::new();
        canonical.out = PathBuf::new();
        let json = serde_json::to_string(&canonical).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_with_defaults() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
experiment = "window-temporal"
dataset = "data/slow"
seed = 7

[svm]
c_grid = [1.0]
kernels = ["linear", "rbf"]
"#,
        )
        .unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::WindowTemporal);
        assert_eq!(cfg.window_runs, 200);
        assert_eq!(cfg.svm.kernels, vec![KernelKind::Linear, KernelKind::Rbf]);
        assert_eq!(cfg.svm.coef0, 1.0);
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_toml_str("experimnt = \"pairwise\"").is_err());
        assert!(ExperimentConfig::from_toml_str("experiment = \"pairs\"").is_err());
    }

    #[test]
    fn hash_ignores_paths() {
        let mut a = ExperimentConfig::new(ExperimentKind::Multiclass);
        let mut b = a.clone();
        a.out = "x".into();
        b.dataset = "y".into();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn experiment_names_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
            let toml_text = format!("experiment = \"{}\"", k.name());
            assert_eq!(
                ExperimentConfig::from_toml_str(&toml_text)
                    .unwrap()
                    .experiment,
                k
            );
        }
    }
}
