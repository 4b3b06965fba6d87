use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use noiseprint::acquisition::{
    builtin_ids, builtin_profile, builtin_profiles, generate_dataset_with, save_dataset,
    GenerationConfig, MachineProfile, Protocol,
};
use noiseprint::experiments::{
    emit_report, run_experiment, ExperimentConfig, ExperimentKind, ReportFormat,
};
use noiseprint::{verify, Error, Result};

#[derive(Parser)]
#[command(
    name = "noiseprint",
    version,
    about = "Noise-fingerprint laboratory for synthetic quantum devices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a dataset of runs.
    Generate {
        /// TOML file with any of the options below; flags take precedence.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        protocol: Option<Protocol>,
        /// Comma-separated built-in ids, or a TOML/JSON file of profiles.
        #[arg(long)]
        machines: Option<String>,
        /// Runs per machine and session.
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated session start offsets in hours.
        #[arg(long)]
        sessions_hours: Option<String>,
        #[arg(long)]
        shots: Option<u32>,
    },
    /// Run an experiment on a stored dataset.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        experiment: Option<ExperimentKind>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated machine ids, in label order.
        #[arg(long)]
        machines: Option<String>,
    },
    /// List built-in machine profiles, or print one as TOML.
    Profiles {
        /// Profile to describe.
        id: Option<String>,
    },
    /// Check the testbed reconstruction and simulator invariants.
    Verify {
        /// Random gate/channel sequences to test.
        #[arg(long, default_value_t = 200)]
        sequences: usize,
    },
}

/// Config-file form of the `generate` flags.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GenerateFile {
    protocol: Option<Protocol>,
    machines: Option<String>,
    runs: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    sessions_hours: Option<Vec<f64>>,
    shots: Option<u32>,
    generation: Option<GenerationConfig>,
}

#[derive(Deserialize)]
struct ProfileFile {
    profile: Vec<MachineProfile>,
}

fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',')
        .map(|p| p.trim().to_string())
        .filter(|p| !p.is_empty())
        .collect()
}

fn resolve_machines(spec: &str) -> Result<Vec<MachineProfile>> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let profiles = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str::<ProfileFile>(&text)?.profile
        } else {
            toml::from_str::<ProfileFile>(&text)
                .map_err(|e| Error::Config(format!("{spec}: {e}")))?
                .profile
        };
        return Ok(profiles);
    }
    split_list(spec)
        .iter()
        .map(|id| builtin_profile(id))
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn generate(
    config: Option<PathBuf>,
    protocol: Option<Protocol>,
    machines: Option<String>,
    runs: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    sessions_hours: Option<String>,
    shots: Option<u32>,
) -> Result<()> {
    let file: GenerateFile = match &config {
        Some(p) => read_toml(p)?,
        None => GenerateFile::default(),
    };
    let protocol = protocol.or(file.protocol).unwrap_or(Protocol::Slow);
    let machines = machines
        .or(file.machines)
        .ok_or_else(|| Error::Config("--machines is required".into()))?;
    let profiles = resolve_machines(&machines)?;
    let runs = runs
        .or(file.runs)
        .ok_or_else(|| Error::Config("--runs is required".into()))?;
    let seed = seed.or(file.seed).unwrap_or(0);
    let out = out
        .or(file.out)
        .ok_or_else(|| Error::Config("--out is required".into()))?;
    let mut gen = file.generation.unwrap_or_default();
    if let Some(s) = shots.or(file.shots) {
        gen.shots = s;
    }
    let hours = match sessions_hours {
        Some(s) => Some(
            split_list(&s)
                .iter()
                .map(|h| {
                    h.parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad session offset {h:?}")))
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        None => file.sessions_hours,
    };
    if let Some(h) = hours {
        gen.sessions_s = h.iter().map(|h| h * 3600.0).collect();
    }
    let ds = generate_dataset_with(&profiles, protocol, runs, seed, &gen)?;
    save_dataset(&ds, &out)?;
    println!(
        "wrote {} runs ({} protocol) to {}",
        ds.runs.len(),
        protocol,
        out.display()
    );
    Ok(())
}

fn run(
    config: Option<PathBuf>,
    experiment: Option<ExperimentKind>,
    dataset: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    machines: Option<String>,
) -> Result<()> {
    let mut cfg = match &config {
        Some(p) => ExperimentConfig::from_toml_file(p)?,
        None => ExperimentConfig::default(),
    };
    match (experiment, &config) {
        (Some(e), _) => cfg.experiment = e,
        (None, None) => {
            return Err(Error::Config(
                "--experiment is required without a config file".into(),
            ))
        }
        _ => {}
    }
    if let Some(d) = dataset {
        cfg.dataset = d;
    }
    if cfg.dataset.as_os_str().is_empty() {
        return Err(Error::Config("--dataset is required".into()));
    }
    if let Some(o) = out {
        cfg.out = o;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(m) = machines {
        cfg.machines = split_list(&m);
    }
    let report = run_experiment(&cfg)?;
    let files = emit_report(
        &report,
        &[ReportFormat::Csv, ReportFormat::Markdown],
        &cfg.out,
    )?;
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}

fn profiles(id: Option<String>) -> Result<()> {
    match id {
        None => {
            for p in builtin_profiles() {
                println!(
                    "{:<10} toffoli={:<16} err_2q={:.3} T1(q0)={:.0}us",
                    p.machine_id,
                    p.toffoli_style.to_string(),
                    p.err_2q,
                    p.base_t1[0] * 1e6
                );
            }
        }
        Some(id) => {
            let p = builtin_profile(&id).map_err(|_| {
                Error::UnknownMachine(format!("{id} (known: {})", builtin_ids().join(", ")))
            })?;
            #[derive(Serialize)]
            struct One<'a> {
                profile: [&'a MachineProfile; 1],
            }
            let text = toml::to_string(&One { profile: [&p] })
                .map_err(|e| Error::Config(e.to_string()))?;
            print!("{text}");
        }
    }
    Ok(())
}

fn verify_cmd(sequences: usize) -> Result<bool> {
    let checks = verify::run_all(sequences, 0)?;
    let mut ok = true;
    for c in &checks {
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
        ok &= c.passed;
    }
    Ok(ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate {
            config,
            protocol,
            machines,
            runs,
            seed,
            out,
            sessions_hours,
            shots,
        } => generate(
            config,
            protocol,
            machines,
            runs,
            seed,
            out,
            sessions_hours,
            shots,
        ),
        Command::Run {
            config,
            experiment,
            dataset,
            out,
            seed,
            machines,
        } => run(config, experiment, dataset, out, seed, machines),
        Command::Profiles { id } => profiles(id),
        Command::Verify { sequences } => match verify_cmd(sequences) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(2),
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
