use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::derive_rng;
use crate::simulator::{ConfusionMatrix, GateKind, NoiseModel, NUM_QUBITS};
use crate::testbed::ToffoliStyle;

/// Temporal drift of a device's noise strength.
///
/// The drift factor is
/// `f(t) = 1 + relative_amplitude * sin(2 pi t / period) + c(t) + jitter`,
/// where `c(t)` is a calibration offset redrawn from
/// `N(0, calibration_jump_std)` at every multiple of the calibration period
/// (keyed by `calibration_seed`, so two profiles with equal seeds calibrate
/// identically) and `jitter ~ N(0, jitter_std)` is fresh on every call.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftSpec {
    pub relative_amplitude: f64,
    /// Seconds.
    pub period: f64,
    pub jitter_std: f64,
    pub calibration_jump_std: f64,
    #[serde(default)]
    pub calibration_seed: u64,
}

impl DriftSpec {
    /// No drift at all.
    pub fn none() -> Self {
        Self {
            relative_amplitude: 0.0,
            period: 86_400.0,
            jitter_std: 0.0,
            calibration_jump_std: 0.0,
            calibration_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.5).contains(&self.relative_amplitude) {
            return Err(Error::InvalidProfile(format!(
                "drift amplitude {} outside [0, 0.5]",
                self.relative_amplitude
            )));
        }
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(Error::InvalidProfile(format!(
                "drift period {}",
                self.period
            )));
        }
        if !(self.jitter_std >= 0.0 && self.calibration_jump_std >= 0.0) {
            return Err(Error::InvalidProfile(
                "negative drift standard deviation".into(),
            ));
        }
        Ok(())
    }

    fn is_static(&self) -> bool {
        self.relative_amplitude == 0.0 && self.jitter_std == 0.0 && self.calibration_jump_std == 0.0
    }
}

impl Default for DriftSpec {
    /// Slow sinusoid over twenty days, rising through the first five, with
    /// small calibration steps every six hours and weak per-run jitter.
    fn default() -> Self {
        Self {
            relative_amplitude: 0.5,
            period: 20.0 * 86_400.0,
            jitter_std: 0.01,
            calibration_jump_std: 0.03,
            calibration_seed: 0,
        }
    }
}

/// Noise fingerprint of a synthetic device.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MachineProfile {
    pub machine_id: String,
    /// Per-qubit T1 in seconds, indexed by qubit.
    pub base_t1: [f64; NUM_QUBITS],
    /// Per-qubit T2 in seconds.
    pub base_t2: [f64; NUM_QUBITS],
    /// Seconds per gate kind.
    pub gate_durations: BTreeMap<GateKind, f64>,
    pub err_1q: f64,
    pub err_2q: f64,
    pub err_3q: f64,
    pub readout: ConfusionMatrix,
    pub drift: DriftSpec,
    /// Seconds between calibration events.
    pub calibration_period: f64,
    pub toffoli_style: ToffoliStyle,
}

impl MachineProfile {
    /// A device with no noise of any kind.
    pub fn noiseless(machine_id: &str) -> Self {
        Self {
            machine_id: machine_id.to_string(),
            base_t1: [f64::INFINITY; NUM_QUBITS],
            base_t2: [f64::INFINITY; NUM_QUBITS],
            gate_durations: default_durations(35e-9, 400e-9, 1.2e-6),
            err_1q: 0.0,
            err_2q: 0.0,
            err_3q: 0.0,
            readout: ConfusionMatrix::identity(),
            drift: DriftSpec::none(),
            calibration_period: 86_400.0,
            toffoli_style: ToffoliStyle::Native,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.machine_id.is_empty() || self.machine_id.contains([',', '\n', '\r', '"']) {
            return Err(Error::InvalidProfile(format!(
                "machine id {:?} must be non-empty and free of commas, quotes and newlines",
                self.machine_id
            )));
        }
        for p in [self.err_1q, self.err_2q, self.err_3q] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidProbability(p));
            }
        }
        for q in 0..NUM_QUBITS {
            let (t1, t2) = (self.base_t1[q], self.base_t2[q]);
            if !(t1 > 0.0 && t2 > 0.0) {
                return Err(Error::InvalidProfile(format!(
                    "{}: qubit {q} relaxation times must be positive",
                    self.machine_id
                )));
            }
            if t2 > 2.0 * t1 {
                return Err(Error::UnphysicalT2 { t1, t2 });
            }
        }
        if let Some((kind, d)) = self
            .gate_durations
            .iter()
            .find(|(_, d)| !(**d >= 0.0 && d.is_finite()))
        {
            return Err(Error::InvalidProfile(format!("duration {d} for {kind}")));
        }
        if !(self.calibration_period > 0.0) {
            return Err(Error::InvalidProfile(format!(
                "calibration period {}",
                self.calibration_period
            )));
        }
        // round-trip through the checked constructor
        ConfusionMatrix::new(*self.readout.rows())?;
        self.drift.validate()
    }

    /// Gate-level noise parameters for the simulator.
    pub fn noise_model(&self) -> NoiseModel {
        NoiseModel {
            t1: self.base_t1,
            t2: self.base_t2,
            err_1q: self.err_1q,
            err_2q: self.err_2q,
            err_3q: self.err_3q,
        }
    }

    /// Deterministic part of the drift factor at time `t` (no jitter).
    pub fn drift_factor(&self, t: f64) -> f64 {
        let d = &self.drift;
        let sine = d.relative_amplitude * (2.0 * PI * t / d.period).sin();
        1.0 + sine + self.calibration_offset(t)
    }

    /// Calibration offset in force at time `t`.
    pub fn calibration_offset(&self, t: f64) -> f64 {
        let sd = self.drift.calibration_jump_std;
        if sd == 0.0 {
            return 0.0;
        }
        let epoch = (t / self.calibration_period).floor().max(0.0) as u64;
        let mut rng = derive_rng(
            self.drift.calibration_seed,
            &["calibration".into(), epoch.into()],
        );
        Normal::new(0.0, sd).expect("sd checked").sample(&mut rng)
    }

    /// Returns a copy with every error rate and relaxation rate scaled by
    /// `factor` (clamped to physical ranges).
    pub fn scaled(&self, factor: f64) -> MachineProfile {
        let f = factor.max(0.0);
        let mut out = self.clone();
        out.err_1q = (self.err_1q * f).clamp(0.0, 1.0);
        out.err_2q = (self.err_2q * f).clamp(0.0, 1.0);
        out.err_3q = (self.err_3q * f).clamp(0.0, 1.0);
        for q in 0..NUM_QUBITS {
            // 1/T scales by f, so T scales by 1/f
            let t1 = if f == 0.0 {
                f64::INFINITY
            } else {
                self.base_t1[q] / f
            };
            let t2 = if f == 0.0 {
                f64::INFINITY
            } else {
                self.base_t2[q] / f
            };
            out.base_t1[q] = t1;
            out.base_t2[q] = t2.min(2.0 * t1);
        }
        out.readout = scale_readout(&self.readout, f);
        out
    }
}

/// Scales the off-diagonal (misread) mass of each row by `f`, keeping rows
/// stochastic.
fn scale_readout(cm: &ConfusionMatrix, f: f64) -> ConfusionMatrix {
    let mut m = *cm.rows();
    for (t, row) in m.iter_mut().enumerate() {
        let off: f64 = row
            .iter()
            .enumerate()
            .filter(|(o, _)| *o != t)
            .map(|(_, x)| x)
            .sum();
        let scale = if off * f > 1.0 { 1.0 / off } else { f };
        let mut new_off = 0.0;
        for (o, x) in row.iter_mut().enumerate() {
            if o != t {
                *x = (*x * scale).clamp(0.0, 1.0);
                new_off += *x;
            }
        }
        row[t] = (1.0 - new_off).max(0.0);
    }
    ConfusionMatrix::new(m).unwrap_or(*cm)
}

/// Instantaneous profile at time `t` (seconds since the drift origin).
pub fn params_at<R: Rng + ?Sized>(profile: &MachineProfile, t: f64, rng: &mut R) -> MachineProfile {
    if profile.drift.is_static() {
        return profile.clone();
    }
    let jitter = if profile.drift.jitter_std > 0.0 {
        Normal::new(0.0, profile.drift.jitter_std)
            .expect("sd checked")
            .sample(rng)
    } else {
        0.0
    };
    profile.scaled(profile.drift_factor(t) + jitter)
}

pub(crate) fn default_durations(one_q: f64, cnot: f64, toffoli: f64) -> BTreeMap<GateKind, f64> {
    let mut m = BTreeMap::new();
    for kind in [GateKind::H, GateKind::X, GateKind::T, GateKind::Tdg] {
        m.insert(kind, one_q);
    }
    m.insert(GateKind::Cnot, cnot);
    m.insert(GateKind::Toffoli, toffoli);
    m
}

struct Spec {
    id: &'static str,
    t1_us: [f64; 4],
    t2_us: [f64; 4],
    cnot_ns: f64,
    err: (f64, f64, f64),
    ro_q3: (f64, f64),
    ro_q2: (f64, f64),
    style: ToffoliStyle,
}

const LIBRARY: [Spec; 8] = [
    Spec {
        id: "alder",
        t1_us: [110.0, 95.0, 120.0, 105.0],
        t2_us: [90.0, 80.0, 140.0, 100.0],
        cnot_ns: 320.0,
        err: (3e-4, 0.008, 0.03),
        ro_q3: (0.075, 0.005),
        ro_q2: (0.120, 0.005),
        style: ToffoliStyle::Native,
    },
    Spec {
        id: "birch",
        t1_us: [85.0, 90.0, 75.0, 95.0],
        t2_us: [60.0, 110.0, 70.0, 80.0],
        cnot_ns: 410.0,
        err: (5e-4, 0.015, 0.05),
        ro_q3: (0.120, 0.005),
        ro_q2: (0.008, 0.025),
        style: ToffoliStyle::Standard6Cnot,
    },
    Spec {
        id: "cedar",
        t1_us: [70.0, 65.0, 60.0, 80.0],
        t2_us: [50.0, 70.0, 45.0, 90.0],
        cnot_ns: 450.0,
        err: (8e-4, 0.025, 0.08),
        ro_q3: (0.007, 0.007),
        ro_q2: (0.120, 0.005),
        style: ToffoliStyle::Native,
    },
    Spec {
        id: "dogwood",
        t1_us: [60.0, 70.0, 90.0, 55.0],
        t2_us: [70.0, 40.0, 100.0, 60.0],
        cnot_ns: 360.0,
        err: (1e-3, 0.012, 0.04),
        ro_q3: (0.065, 0.115),
        ro_q2: (0.055, 0.025),
        style: ToffoliStyle::Standard6Cnot,
    },
    Spec {
        id: "elm",
        t1_us: [100.0, 120.0, 85.0, 110.0],
        t2_us: [120.0, 150.0, 60.0, 130.0],
        cnot_ns: 300.0,
        err: (4e-4, 0.030, 0.10),
        ro_q3: (0.030, 0.005),
        ro_q2: (0.005, 0.120),
        style: ToffoliStyle::Native,
    },
    Spec {
        id: "fir",
        t1_us: [50.0, 55.0, 65.0, 60.0],
        t2_us: [45.0, 60.0, 50.0, 40.0],
        cnot_ns: 480.0,
        err: (1.5e-3, 0.040, 0.06),
        ro_q3: (0.120, 0.120),
        ro_q2: (0.006, 0.120),
        style: ToffoliStyle::Standard6Cnot,
    },
    Spec {
        id: "gum",
        t1_us: [80.0, 75.0, 95.0, 70.0],
        t2_us: [100.0, 90.0, 70.0, 50.0],
        cnot_ns: 380.0,
        err: (6e-4, 0.020, 0.12),
        ro_q3: (0.005, 0.120),
        ro_q2: (0.010, 0.040),
        style: ToffoliStyle::Native,
    },
    Spec {
        id: "hazel",
        t1_us: [95.0, 100.0, 80.0, 90.0],
        t2_us: [110.0, 70.0, 90.0, 120.0],
        cnot_ns: 340.0,
        err: (7e-4, 0.018, 0.07),
        ro_q3: (0.040, 0.060),
        ro_q2: (0.060, 0.060),
        style: ToffoliStyle::Standard6Cnot,
    },
];

/// Names of the built-in profiles, in library order.
pub fn builtin_ids() -> Vec<&'static str> {
    LIBRARY.iter().map(|s| s.id).collect()
}

/// The built-in synthetic device library. The first seven mirror a seven
/// machine fingerprinting campaign; `hazel` is a spare for two-machine
/// studies.
pub fn builtin_profiles() -> Vec<MachineProfile> {
    LIBRARY
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut drift = DriftSpec::default();
            drift.calibration_seed = 1000 + i as u64;
            MachineProfile {
                machine_id: s.id.to_string(),
                base_t1: s.t1_us.map(|x| x * 1e-6),
                base_t2: s.t2_us.map(|x| x * 1e-6),
                gate_durations: default_durations(35e-9, s.cnot_ns * 1e-9, 2.5 * s.cnot_ns * 1e-9),
                err_1q: s.err.0,
                err_2q: s.err.1,
                err_3q: s.err.2,
                readout: ConfusionMatrix::from_qubit_errors(s.ro_q3, s.ro_q2)
                    .expect("library readout errors are probabilities"),
                drift,
                calibration_period: 6.0 * 3600.0,
                toffoli_style: s.style,
            }
        })
        .collect()
}

/// Looks up a built-in profile by id.
pub fn builtin_profile(id: &str) -> Result<MachineProfile> {
    builtin_profiles()
        .into_iter()
        .find(|p| p.machine_id == id)
        .ok_or_else(|| Error::UnknownMachine(id.to_string()))
}
