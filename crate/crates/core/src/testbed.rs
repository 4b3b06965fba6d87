//! The transport testbed circuit, its nine measurement-step prefixes and the
//! noiseless reference distributions.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::{measure_pair, run_ideal, Gate, GateKind, OutcomeDistribution};

/// Number of measurement steps in the three-repetition circuit.
pub const NUM_STEPS: usize = 9;
/// Repetitions of the basic block.
pub const REPETITIONS: usize = 3;

/// A measurement step `k` in `1..=9`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct MeasurementStep(u8);

impl MeasurementStep {
    pub fn new(k: usize) -> Result<Self> {
        if (1..=NUM_STEPS).contains(&k) {
            Ok(Self(k as u8))
        } else {
            Err(Error::InvalidStep(k))
        }
    }

    pub fn get(self) -> usize {
        self.0 as usize
    }

    /// All nine steps in order.
    pub fn all() -> impl Iterator<Item = MeasurementStep> {
        (1..=NUM_STEPS).map(|k| MeasurementStep(k as u8))
    }

    /// Zero-based position, handy for indexing per-step arrays.
    pub fn index(self) -> usize {
        self.get() - 1
    }
}

impl TryFrom<usize> for MeasurementStep {
    type Error = Error;

    fn try_from(k: usize) -> Result<Self> {
        Self::new(k)
    }
}

impl From<MeasurementStep> for usize {
    fn from(s: MeasurementStep) -> usize {
        s.get()
    }
}

impl fmt::Display for MeasurementStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Ordered gate list on qubits `0..4`.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Circuit {
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(gates: Vec<Gate>) -> Result<Self> {
        for g in &gates {
            g.validate()?;
        }
        Ok(Self { gates })
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Returns a copy whose gate durations are looked up by kind; kinds
    /// missing from the map get duration zero.
    pub fn with_durations(&self, durations: &BTreeMap<GateKind, f64>) -> Circuit {
        let gates = self
            .gates
            .iter()
            .map(|g| {
                g.clone()
                    .with_duration(durations.get(&g.kind).copied().unwrap_or(0.0))
            })
            .collect();
        Circuit { gates }
    }

    /// One gate per line: `KIND q... #duration_ns`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for g in &self.gates {
            out.push_str(g.kind.name());
            for q in &g.qubits {
                out.push(' ');
                out.push_str(&q.to_string());
            }
            let ns = (g.duration * 1e12).round() / 1e3;
            out.push_str(&format!(" #{ns}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Circuit> {
        let mut gates = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::InvalidGate(format!("line {}: {msg}", lineno + 1));
            let (body, duration) = match line.split_once('#') {
                Some((body, ns)) => {
                    let ns: f64 = ns.trim().parse().map_err(|_| bad("bad duration"))?;
                    (body, ns * 1e-9)
                }
                None => (line, 0.0),
            };
            let mut parts = body.split_whitespace();
            let kind: GateKind = parts
                .next()
                .ok_or_else(|| bad("missing gate kind"))?
                .parse()?;
            let qubits = parts
                .map(|p| p.parse::<usize>().map_err(|_| bad("bad qubit index")))
                .collect::<Result<Vec<_>>>()?;
            gates.push(Gate::new(kind, &qubits, duration)?);
        }
        Ok(Circuit { gates })
    }
}

/// One repetition of the transport block.
///
/// `H(q0) H(q1) CNOT(q0->q2) CNOT(q1->q3) X(q0) X(q1) TOFFOLI(q0,q1->q2)`;
/// from `|0000>` it prepares `(|0110> + |0111> + |1001> + |1100>)/2`.
pub fn repetition_block() -> Circuit {
    Circuit {
        gates: vec![
            Gate::h(0),
            Gate::h(1),
            Gate::cnot(0, 2),
            Gate::cnot(1, 3),
            Gate::x(0),
            Gate::x(1),
            Gate::toffoli(0, 1, 2),
        ],
    }
}

/// Gate count of the block prefix ending at each of its three terminators.
const BLOCK_TERMINATORS: [usize; 3] = [3, 4, 7];

/// Full three-repetition circuit.
pub fn full_circuit() -> Circuit {
    let block = repetition_block();
    let mut gates = Vec::with_capacity(block.len() * REPETITIONS);
    for _ in 0..REPETITIONS {
        gates.extend(block.gates.iter().cloned());
    }
    Circuit { gates }
}

/// Number of leading gates of [`full_circuit`] that make up step `k`.
pub fn step_prefix_len(step: MeasurementStep) -> usize {
    let idx = step.index();
    let block_len = repetition_block().len();
    (idx / 3) * block_len + BLOCK_TERMINATORS[idx % 3]
}

/// Standalone circuit measured at `step`: the full circuit truncated right
/// after the step's terminating CNOT or Toffoli.
pub fn step_circuit(step: MeasurementStep) -> Circuit {
    let mut full = full_circuit();
    full.gates.truncate(step_prefix_len(step));
    full
}

/// Prefix lengths of every step within `decompose_toffoli(full_circuit())`.
pub fn step_prefix_lens(style: ToffoliStyle) -> Result<[usize; NUM_STEPS]> {
    let mut out = [0; NUM_STEPS];
    for step in MeasurementStep::all() {
        out[step.index()] = decompose_toffoli(&step_circuit(step), style)?.len();
    }
    Ok(out)
}

/// How Toffoli gates are realised on a device.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum ToffoliStyle {
    /// Native three-qubit gate.
    #[default]
    #[serde(rename = "none")]
    Native,
    /// Textbook network of 6 CNOTs, 2 H and 7 T/T-dagger gates.
    #[serde(rename = "standard-6-cnot")]
    Standard6Cnot,
}

impl ToffoliStyle {
    pub fn name(self) -> &'static str {
        match self {
            ToffoliStyle::Native => "none",
            ToffoliStyle::Standard6Cnot => "standard-6-cnot",
        }
    }
}

impl FromStr for ToffoliStyle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(ToffoliStyle::Native),
            "standard-6-cnot" => Ok(ToffoliStyle::Standard6Cnot),
            other => Err(Error::UnknownStyle(other.to_string())),
        }
    }
}

impl fmt::Display for ToffoliStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn toffoli_network(a: usize, b: usize, c: usize) -> [Gate; 15] {
    [
        Gate::h(c),
        Gate::cnot(b, c),
        Gate::tdg(c),
        Gate::cnot(a, c),
        Gate::t(c),
        Gate::cnot(b, c),
        Gate::tdg(c),
        Gate::cnot(a, c),
        Gate::t(b),
        Gate::t(c),
        Gate::h(c),
        Gate::cnot(a, b),
        Gate::t(a),
        Gate::tdg(b),
        Gate::cnot(a, b),
    ]
}

/// Rewrites every Toffoli according to `style`.
pub fn decompose_toffoli(circuit: &Circuit, style: ToffoliStyle) -> Result<Circuit> {
    match style {
        ToffoliStyle::Native => Ok(circuit.clone()),
        ToffoliStyle::Standard6Cnot => {
            let mut gates = Vec::with_capacity(circuit.len() * 3);
            for g in &circuit.gates {
                if g.kind == GateKind::Toffoli {
                    g.validate()?;
                    gates.extend(toffoli_network(g.qubits[0], g.qubits[1], g.qubits[2]));
                } else {
                    gates.push(g.clone());
                }
            }
            Ok(Circuit { gates })
        }
    }
}

/// Noiseless `(q3, q2)` distribution at `step`.
pub fn ideal_distribution(step: MeasurementStep) -> OutcomeDistribution {
    static TABLE: OnceLock<[OutcomeDistribution; NUM_STEPS]> = OnceLock::new();
    TABLE.get_or_init(|| {
        MeasurementStep::all()
            .map(|s| {
                let rho = run_ideal(&step_circuit(s).gates).expect("testbed gates are valid");
                measure_pair(&rho)
            })
            .collect::<Vec<_>>()
            .try_into()
            .expect("nine steps")
    })[step.index()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::DensityMatrix;

    fn step(k: usize) -> MeasurementStep {
        MeasurementStep::new(k).unwrap()
    }

    fn assert_dist(d: OutcomeDistribution, expected: [f64; 4], tol: f64) {
        for (a, b) in d.probabilities().iter().zip(expected) {
            assert!(
                (a - b).abs() < tol,
                "{:?} vs {expected:?}",
                d.probabilities()
            );
        }
    }

    #[test]
    fn block_prepares_transport_state() {
        let block = repetition_block();
        assert_eq!(block.len(), 7);
        let rho = run_ideal(&block.gates).unwrap();
        let pops = rho.populations();
        for (b, p) in pops.iter().enumerate() {
            let expected = if [6, 7, 9, 12].contains(&b) {
                0.25
            } else {
                0.0
            };
            assert!((p - expected).abs() < 1e-12, "basis {b}: {p}");
        }
        // amplitude 1/2 on |0110> with zero relative phase to |0111>
        assert!((rho.get(6, 6).re.sqrt() - 0.5).abs() < 1e-12);
        assert!((rho.get(6, 7).re - 0.25).abs() < 1e-12);
        assert_dist(measure_pair(&rho), [0.0, 0.5, 0.25, 0.25], 1e-12);
    }

    #[test]
    fn x_placement_is_unique_among_single_layers() {
        // every subset of X gates on the ancillas q0, q1 before the Toffoli;
        // only the pair {q0, q1} reproduces the target distribution
        let target = [0.0, 0.5, 0.25, 0.25];
        let mut matches = Vec::new();
        for mask in 0..4u8 {
            let mut gates = vec![Gate::h(0), Gate::h(1), Gate::cnot(0, 2), Gate::cnot(1, 3)];
            if mask & 1 != 0 {
                gates.push(Gate::x(0));
            }
            if mask & 2 != 0 {
                gates.push(Gate::x(1));
            }
            gates.push(Gate::toffoli(0, 1, 2));
            let d = measure_pair(&run_ideal(&gates).unwrap());
            if d.max_abs_diff(&OutcomeDistribution::new(target).unwrap()) < 1e-12 {
                matches.push(mask);
            }
        }
        assert_eq!(matches, vec![3]);
    }

    #[test]
    fn step_lengths_and_prefixes() {
        let lens: Vec<usize> = MeasurementStep::all()
            .map(|s| step_circuit(s).len())
            .collect();
        assert_eq!(lens, vec![3, 4, 7, 10, 11, 14, 17, 18, 21]);
        for k in 1..NUM_STEPS {
            let a = step_circuit(step(k));
            let b = step_circuit(step(k + 1));
            assert!(a.len() < b.len());
            assert_eq!(&b.gates[..a.len()], &a.gates[..]);
        }
        // X gates belong to the Toffoli step
        let s3 = step_circuit(step(3));
        assert_eq!(s3.gates[4].kind, GateKind::X);
        assert_eq!(
            step_circuit(step(2)).gates.last().unwrap().kind,
            GateKind::Cnot
        );
    }

    #[test]
    fn invalid_steps_are_rejected() {
        assert!(matches!(
            MeasurementStep::new(0),
            Err(Error::InvalidStep(0))
        ));
        assert!(MeasurementStep::new(10)
            .unwrap_err()
            .to_string()
            .contains("invalid step"));
    }

    #[test]
    fn ideal_first_and_third_steps() {
        assert_dist(ideal_distribution(step(1)), [0.5, 0.5, 0.0, 0.0], 1e-12);
        assert_dist(ideal_distribution(step(3)), [0.0, 0.5, 0.25, 0.25], 1e-12);
        for s in MeasurementStep::all() {
            let sum: f64 = ideal_distribution(s).probabilities().iter().sum();
            assert!((sum - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn decomposition_preserves_ideal_output() {
        let plain = step_circuit(step(3));
        assert_eq!(
            decompose_toffoli(&plain, ToffoliStyle::Native).unwrap(),
            plain
        );
        let dec = decompose_toffoli(&plain, ToffoliStyle::Standard6Cnot).unwrap();
        assert!(dec.len() > 7);
        let d = measure_pair(&run_ideal(&dec.gates).unwrap());
        assert_dist(d, [0.0, 0.5, 0.25, 0.25], 1e-10);
    }

    #[test]
    fn decomposition_equals_toffoli_on_every_basis_state() {
        let dec = decompose_toffoli(
            &Circuit {
                gates: vec![Gate::toffoli(0, 1, 2)],
            },
            ToffoliStyle::Standard6Cnot,
        )
        .unwrap();
        assert_eq!(
            dec.gates
                .iter()
                .filter(|g| g.kind == GateKind::Cnot)
                .count(),
            6
        );
        for b in 0..16 {
            let rho = DensityMatrix::basis_state(b);
            let mut via_net = rho.clone();
            for g in &dec.gates {
                via_net = crate::simulator::apply_gate(&via_net, g).unwrap();
            }
            let direct = crate::simulator::apply_gate(&rho, &Gate::toffoli(0, 1, 2)).unwrap();
            assert!(via_net.max_abs_diff(&direct) < 1e-12, "basis {b}");
        }
    }

    #[test]
    fn unknown_style_is_an_error() {
        assert!(matches!(
            "cz-ladder".parse::<ToffoliStyle>(),
            Err(Error::UnknownStyle(_))
        ));
        assert_eq!(
            "standard-6-cnot".parse::<ToffoliStyle>().unwrap(),
            ToffoliStyle::Standard6Cnot
        );
    }

    #[test]
    fn text_format_round_trips() {
        let mut durations = BTreeMap::new();
        durations.insert(GateKind::H, 35.5e-9);
        durations.insert(GateKind::Cnot, 300e-9);
        let c = repetition_block().with_durations(&durations);
        let text = c.to_text();
        assert!(text.starts_with("H 0 #35.5\nH 1 #35.5\nCNOT 0 2 #300\n"));
        assert!(text.ends_with("TOFFOLI 0 1 2 #0\n"));
        let back = Circuit::from_text(&text).unwrap();
        assert_eq!(back.to_text(), text);
        assert!(Circuit::from_text("CNOT 0 7 #1").is_err());
    }

    #[test]
    fn decomposed_prefix_lengths_are_increasing() {
        let lens = step_prefix_lens(ToffoliStyle::Standard6Cnot).unwrap();
        assert_eq!(lens[2], 21);
        assert_eq!(lens[8], 63);
        assert!(lens.windows(2).all(|w| w[0] < w[1]));
    }
}
