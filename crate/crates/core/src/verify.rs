//! Self-checks run by the `verify` subcommand.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::simulator::{
    apply_channel, apply_gate, damping_channel, depolarizing_channel, initial_state, measure_pair,
    run_ideal, DensityMatrix, Gate, GateKind, DIM,
};
use crate::testbed::{ideal_distribution, repetition_block, step_circuit, MeasurementStep};

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Plain statevector evolution with bit arithmetic, independent of the
/// density-matrix code path.
pub fn statevector(gates: &[Gate]) -> [Complex64; DIM] {
    let mut psi = [Complex64::new(0.0, 0.0); DIM];
    psi[0] = Complex64::new(1.0, 0.0);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for g in gates {
        let q = &g.qubits;
        let bit = |b: usize, k: usize| (b >> q[k]) & 1;
        let mut next = [Complex64::new(0.0, 0.0); DIM];
        for b in 0..DIM {
            let a = psi[b];
            match g.kind {
                GateKind::H => {
                    let flipped = b ^ (1 << q[0]);
                    let sign = if bit(b, 0) == 1 { -1.0 } else { 1.0 };
                    next[b] += a * s * sign;
                    next[flipped] += a * s;
                }
                GateKind::X => next[b ^ (1 << q[0])] += a,
                GateKind::T | GateKind::Tdg => {
                    let phase = if g.kind == GateKind::T { 1.0 } else { -1.0 }
                        * std::f64::consts::FRAC_PI_4;
                    next[b] += if bit(b, 0) == 1 {
                        a * Complex64::from_polar(1.0, phase)
                    } else {
                        a
                    };
                }
                GateKind::Cnot => next[if bit(b, 0) == 1 { b ^ (1 << q[1]) } else { b }] += a,
                GateKind::Toffoli => {
                    next[if bit(b, 0) == 1 && bit(b, 1) == 1 {
                        b ^ (1 << q[2])
                    } else {
                        b
                    }] += a
                }
            }
        }
        psi = next;
    }
    psi
}

fn reconstruction() -> Check {
    let psi = statevector(&repetition_block().gates);
    let rho = run_ideal(&repetition_block().gates);
    let mut passed = true;
    let mut detail = String::new();
    for (b, amp) in psi.iter().enumerate() {
        let expect = if [0b0110, 0b0111, 0b1001, 0b1100].contains(&b) {
            0.25
        } else {
            0.0
        };
        if (amp.norm_sqr() - expect).abs() > 1e-12 {
            passed = false;
            detail = format!("basis {b:04b}: |a|^2 = {}", amp.norm_sqr());
        }
    }
    match rho {
        Ok(rho) => {
            let d = measure_pair(&rho).probabilities();
            let dev = d
                .iter()
                .zip([0.0, 0.5, 0.25, 0.25])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if dev > 1e-12 {
                passed = false;
                detail = format!("measure_pair {d:?}");
            } else if passed {
                detail = format!("measure_pair {d:?}");
            }
        }
        Err(e) => {
            passed = false;
            detail = e.to_string();
        }
    }
    Check {
        name: "testbed reconstruction",
        passed,
        detail,
    }
}

fn ideal_vs_statevector() -> Check {
    let mut worst: f64 = 0.0;
    for step in MeasurementStep::all() {
        let psi = statevector(&step_circuit(step).gates);
        let mut p = [0.0; 4];
        for (b, a) in psi.iter().enumerate() {
            p[2 * ((b >> 3) & 1) + ((b >> 2) & 1)] += a.norm_sqr();
        }
        worst = worst.max(
            ideal_distribution(step)
                .max_abs_diff(&crate::simulator::OutcomeDistribution::new(p).expect("normalized")),
        );
    }
    Check {
        name: "ideal distributions vs statevector",
        passed: worst <= 1e-12,
        detail: format!("max deviation {worst:.2e}"),
    }
}

fn random_gate<R: Rng>(rng: &mut R) -> Gate {
    let mut qs = [0usize, 1, 2, 3];
    for i in (1..4).rev() {
        qs.swap(i, rng.random_range(0..=i));
    }
    match rng.random_range(0..6) {
        0 => Gate::h(qs[0]),
        1 => Gate::x(qs[0]),
        2 => Gate::t(qs[0]),
        3 => Gate::tdg(qs[0]),
        4 => Gate::cnot(qs[0], qs[1]),
        _ => Gate::toffoli(qs[0], qs[1], qs[2]),
    }
}

/// Applies `len` random gates and channels and returns the worst trace and
/// Hermiticity deviations seen along the way.
pub fn random_sequence_deviation(seed: u64, len: usize) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rho: DensityMatrix = initial_state();
    let (mut tr, mut herm) = (0.0f64, 0.0f64);
    for _ in 0..len {
        rho = match rng.random_range(0..3) {
            0 => apply_gate(&rho, &random_gate(&mut rng))?,
            1 => {
                let q = rng.random_range(0..4);
                let k = rng.random_range(1..=2);
                let qs: Vec<usize> = (0..k).map(|i| (q + i) % 4).collect();
                apply_channel(
                    &rho,
                    &depolarizing_channel(rng.random_range(0.0..1.0), &qs)?,
                )?
            }
            _ => {
                let t1 = rng.random_range(10e-6..200e-6);
                let t2 = rng.random_range(0.1..2.0) * t1;
                let d = rng.random_range(0.0..5e-6);
                apply_channel(&rho, &damping_channel(t1, t2, d, rng.random_range(0..4))?)?
            }
        };
        tr = tr.max((rho.trace() - 1.0).norm());
        herm = herm.max(rho.hermiticity_error());
    }
    Ok((tr, herm))
}

fn random_sequences(count: usize, seed: u64) -> Result<Check> {
    let (mut tr, mut herm) = (0.0f64, 0.0f64);
    for i in 0..count {
        let (t, h) = random_sequence_deviation(seed.wrapping_add(i as u64), 20)?;
        tr = tr.max(t);
        herm = herm.max(h);
    }
    Ok(Check {
        name: "random gate/channel sequences",
        passed: tr <= 1e-10 && herm <= 1e-12,
        detail: format!("{count} sequences, trace deviation {tr:.2e}, hermiticity {herm:.2e}"),
    })
}

/// Runs every self-check.
pub fn run_all(sequences: usize, seed: u64) -> Result<Vec<Check>> {
    Ok(vec![
        reconstruction(),
        ideal_vs_statevector(),
        random_sequences(sequences, seed)?,
    ])
}
