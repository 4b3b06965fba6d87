use rand::Rng;
use serde::{Deserialize, Serialize};

use super::state::{DensityMatrix, DIM};
use crate::error::{Error, Result};

const SUM_TOL: f64 = 1e-10;

/// Probabilities of the `(q3, q2)` outcomes, indexed `00, 01, 10, 11`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    p: [f64; 4],
}

impl OutcomeDistribution {
    pub fn new(p: [f64; 4]) -> Result<Self> {
        Self::with_tolerance(p, SUM_TOL)
    }

    /// Like [`OutcomeDistribution::new`] with a caller-chosen tolerance on the
    /// sum, for values that went through a lossy text format.
    pub fn with_tolerance(p: [f64; 4], tol: f64) -> Result<Self> {
        if let Some(bad) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::InvalidDistribution(format!(
                "component {bad} outside [0, 1]"
            )));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::InvalidDistribution(format!(
                "components sum to {sum}"
            )));
        }
        Ok(Self { p })
    }

    pub fn probabilities(&self) -> [f64; 4] {
        self.p
    }

    /// Probability of outcome `(q3, q2) = (a, b)`.
    pub fn get(&self, q3: usize, q2: usize) -> f64 {
        self.p[2 * q3 + q2]
    }

    pub fn max_abs_diff(&self, other: &OutcomeDistribution) -> f64 {
        self.p
            .iter()
            .zip(&other.p)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Row-stochastic readout confusion matrix: `m[true][observed]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    m: [[f64; 4]; 4],
}

impl ConfusionMatrix {
    pub fn new(m: [[f64; 4]; 4]) -> Result<Self> {
        for row in &m {
            if let Some(bad) = row.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                return Err(Error::InvalidProbability(*bad));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidDistribution(format!(
                    "confusion row sums to {sum}"
                )));
            }
        }
        Ok(Self { m })
    }

    pub fn identity() -> Self {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Self { m }
    }

    /// Product of independent per-qubit readout errors.
    ///
    /// Each pair is `(p(read 1 | 0), p(read 0 | 1))`.
    pub fn from_qubit_errors(q3: (f64, f64), q2: (f64, f64)) -> Result<Self> {
        for p in [q3.0, q3.1, q2.0, q2.1] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidProbability(p));
            }
        }
        let single = |(e01, e10): (f64, f64)| [[1.0 - e01, e01], [e10, 1.0 - e10]];
        let a = single(q3);
        let b = single(q2);
        let mut m = [[0.0; 4]; 4];
        for t3 in 0..2 {
            for t2 in 0..2 {
                for o3 in 0..2 {
                    for o2 in 0..2 {
                        m[2 * t3 + t2][2 * o3 + o2] = a[t3][o3] * b[t2][o2];
                    }
                }
            }
        }
        Self::new(m)
    }

    pub fn rows(&self) -> &[[f64; 4]; 4] {
        &self.m
    }
}

/// Born probabilities of the `(q3, q2)` pair.
pub fn measure_pair(state: &DensityMatrix) -> OutcomeDistribution {
    let mut p = [0.0; 4];
    for b in 0..DIM {
        p[b >> 2] += state.get(b, b).re;
    }
    // clip round-off so the result stays a valid distribution
    for x in &mut p {
        *x = x.clamp(0.0, 1.0);
    }
    let sum: f64 = p.iter().sum();
    for x in &mut p {
        *x /= sum;
    }
    OutcomeDistribution { p }
}

/// `observed = dist^T * m`.
pub fn apply_readout(dist: &OutcomeDistribution, cm: &ConfusionMatrix) -> OutcomeDistribution {
    let mut out = [0.0; 4];
    for (t, &pt) in dist.p.iter().enumerate() {
        for (o, x) in out.iter_mut().enumerate() {
            *x += pt * cm.m[t][o];
        }
    }
    for x in &mut out {
        *x = x.clamp(0.0, 1.0);
    }
    OutcomeDistribution { p: out }
}

/// Draws `shots` categorical samples and returns the outcome counts.
pub fn sample_outcome_counts<R: Rng + ?Sized>(
    dist: &OutcomeDistribution,
    shots: u32,
    rng: &mut R,
) -> Result<[u32; 4]> {
    if shots == 0 {
        return Err(Error::EmptySample);
    }
    let mut cumulative = [0.0; 4];
    let mut acc = 0.0;
    for (c, p) in cumulative.iter_mut().zip(dist.p) {
        acc += p;
        *c = acc;
    }
    let mut counts = [0u32; 4];
    for _ in 0..shots {
        let u: f64 = rng.random::<f64>() * acc;
        // the last bucket with nonzero mass absorbs u == acc edge cases
        let idx = cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or_else(|| dist.p.iter().rposition(|&p| p > 0.0).unwrap_or(3));
        counts[idx] += 1;
    }
    Ok(counts)
}

/// Empirical frequencies `counts / shots` of `shots` samples.
pub fn sample_counts<R: Rng + ?Sized>(
    dist: &OutcomeDistribution,
    shots: u32,
    rng: &mut R,
) -> Result<OutcomeDistribution> {
    let counts = sample_outcome_counts(dist, shots, rng)?;
    Ok(OutcomeDistribution {
        p: counts.map(|c| c as f64 / shots as f64),
    })
}
