use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::acquisition::{Dataset, Run};
use crate::error::{Error, Result};
use crate::testbed::MeasurementStep;

/// Which measurement steps feed the classifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum FeatureSpec {
    /// Step k alone.
    Single { k: MeasurementStep },
    /// Steps max(1, k - s) ..= k.
    Window { k: MeasurementStep, s: usize },
    /// Steps 1 ..= k.
    Prefix { k: MeasurementStep },
}

impl FeatureSpec {
    pub fn single(k: usize) -> Result<Self> {
        Ok(FeatureSpec::Single {
            k: MeasurementStep::new(k)?,
        })
    }

    pub fn window(k: usize, s: usize) -> Result<Self> {
        if s == 0 {
            return Err(Error::InvalidArgument(
                "window width must be at least 1".into(),
            ));
        }
        Ok(FeatureSpec::Window {
            k: MeasurementStep::new(k)?,
            s,
        })
    }

    pub fn prefix(k: usize) -> Result<Self> {
        Ok(FeatureSpec::Prefix {
            k: MeasurementStep::new(k)?,
        })
    }

    /// Selected steps in ascending order.
    pub fn steps(&self) -> Vec<MeasurementStep> {
        let (lo, hi) = match *self {
            FeatureSpec::Single { k } => (k.get(), k.get()),
            FeatureSpec::Window { k, s } => (k.get().saturating_sub(s).max(1), k.get()),
            FeatureSpec::Prefix { k } => (1, k.get()),
        };
        (lo..=hi)
            .map(|k| MeasurementStep::new(k).expect("within 1..=9"))
            .collect()
    }

    pub fn dim(&self) -> usize {
        4 * self.steps().len()
    }

    fn extract(&self, seq: &crate::acquisition::StepSequence) -> FeatureVector {
        let mut x = Vec::with_capacity(self.dim());
        for k in self.steps() {
            x.extend_from_slice(&seq[k.index()].probabilities());
        }
        FeatureVector(x)
    }
}

impl fmt::Display for FeatureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureSpec::Single { k } => write!(f, "single({k})"),
            FeatureSpec::Window { k, s } => write!(f, "window({k},{s})"),
            FeatureSpec::Prefix { k } => write!(f, "prefix({k})"),
        }
    }
}

impl FromStr for FeatureSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad feature spec {s:?}"));
        let (mode, rest) = s.split_once('(').ok_or_else(bad)?;
        let args: Vec<usize> = rest
            .strip_suffix(')')
            .ok_or_else(bad)?
            .split(',')
            .map(|a| a.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        match (mode, args.as_slice()) {
            ("single", [k]) => FeatureSpec::single(*k),
            ("prefix", [k]) => FeatureSpec::prefix(*k),
            ("window", [k, w]) => FeatureSpec::window(*k, *w),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(x: Vec<f64>) -> Self {
        Self(x)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Feature vectors with integer class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSet {
    pub x: Vec<FeatureVector>,
    pub y: Vec<i64>,
}

impl LabeledSet {
    pub fn new(x: Vec<FeatureVector>, y: Vec<i64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        if let Some(first) = x.first() {
            if let Some(bad) = x.iter().find(|v| v.dim() != first.dim()) {
                return Err(Error::DimensionMismatch {
                    expected: first.dim(),
                    got: bad.dim(),
                });
            }
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.first().map_or(0, |v| v.dim())
    }

    /// Distinct labels in ascending order.
    pub fn classes(&self) -> Vec<i64> {
        self.y
            .iter()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn subset(&self, indices: &[usize]) -> LabeledSet {
        LabeledSet {
            x: indices.iter().map(|&i| self.x[i].clone()).collect(),
            y: indices.iter().map(|&i| self.y[i]).collect(),
        }
    }

    /// Appends `other`, which must have the same dimension.
    pub fn extend(&mut self, other: LabeledSet) -> Result<()> {
        if !self.is_empty() && !other.is_empty() && self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        self.x.extend(other.x);
        self.y.extend(other.y);
        Ok(())
    }
}

/// Feature vectors of the given runs, one per sub-sample, in run order.
pub fn run_features<'a>(
    runs: impl IntoIterator<Item = &'a Run>,
    spec: &FeatureSpec,
) -> Vec<FeatureVector> {
    runs.into_iter()
        .flat_map(|r| r.samples.iter().map(|seq| spec.extract(seq)))
        .collect()
}

/// Labeled features for the listed machines; the label of a machine is its
/// position in `machines`.
pub fn build_features(ds: &Dataset, spec: &FeatureSpec, machines: &[&str]) -> Result<LabeledSet> {
    if machines.is_empty() {
        return Err(Error::EmptySelection("no machines selected".into()));
    }
    let known = ds.machine_ids();
    if let Some(missing) = machines.iter().find(|m| !known.contains(m)) {
        return Err(Error::UnknownMachine(missing.to_string()));
    }
    let mut out = LabeledSet {
        x: Vec::new(),
        y: Vec::new(),
    };
    for (label, m) in machines.iter().enumerate() {
        let x = run_features(ds.runs_of(m), spec);
        out.y.extend(std::iter::repeat_n(label as i64, x.len()));
        out.x.extend(x);
    }
    if out.is_empty() {
        return Err(Error::EmptySelection(
            "selected machines have no runs".into(),
        ));
    }
    Ok(out)
}

/// Per-feature affine map to zero mean and unit variance, fitted on one set.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(data: &LabeledSet) -> Self {
        let p = data.dim();
        let n = data.len().max(1) as f64;
        let mut mean = vec![0.0; p];
        for x in &data.x {
            for (m, v) in mean.iter_mut().zip(x.as_slice()) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; p];
        for x in &data.x {
            for ((s, v), m) in var.iter_mut().zip(x.as_slice()).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        let scale = var
            .into_iter()
            .map(|v| if v > 0.0 { 1.0 / v.sqrt() } else { 1.0 })
            .collect();
        Self { mean, scale }
    }

    pub fn transform(&self, data: &LabeledSet) -> LabeledSet {
        let x = data
            .x
            .iter()
            .map(|v| {
                FeatureVector(
                    v.as_slice()
                        .iter()
                        .zip(&self.mean)
                        .zip(&self.scale)
                        .map(|((x, m), s)| (x - m) * s)
                        .collect(),
                )
            })
            .collect();
        LabeledSet {
            x,
            y: data.y.clone(),
        }
    }
}
