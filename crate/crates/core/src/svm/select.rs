use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::features::LabeledSet;
use super::kernel::{default_gamma, default_poly_gamma, DotCache, KernelKind, KernelSpec};
use super::ovr::{train_ovr_with_gram, Classifier};
use super::smo::{train_binary_with_gram, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::rng::derive_rng;

pub const DEFAULT_C_GRID: [f64; 4] = [0.1, 1.0, 10.0, 100.0];

/// Fraction of predictions equal to the reference labels.
pub fn accuracy(predicted: &[i64], actual: &[i64]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::DimensionMismatch {
            expected: actual.len(),
            got: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::EmptySelection("accuracy of zero predictions".into()));
    }
    let hits = predicted.iter().zip(actual).filter(|(p, a)| p == a).count();
    Ok(hits as f64 / actual.len() as f64)
}

/// Indices of a train/validation/test partition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitIndices {
    /// True when the three parts are disjoint and cover `0..n`.
    pub fn is_partition_of(&self, n: usize) -> bool {
        let mut seen = vec![false; n];
        for &i in self.train.iter().chain(&self.val).chain(&self.test) {
            if i >= n || seen[i] {
                return false;
            }
            seen[i] = true;
        }
        seen.into_iter().all(|s| s)
    }
}

/// Seeded permutation of `0..n` cut into parts of rounded sizes.
pub fn split_indices(n: usize, fractions: (f64, f64, f64), seed: u64) -> Result<SplitIndices> {
    let (a, b, c) = fractions;
    if [a, b, c].iter().any(|f| !(*f >= 0.0)) || ((a + b + c) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "split fractions {fractions:?} must be non-negative and sum to 1"
        )));
    }
    if n < 5 {
        return Err(Error::InvalidArgument(format!(
            "cannot split {n} points (need at least 5)"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut derive_rng(seed, &["split".into()]));
    let n_train = ((a * n as f64).round() as usize).min(n);
    let n_val = ((b * n as f64).round() as usize).min(n - n_train);
    let test = idx.split_off(n_train + n_val);
    let val = idx.split_off(n_train);
    Ok(SplitIndices {
        train: idx,
        val,
        test,
    })
}

pub fn split(
    data: &LabeledSet,
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<(LabeledSet, LabeledSet, LabeledSet)> {
    let s = split_indices(data.len(), fractions, seed)?;
    Ok((
        data.subset(&s.train),
        data.subset(&s.val),
        data.subset(&s.test),
    ))
}

/// Solver settings shared by every grid point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// Builds kernel specs for the given kinds. `gamma = None` uses the default
/// scale of `train`: [`default_gamma`] for rbf, [`default_poly_gamma`] for the
/// polynomial kernels.
pub fn kernel_specs(
    kinds: &[KernelKind],
    gamma: Option<f64>,
    coef0: f64,
    train: &LabeledSet,
) -> Result<Vec<KernelSpec>> {
    let rbf = gamma.unwrap_or_else(|| default_gamma(&train.x));
    let poly = gamma.unwrap_or_else(|| default_poly_gamma(&train.x));
    kinds
        .iter()
        .map(|&k| {
            let g = match k {
                KernelKind::Poly2 | KernelKind::Poly3 | KernelKind::Poly4 => poly,
                KernelKind::Linear | KernelKind::Rbf => rbf,
            };
            KernelSpec::new(k, g, coef0)
        })
        .collect()
}

/// One grid point of a model-selection run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionRow {
    pub kernel: KernelSpec,
    pub c: f64,
    pub val_accuracy: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub rows: Vec<SelectionRow>,
    /// Index into `rows` of the chosen model.
    pub best: usize,
}

impl SelectionReport {
    pub fn best_row(&self) -> &SelectionRow {
        &self.rows[self.best]
    }
}

fn train_one(
    train: &LabeledSet,
    gram: &super::kernel::Gram,
    c: f64,
    kernel: KernelSpec,
    s: SolverSettings,
) -> Result<Classifier> {
    if train.classes().len() == 2 {
        Ok(Classifier::Binary(train_binary_with_gram(
            train, gram, c, kernel, s.tol, s.max_iter,
        )?))
    } else {
        Ok(Classifier::Ovr(train_ovr_with_gram(
            train, gram, c, kernel, s.tol, s.max_iter,
        )?))
    }
}

/// Trains every (kernel, C) pair on `train` and keeps the best on `val`.
///
/// Ties prefer the simpler kernel, then the smaller C. Two-class data gets a
/// binary model, more classes a one-vs-rest model.
pub fn select_model(
    train: &LabeledSet,
    val: &LabeledSet,
    c_grid: &[f64],
    kernels: &[KernelSpec],
    settings: SolverSettings,
) -> Result<(Classifier, SelectionReport)> {
    if c_grid.is_empty() || kernels.is_empty() {
        return Err(Error::EmptySelection(
            "model-selection grid is empty".into(),
        ));
    }
    if val.is_empty() {
        return Err(Error::EmptySelection("validation set is empty".into()));
    }
    let mut order: Vec<(KernelSpec, f64)> = kernels
        .iter()
        .flat_map(|k| c_grid.iter().map(move |&c| (*k, c)))
        .collect();
    order.sort_by(|a, b| a.0.kind.cmp(&b.0.kind).then(a.1.total_cmp(&b.1)));

    let dots = DotCache::new(&train.x)?;
    let mut rows = Vec::with_capacity(order.len());
    let mut best: Option<(usize, Classifier)> = None;
    let mut current_gram: Option<(KernelSpec, super::kernel::Gram)> = None;
    for (kernel, c) in order {
        kernel.validate()?;
        if current_gram.as_ref().is_none_or(|(k, _)| *k != kernel) {
            current_gram = Some((kernel, dots.gram(&kernel)));
        }
        let gram = &current_gram.as_ref().expect("set above").1;
        let model = train_one(train, gram, c, kernel, settings)?;
        let acc = accuracy(&model.predict_all(&val.x)?, &val.y)?;
        rows.push(SelectionRow {
            kernel,
            c,
            val_accuracy: acc,
            converged: model.converged(),
        });
        let better = best
            .as_ref()
            .is_none_or(|(b, _)| acc > rows[*b].val_accuracy);
        if better {
            best = Some((rows.len() - 1, model));
        }
    }
    let (best, model) = best.expect("non-empty grid");
    Ok((model, SelectionReport { rows, best }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svm::features::FeatureVector;

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[1, -1, 1], &[1, -1, 1]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 1, -1, -1], &[1, -1, 1, -1]).unwrap(), 0.5);
        assert_eq!(accuracy(&[1, 1, -1, 1], &[1, -1, -1, 1]).unwrap(), 0.75);
        assert!(accuracy(&[1], &[1, 1]).is_err());
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn split_sizes_and_partition() {
        let s = split_indices(100, (0.6, 0.2, 0.2), 9).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (60, 20, 20));
        assert!(s.is_partition_of(100));
        assert_eq!(s, split_indices(100, (0.6, 0.2, 0.2), 9).unwrap());
        assert_ne!(s, split_indices(100, (0.6, 0.2, 0.2), 10).unwrap());
        assert!(split_indices(4, (0.6, 0.2, 0.2), 0).is_err());
        assert!(split_indices(10, (0.6, 0.2, 0.3), 0).is_err());
    }

    fn xor(copies: usize) -> LabeledSet {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..copies {
            let e = i as f64 * 1e-3;
            for (p, l) in [
                ([0.0, 0.0], -1),
                ([1.0, 1.0], -1),
                ([0.0, 1.0], 1),
                ([1.0, 0.0], 1),
            ] {
                x.push(FeatureVector::new(vec![p[0] + e, p[1] - e]));
                y.push(l);
            }
        }
        LabeledSet::new(x, y).unwrap()
    }

    #[test]
    fn xor_selects_poly2_over_linear() {
        let data = xor(3);
        let kernels = vec![
            KernelSpec::linear(),
            KernelSpec::new(KernelKind::Poly2, 1.0, 1.0).unwrap(),
        ];
        let (model, report) =
            select_model(&data, &data, &[10.0], &kernels, SolverSettings::default()).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert_eq!(model.kernel().kind, KernelKind::Poly2);
        assert!(report.rows[0].val_accuracy <= 0.75);
        assert_eq!(report.best_row().val_accuracy, 1.0);
    }

    #[test]
    fn separable_data_prefers_linear_and_small_c() {
        let x: Vec<FeatureVector> = (0..20)
            .map(|i| FeatureVector::new(vec![i as f64 / 10.0 - 1.0, 0.3]))
            .collect();
        let y: Vec<i64> = (0..20).map(|i| if i < 10 { 0 } else { 1 }).collect();
        let data = LabeledSet::new(x, y).unwrap();
        let kernels = kernel_specs(&KernelKind::ALL, None, 1.0, &data).unwrap();
        let (model, report) = select_model(
            &data,
            &data,
            &DEFAULT_C_GRID,
            &kernels,
            SolverSettings::default(),
        )
        .unwrap();
        assert_eq!(report.rows.len(), 20);
        let best = report.best_row();
        assert_eq!(best.val_accuracy, 1.0);
        assert_eq!(model.kernel().kind, KernelKind::Linear);
        // the first linear C reaching 1.0 wins
        let first = report
            .rows
            .iter()
            .position(|r| r.val_accuracy == 1.0)
            .unwrap();
        assert_eq!(report.best, first);
    }

    #[test]
    fn empty_grid_is_an_error() {
        let data = xor(2);
        assert!(select_model(
            &data,
            &data,
            &[],
            &[KernelSpec::linear()],
            SolverSettings::default()
        )
        .is_err());
    }
}
