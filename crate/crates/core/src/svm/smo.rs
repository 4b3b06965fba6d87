use serde::{Deserialize, Serialize};

use super::features::{FeatureVector, LabeledSet};
use super::kernel::{kernel_raw, Gram, KernelSpec};
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-3;
pub const DEFAULT_MAX_ITER: usize = 10_000;
/// Curvature floor for degenerate pairs.
const TAU: f64 = 1e-12;

/// How the second index of each working pair is chosen. The first index is
/// always the maximal KKT violator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairSelection {
    /// Partner with the opposite extreme violation.
    MaxViolating,
    /// Partner with the largest guaranteed decrease of the objective
    /// (second-order rule); converges in far fewer updates on
    /// ill-conditioned kernels.
    #[default]
    SecondOrder,
}

/// Result of the dual solver on a precomputed Gram matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
    /// Pair updates performed.
    pub iterations: usize,
    /// Maximal KKT violation (m - M) at exit.
    pub gap: f64,
}

/// Dual objective `sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij`.
pub fn dual_objective(gram: &Gram, y: &[f64], alpha: &[f64]) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alpha[i] == 0.0 {
            continue;
        }
        let row = gram.row(i);
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * row[j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Soft-margin dual by sequential minimal optimization.
///
/// Each iteration updates the maximal violating pair; the loop ends when the
/// violation gap drops below `tol` or after `max_iter * n` pair updates
/// (`max_iter` sweeps over the data).
pub fn solve_dual(
    gram: &Gram,
    y: &[f64],
    c: f64,
    tol: f64,
    max_iter: usize,
) -> Result<DualSolution> {
    solve_dual_with(gram, y, c, tol, max_iter, PairSelection::default())
}

/// [`solve_dual`] with an explicit pair-selection rule.
pub fn solve_dual_with(
    gram: &Gram,
    y: &[f64],
    c: f64,
    tol: f64,
    max_iter: usize,
    selection: PairSelection,
) -> Result<DualSolution> {
    let n = gram.n();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "C must be positive, got {c}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tol must be positive, got {tol}"
        )));
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::InvalidArgument(
            "binary targets must be +1 or -1".into(),
        ));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(Error::DegenerateLabels(
            "both classes must be present".into(),
        ));
    }

    let mut alpha = vec![0.0; n];
    // gradient of 1/2 a'Qa - e'a
    let mut grad = vec![-1.0; n];
    let budget = max_iter.saturating_mul(n.max(1));
    let mut iterations = 0;
    let (converged, gap) = loop {
        let (i, gmax, j, gmin) = select_pair(&alpha, &grad, y, c);
        let gap = gmax - gmin;
        if gap < tol {
            break (true, gap.max(0.0));
        }
        if iterations >= budget {
            break (false, gap);
        }
        iterations += 1;
        let i = i.expect("violating pair");
        let j = match selection {
            PairSelection::MaxViolating => j.expect("violating pair"),
            PairSelection::SecondOrder => second_order_partner(gram, &alpha, &grad, y, c, i, gmax)
                .unwrap_or(j.expect("violating pair")),
        };
        let ki = gram.row(i);
        let kj = gram.row(j);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        if y[i] != y[j] {
            let mut quad = ki[i] + kj[j] + 2.0 * (y[i] * y[j] * ki[j]);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = old_i - old_j;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let mut quad = ki[i] + kj[j] - 2.0 * (y[i] * y[j] * ki[j]);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = old_i + old_j;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;
        let di = (alpha[i] - old_i) * y[i];
        let dj = (alpha[j] - old_j) * y[j];
        for t in 0..n {
            grad[t] += y[t] * (ki[t] * di + kj[t] * dj);
        }
    };

    Ok(DualSolution {
        bias: bias_from(&alpha, &grad, y, c),
        alpha,
        converged,
        iterations,
        gap,
    })
}

fn in_up(a: f64, y: f64, c: f64) -> bool {
    (y > 0.0 && a < c) || (y < 0.0 && a > 0.0)
}

fn in_low(a: f64, y: f64, c: f64) -> bool {
    (y > 0.0 && a > 0.0) || (y < 0.0 && a < c)
}

/// Maximal violating pair: argmax of `-y G` over the up set and argmin over
/// the low set.
fn select_pair(
    alpha: &[f64],
    grad: &[f64],
    y: &[f64],
    c: f64,
) -> (Option<usize>, f64, Option<usize>, f64) {
    let (mut i, mut gmax) = (None, f64::NEG_INFINITY);
    let (mut j, mut gmin) = (None, f64::INFINITY);
    for t in 0..alpha.len() {
        let v = -y[t] * grad[t];
        if in_up(alpha[t], y[t], c) && v > gmax {
            gmax = v;
            i = Some(t);
        }
        if in_low(alpha[t], y[t], c) && v < gmin {
            gmin = v;
            j = Some(t);
        }
    }
    (i, gmax, j, gmin)
}

/// Low-set index maximizing `b^2 / a`, the objective decrease of a
/// one-dimensional Newton step along the pair `(i, t)`.
fn second_order_partner(
    gram: &Gram,
    alpha: &[f64],
    grad: &[f64],
    y: &[f64],
    c: f64,
    i: usize,
    gmax: f64,
) -> Option<usize> {
    let ki = gram.row(i);
    let kii = ki[i];
    let mut best = None;
    let mut best_gain = f64::NEG_INFINITY;
    for t in 0..alpha.len() {
        if !in_low(alpha[t], y[t], c) {
            continue;
        }
        let v = -y[t] * grad[t];
        let b = gmax - v;
        if b <= 0.0 {
            continue;
        }
        let mut a = kii + gram.get(t, t) - 2.0 * ki[t];
        if a <= 0.0 {
            a = TAU;
        }
        let gain = b * b / a;
        if gain > best_gain {
            best_gain = gain;
            best = Some(t);
        }
    }
    best
}

fn bias_from(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut free_sum = 0.0;
    let mut free = 0usize;
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    for t in 0..alpha.len() {
        let v = -y[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            free_sum += v;
            free += 1;
        }
        if in_up(alpha[t], y[t], c) {
            hi = hi.max(v);
        }
        if in_low(alpha[t], y[t], c) {
            lo = lo.min(v);
        }
    }
    if free > 0 {
        free_sum / free as f64
    } else if hi.is_finite() && lo.is_finite() {
        (hi + lo) / 2.0
    } else if hi.is_finite() {
        hi
    } else {
        lo
    }
}

/// Largest violation of the KKT conditions of a dual point with bias `b`.
pub fn kkt_violation(gram: &Gram, y: &[f64], alpha: &[f64], bias: f64, c: f64) -> f64 {
    let n = alpha.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let f: f64 = (0..n)
            .map(|j| alpha[j] * y[j] * gram.get(i, j))
            .sum::<f64>()
            + bias;
        let m = y[i] * f;
        let v = if alpha[i] == 0.0 {
            1.0 - m
        } else if alpha[i] == c {
            m - 1.0
        } else {
            (m - 1.0).abs()
        };
        worst = worst.max(v);
    }
    worst
}

/// Trained binary kernel classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: KernelSpec,
    pub support_vectors: Vec<FeatureVector>,
    /// `alpha_i * y_i` for each support vector.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    /// `(negative, positive)`; the positive class is the larger label.
    pub classes: (i64, i64),
    /// Positions of the support vectors in the training set.
    pub sv_indices: Vec<usize>,
    pub converged: bool,
    pub iterations: usize,
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.support_vectors.first().map_or(0, |v| v.dim())
    }

    pub fn decision_value(&self, x: &FeatureVector) -> Result<f64> {
        if !self.support_vectors.is_empty() && x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        Ok(self.decision_raw(x.as_slice()))
    }

    pub(crate) fn decision_raw(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coefs)
            .map(|(sv, a)| a * kernel_raw(&self.kernel, sv.as_slice(), x))
            .sum::<f64>()
            + self.bias
    }

    /// Dual objective of the stored solution.
    pub fn dual_objective(&self) -> f64 {
        let mut quad = 0.0;
        for (a, ca) in self.support_vectors.iter().zip(&self.dual_coefs) {
            for (b, cb) in self.support_vectors.iter().zip(&self.dual_coefs) {
                quad += ca * cb * kernel_raw(&self.kernel, a.as_slice(), b.as_slice());
            }
        }
        self.dual_coefs.iter().map(|v| v.abs()).sum::<f64>() - 0.5 * quad
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Returns the predicted label and the decision value; zero maps to the
/// positive class.
pub fn predict(model: &SvmModel, x: &FeatureVector) -> Result<(i64, f64)> {
    let f = model.decision_value(x)?;
    Ok((
        if f >= 0.0 {
            model.classes.1
        } else {
            model.classes.0
        },
        f,
    ))
}

/// Maps the two labels of `data` to -1 (smaller) and +1 (larger).
pub(crate) fn binary_targets(data: &LabeledSet) -> Result<((i64, i64), Vec<f64>)> {
    let classes = data.classes();
    match classes.as_slice() {
        [neg, pos] => Ok((
            (*neg, *pos),
            data.y
                .iter()
                .map(|&l| if l == *pos { 1.0 } else { -1.0 })
                .collect(),
        )),
        [_] | [] => Err(Error::DegenerateLabels(format!(
            "{} distinct label(s)",
            classes.len()
        ))),
        _ => Err(Error::InvalidArgument(format!(
            "binary training needs exactly 2 labels, found {}",
            classes.len()
        ))),
    }
}

/// Builds a model from a dual solution over `data`.
pub(crate) fn model_from_solution(
    data: &LabeledSet,
    y: &[f64],
    classes: (i64, i64),
    kernel: KernelSpec,
    c: f64,
    sol: &DualSolution,
) -> SvmModel {
    let sv_indices: Vec<usize> = (0..data.len()).filter(|&i| sol.alpha[i] > 0.0).collect();
    SvmModel {
        kernel,
        support_vectors: sv_indices.iter().map(|&i| data.x[i].clone()).collect(),
        dual_coefs: sv_indices.iter().map(|&i| sol.alpha[i] * y[i]).collect(),
        bias: sol.bias,
        c,
        classes,
        sv_indices,
        converged: sol.converged,
        iterations: sol.iterations,
    }
}

/// Trains on a Gram matrix already computed for `data` under `kernel`.
pub fn train_binary_with_gram(
    data: &LabeledSet,
    gram: &Gram,
    c: f64,
    kernel: KernelSpec,
    tol: f64,
    max_iter: usize,
) -> Result<SvmModel> {
    let (classes, y) = binary_targets(data)?;
    let sol = solve_dual(gram, &y, c, tol, max_iter)?;
    if !sol.converged {
        log::warn!(
            "SMO stopped after {} updates with gap {:.3e} (C = {c}, {kernel})",
            sol.iterations,
            sol.gap
        );
    }
    Ok(model_from_solution(data, &y, classes, kernel, c, &sol))
}

pub fn train_binary(
    data: &LabeledSet,
    c: f64,
    kernel: KernelSpec,
    tol: f64,
    max_iter: usize,
) -> Result<SvmModel> {
    kernel.validate()?;
    binary_targets(data)?;
    let gram = Gram::compute(&kernel, &data.x)?;
    train_binary_with_gram(data, &gram, c, kernel, tol, max_iter)
}

/// Largest KKT violation of a trained model on its own training data.
pub fn model_kkt_violation(model: &SvmModel, data: &LabeledSet) -> Result<f64> {
    let (_, y) = binary_targets(data)?;
    let mut alpha = vec![0.0; data.len()];
    for (&i, coef) in model.sv_indices.iter().zip(&model.dual_coefs) {
        alpha[i] = coef.abs();
    }
    let mut worst: f64 = 0.0;
    for i in 0..data.len() {
        let m = y[i] * model.decision_value(&data.x[i])?;
        let v = if alpha[i] == 0.0 {
            1.0 - m
        } else if alpha[i] == model.c {
            m - 1.0
        } else {
            (m - 1.0).abs()
        };
        worst = worst.max(v);
    }
    Ok(worst)
}
