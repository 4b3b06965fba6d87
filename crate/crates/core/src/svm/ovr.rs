use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::{FeatureVector, LabeledSet};
use super::kernel::{Gram, KernelSpec};
use super::smo::{model_from_solution, predict, solve_dual, SvmModel};
use crate::error::{Error, Result};

/// One-vs-rest multiclass classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OvrModel {
    /// Ascending class labels; `models[m]` separates `classes[m]` from the rest.
    pub classes: Vec<i64>,
    pub models: Vec<SvmModel>,
}

impl OvrModel {
    /// Label with the largest decision value; ties go to the lowest label.
    pub fn predict(&self, x: &FeatureVector) -> Result<(i64, Vec<f64>)> {
        let values = self
            .models
            .iter()
            .map(|m| m.decision_value(x))
            .collect::<Result<Vec<f64>>>()?;
        let mut best = 0;
        for (m, v) in values.iter().enumerate() {
            if *v > values[best] {
                best = m;
            }
        }
        Ok((self.classes[best], values))
    }

    pub fn converged(&self) -> bool {
        self.models.iter().all(|m| m.converged)
    }
}

/// Per-class relabeling `+1` for class `m`, `-1` otherwise, solved on a
/// shared Gram matrix.
pub fn train_ovr_with_gram(
    data: &LabeledSet,
    gram: &Gram,
    c: f64,
    kernel: KernelSpec,
    tol: f64,
    max_iter: usize,
) -> Result<OvrModel> {
    let classes = data.classes();
    if classes.len() < 2 {
        return Err(Error::DegenerateLabels(format!(
            "{} distinct label(s)",
            classes.len()
        )));
    }
    let models = classes
        .par_iter()
        .map(|&cls| {
            let y: Vec<f64> = data
                .y
                .iter()
                .map(|&l| if l == cls { 1.0 } else { -1.0 })
                .collect();
            let sol = solve_dual(gram, &y, c, tol, max_iter)?;
            if !sol.converged {
                log::warn!(
                    "one-vs-rest model for class {cls} did not converge (gap {:.3e})",
                    sol.gap
                );
            }
            // the "rest" side is labeled by the smallest other class
            let rest = *classes.iter().find(|&&o| o != cls).expect("two classes");
            Ok(model_from_solution(data, &y, (rest, cls), kernel, c, &sol))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OvrModel { classes, models })
}

pub fn train_ovr(
    data: &LabeledSet,
    c: f64,
    kernel: KernelSpec,
    tol: f64,
    max_iter: usize,
) -> Result<OvrModel> {
    kernel.validate()?;
    let gram = Gram::compute(&kernel, &data.x)?;
    train_ovr_with_gram(data, &gram, c, kernel, tol, max_iter)
}

/// A trained classifier of either shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Classifier {
    Binary(SvmModel),
    Ovr(OvrModel),
}

impl Classifier {
    pub fn predict(&self, x: &FeatureVector) -> Result<i64> {
        match self {
            Classifier::Binary(m) => Ok(predict(m, x)?.0),
            Classifier::Ovr(m) => Ok(m.predict(x)?.0),
        }
    }

    pub fn predict_all(&self, xs: &[FeatureVector]) -> Result<Vec<i64>> {
        xs.iter().map(|x| self.predict(x)).collect()
    }

    pub fn kernel(&self) -> KernelSpec {
        match self {
            Classifier::Binary(m) => m.kernel,
            Classifier::Ovr(m) => m.models[0].kernel,
        }
    }

    pub fn c(&self) -> f64 {
        match self {
            Classifier::Binary(m) => m.c,
            Classifier::Ovr(m) => m.models[0].c,
        }
    }

    pub fn converged(&self) -> bool {
        match self {
            Classifier::Binary(m) => m.converged,
            Classifier::Ovr(m) => m.converged(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svm::smo::{train_binary, DEFAULT_MAX_ITER, DEFAULT_TOL};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn blobs(centers: &[(f64, f64)], per: usize, sd: f64, seed: u64) -> LabeledSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, sd).unwrap();
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (label, (cx, cy)) in centers.iter().enumerate() {
            for _ in 0..per {
                x.push(FeatureVector::new(vec![
                    cx + noise.sample(&mut rng),
                    cy + noise.sample(&mut rng),
                ]));
                y.push(label as i64);
            }
        }
        LabeledSet::new(x, y).unwrap()
    }

    #[test]
    fn separated_blobs_are_classified_perfectly() {
        let centers = [(0.0, 0.0), (5.0, 0.0), (0.0, 5.0)];
        let train = blobs(&centers, 30, 0.3, 1);
        let test = blobs(&centers, 30, 0.3, 2);
        let m = train_ovr(
            &train,
            1.0,
            KernelSpec::linear(),
            DEFAULT_TOL,
            DEFAULT_MAX_ITER,
        )
        .unwrap();
        assert_eq!(m.models.len(), 3);
        let clf = Classifier::Ovr(m);
        let pred = clf.predict_all(&test.x).unwrap();
        assert_eq!(pred, test.y);
    }

    #[test]
    fn two_class_reduction_matches_binary() {
        let train = blobs(&[(0.0, 0.0), (1.0, 1.0)], 25, 0.6, 3);
        let probe = blobs(&[(0.5, 0.5)], 50, 1.0, 4);
        let bin = train_binary(
            &train,
            1.0,
            KernelSpec::linear(),
            DEFAULT_TOL,
            DEFAULT_MAX_ITER,
        )
        .unwrap();
        let ovr = train_ovr(
            &train,
            1.0,
            KernelSpec::linear(),
            DEFAULT_TOL,
            DEFAULT_MAX_ITER,
        )
        .unwrap();
        for x in &probe.x {
            assert_eq!(predict(&bin, x).unwrap().0, ovr.predict(x).unwrap().0);
        }
    }

    #[test]
    fn ties_go_to_lowest_label() {
        let sv = SvmModel {
            kernel: KernelSpec::linear(),
            support_vectors: vec![],
            dual_coefs: vec![],
            bias: 0.5,
            c: 1.0,
            classes: (0, 1),
            sv_indices: vec![],
            converged: true,
            iterations: 0,
        };
        let m = OvrModel {
            classes: vec![2, 5, 9],
            models: vec![sv.clone(), sv.clone(), sv],
        };
        assert_eq!(m.predict(&FeatureVector::new(vec![1.0])).unwrap().0, 2);
    }

    #[test]
    fn single_class_is_rejected() {
        let data = blobs(&[(0.0, 0.0)], 5, 0.1, 0);
        assert!(train_ovr(&data, 1.0, KernelSpec::linear(), 1e-3, 10).is_err());
    }
}
