use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::features::FeatureVector;
use crate::error::{Error, Result};

/// Kernel families, declared from simplest to most flexible. The derived
/// ordering is the tie-break order used by model selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Poly2,
    Poly3,
    Poly4,
    Rbf,
}

impl KernelKind {
    pub const ALL: [KernelKind; 5] = [
        KernelKind::Linear,
        KernelKind::Poly2,
        KernelKind::Poly3,
        KernelKind::Poly4,
        KernelKind::Rbf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Linear => "linear",
            KernelKind::Poly2 => "poly2",
            KernelKind::Poly3 => "poly3",
            KernelKind::Poly4 => "poly4",
            KernelKind::Rbf => "rbf",
        }
    }

    fn degree(self) -> Option<i32> {
        match self {
            KernelKind::Poly2 => Some(2),
            KernelKind::Poly3 => Some(3),
            KernelKind::Poly4 => Some(4),
            _ => None,
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        KernelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown kernel {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    /// Scale for rbf and polynomial kernels; ignored by linear.
    pub gamma: f64,
    /// Polynomial offset.
    pub coef0: f64,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, gamma: f64, coef0: f64) -> Result<Self> {
        let spec = Self { kind, gamma, coef0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn linear() -> Self {
        Self {
            kind: KernelKind::Linear,
            gamma: 1.0,
            coef0: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "kernel gamma must be positive, got {}",
                self.gamma
            )));
        }
        if !self.coef0.is_finite() {
            return Err(Error::InvalidArgument("kernel coef0 must be finite".into()));
        }
        Ok(())
    }

    /// Kernel value from the inner product and squared distance of the pair.
    #[inline]
    pub(crate) fn from_parts(&self, dot: f64, sq_dist: f64) -> f64 {
        match self.kind {
            KernelKind::Linear => dot,
            KernelKind::Rbf => (-self.gamma * sq_dist).exp(),
            kind => (self.gamma * dot + self.coef0).powi(kind.degree().expect("polynomial")),
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            KernelKind::Linear => write!(f, "linear"),
            KernelKind::Rbf => write!(f, "rbf(gamma={})", self.gamma),
            k => write!(f, "{k}(gamma={}, coef0={})", self.gamma, self.coef0),
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn kernel_raw(spec: &KernelSpec, a: &[f64], b: &[f64]) -> f64 {
    match spec.kind {
        KernelKind::Rbf => spec.from_parts(0.0, sq_dist(a, b)),
        _ => spec.from_parts(dot(a, b), 0.0),
    }
}

pub fn kernel_eval(spec: &KernelSpec, a: &FeatureVector, b: &FeatureVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(kernel_raw(spec, a.as_slice(), b.as_slice()))
}

/// Inner products of a point set, reused to build every kernel's Gram matrix.
#[derive(Clone, Debug)]
pub struct DotCache {
    n: usize,
    dots: Vec<f64>,
}

impl DotCache {
    pub fn new(xs: &[FeatureVector]) -> Result<Self> {
        let n = xs.len();
        if let Some(first) = xs.first() {
            if let Some(bad) = xs.iter().find(|x| x.dim() != first.dim()) {
                return Err(Error::DimensionMismatch {
                    expected: first.dim(),
                    got: bad.dim(),
                });
            }
        }
        let mut dots = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let d = dot(xs[i].as_slice(), xs[j].as_slice());
                dots[i * n + j] = d;
                dots[j * n + i] = d;
            }
        }
        Ok(Self { n, dots })
    }

    pub fn gram(&self, spec: &KernelSpec) -> Gram {
        let n = self.n;
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let d = self.dots[i * n + j];
                let sq = (self.dots[i * n + i] + self.dots[j * n + j] - 2.0 * d).max(0.0);
                let v = spec.from_parts(d, sq);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        Gram { n, k }
    }
}

/// Dense symmetric kernel matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Gram {
    n: usize,
    k: Vec<f64>,
}

impl Gram {
    pub fn compute(spec: &KernelSpec, xs: &[FeatureVector]) -> Result<Self> {
        Ok(DotCache::new(xs)?.gram(spec))
    }

    /// Wraps a row-major `n × n` matrix.
    pub fn from_rows(n: usize, k: Vec<f64>) -> Result<Self> {
        if k.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: k.len(),
            });
        }
        Ok(Self { n, k })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.k[i * self.n + j]
    }

    #[inline]
    pub(crate) fn row(&self, i: usize) -> &[f64] {
        &self.k[i * self.n..(i + 1) * self.n]
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.k)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        self.to_matrix()
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }
}

/// `1 / (p · Var(X))` over every entry of the feature matrix, falling back
/// to `1 / p` when all entries coincide.
pub fn default_gamma(xs: &[FeatureVector]) -> f64 {
    let p = xs.first().map_or(1, |x| x.dim()).max(1) as f64;
    let count = xs.iter().map(|x| x.dim()).sum::<usize>();
    if count == 0 {
        return 1.0 / p;
    }
    let mean = xs.iter().flat_map(|x| x.as_slice()).sum::<f64>() / count as f64;
    let var = xs
        .iter()
        .flat_map(|x| x.as_slice())
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / count as f64;
    if var > 0.0 {
        1.0 / (p * var)
    } else {
        1.0 / p
    }
}

/// Polynomial counterpart of [`default_gamma`]: `1 / mean ||x||^2`, so that
/// `gamma * a.a` is 1 on average. Keeps polynomial kernel values near
/// `(1 + coef0)^d` when the features have little spread around a large mean.
pub fn default_poly_gamma(xs: &[FeatureVector]) -> f64 {
    let sq = xs
        .iter()
        .map(|x| x.as_slice().iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>();
    if xs.is_empty() || sq <= 0.0 {
        let p = xs.first().map_or(1, |x| x.dim()).max(1) as f64;
        return 1.0 / p;
    }
    xs.len() as f64 / sq
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector::new(v.to_vec())
    }

    #[test]
    fn spec_examples() {
        let a = fv(&[0.3, -1.2, 4.0]);
        let rbf = KernelSpec::new(KernelKind::Rbf, 0.7, 0.0).unwrap();
        assert_eq!(kernel_eval(&rbf, &a, &a).unwrap(), 1.0);
        let lin = KernelSpec::linear();
        assert_eq!(
            kernel_eval(&lin, &fv(&[1.0, 0.0]), &fv(&[0.0, 1.0])).unwrap(),
            0.0
        );
        let p2 = KernelSpec::new(KernelKind::Poly2, 1.0, 1.0).unwrap();
        assert_eq!(
            kernel_eval(&p2, &fv(&[1.0, 1.0]), &fv(&[1.0, 1.0])).unwrap(),
            9.0
        );
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let e = kernel_eval(&KernelSpec::linear(), &fv(&[1.0]), &fv(&[1.0, 2.0])).unwrap_err();
        assert!(matches!(e, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn gamma_must_be_positive() {
        assert!(KernelSpec::new(KernelKind::Rbf, 0.0, 0.0).is_err());
        assert!(KernelSpec::new(KernelKind::Poly3, -1.0, 1.0).is_err());
    }

    #[test]
    fn cached_gram_matches_direct_evaluation() {
        let xs: Vec<FeatureVector> = (0..7)
            .map(|i| fv(&[(i as f64).sin(), (i as f64 * 0.3).cos(), i as f64 * 0.1]))
            .collect();
        let cache = DotCache::new(&xs).unwrap();
        for kind in KernelKind::ALL {
            let spec = KernelSpec::new(kind, 0.4, 1.0).unwrap();
            let g = cache.gram(&spec);
            for i in 0..xs.len() {
                for j in 0..xs.len() {
                    let direct = kernel_eval(&spec, &xs[i], &xs[j]).unwrap();
                    assert!((g.get(i, j) - direct).abs() < 1e-12, "{kind} {i} {j}");
                }
            }
        }
    }

    #[test]
    fn default_gamma_uses_pooled_variance() {
        let xs = vec![fv(&[0.0, 1.0]), fv(&[1.0, 0.0])];
        // mean 0.5, variance 0.25, p = 2
        assert!((default_gamma(&xs) - 2.0).abs() < 1e-12);
        assert_eq!(default_gamma(&[fv(&[0.5, 0.5])]), 0.5);
        // mean squared norm of (1, 0) and (1, 2) is 3
        assert!(
            (default_poly_gamma(&[fv(&[1.0, 0.0]), fv(&[1.0, 2.0])]) - 1.0 / 3.0).abs() < 1e-15
        );
    }

    #[test]
    fn kernel_order_and_names() {
        assert!(KernelKind::Linear < KernelKind::Poly2 && KernelKind::Poly4 < KernelKind::Rbf);
        for k in KernelKind::ALL {
            assert_eq!(k.name().parse::<KernelKind>().unwrap(), k);
        }
    }
}
