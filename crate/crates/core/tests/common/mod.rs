//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use noiseprint::svm::{FeatureVector, Gram, KernelKind, KernelSpec, LabeledSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn objective(q: &DMatrix<f64>, alpha: &DVector<f64>) -> f64 {
    alpha.sum() - 0.5 * (alpha.transpose() * q * alpha)[(0, 0)]
}

fn signed_gram(gram: &Gram, y: &[f64]) -> DMatrix<f64> {
    let n = y.len();
    DMatrix::from_fn(n, n, |i, j| y[i] * y[j] * gram.get(i, j))
}

/// Exact maximum of the soft-margin dual by enumerating every assignment of
/// each variable to {0, C, free} and solving the equality-constrained
/// stationarity system on the free block.
pub fn dual_optimum_by_enumeration(gram: &Gram, y: &[f64], c: f64) -> f64 {
    let n = y.len();
    assert!(n <= 10, "enumeration is 3^n");
    let q = signed_gram(gram, y);
    let mut best = f64::NEG_INFINITY;
    let mut state = vec![0u8; n];
    for code in 0..3usize.pow(n as u32) {
        let mut rest = code;
        for s in state.iter_mut() {
            *s = (rest % 3) as u8;
            rest /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut alpha = DVector::from_fn(n, |i, _| if state[i] == 1 { c } else { 0.0 });
        let bound_sum: f64 = (0..n).filter(|&i| state[i] == 1).map(|i| y[i] * c).sum();
        if free.is_empty() {
            if bound_sum.abs() > 1e-12 {
                continue;
            }
        } else {
            let m = free.len();
            let mut a = DMatrix::zeros(m + 1, m + 1);
            let mut b = DVector::zeros(m + 1);
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    a[(r, s)] = q[(i, j)];
                }
                a[(r, m)] = y[i];
                a[(m, r)] = y[i];
                let fixed: f64 = (0..n)
                    .filter(|&j| state[j] == 1)
                    .map(|j| q[(i, j)] * c)
                    .sum();
                b[r] = 1.0 - fixed;
            }
            b[m] = -bound_sum;
            let svd = a.clone().svd(true, true);
            let sol = match svd.solve(&b, 1e-10) {
                Ok(s) => s,
                Err(_) => continue,
            };
            if (&a * &sol - &b).amax() > 1e-7 {
                continue;
            }
            let mut ok = true;
            for (r, &i) in free.iter().enumerate() {
                let v = sol[r];
                if v < -1e-9 || v > c + 1e-9 {
                    ok = false;
                    break;
                }
                alpha[i] = v.clamp(0.0, c);
            }
            if !ok {
                continue;
            }
        }
        best = best.max(objective(&q, &alpha));
    }
    best
}

/// Grid maximum of the dual for n <= 4: the first n - 1 variables range
/// over a grid on [0, C] and the last one is fixed by the equality
/// constraint. Three zoom passes refine around the incumbent.
pub fn dual_optimum_by_grid(gram: &Gram, y: &[f64], c: f64, points: usize) -> f64 {
    let n = y.len();
    assert!((2..=4).contains(&n));
    let q = signed_gram(gram, y);
    let eval = |free: &[f64]| -> Option<f64> {
        let s: f64 = free.iter().zip(y).map(|(a, yi)| a * yi).sum();
        let last = -s * y[n - 1];
        if !(-1e-12..=c + 1e-12).contains(&last) {
            return None;
        }
        let mut alpha = DVector::zeros(n);
        for (i, a) in free.iter().enumerate() {
            alpha[i] = *a;
        }
        alpha[n - 1] = last.clamp(0.0, c);
        Some(objective(&q, &alpha))
    };
    let d = n - 1;
    let mut lo = vec![0.0; d];
    let mut hi = vec![c; d];
    let mut best = f64::NEG_INFINITY;
    let mut arg = vec![0.0; d];
    for _pass in 0..4 {
        let total = points.pow(d as u32);
        for code in 0..total {
            let mut rest = code;
            let mut pt = vec![0.0; d];
            for k in 0..d {
                let t = (rest % points) as f64 / (points - 1) as f64;
                rest /= points;
                pt[k] = lo[k] + t * (hi[k] - lo[k]);
            }
            if let Some(v) = eval(&pt) {
                if v > best {
                    best = v;
                    arg = pt;
                }
            }
        }
        for k in 0..d {
            let w = (hi[k] - lo[k]) / (points - 1) as f64 * 2.0;
            lo[k] = (arg[k] - w).max(0.0);
            hi[k] = (arg[k] + w).min(c);
        }
    }
    best
}

/// Small random binary problem with both labels present.
pub fn random_problem(seed: u64, max_n: usize) -> (LabeledSet, KernelSpec, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=max_n);
    let dim = rng.random_range(1..=3);
    let x: Vec<FeatureVector> = (0..n)
        .map(|_| FeatureVector::new((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()))
        .collect();
    let mut y: Vec<i64> = (0..n)
        .map(|_| if rng.random_bool(0.5) { 1 } else { -1 })
        .collect();
    y[0] = 1;
    y[1] = -1;
    let kind = KernelKind::ALL[rng.random_range(0..5)];
    let gamma = rng.random_range(0.2..2.0);
    let kernel = KernelSpec::new(kind, gamma, 1.0).unwrap();
    let c = [0.1, 0.5, 1.0, 3.0, 10.0][rng.random_range(0..5)];
    (LabeledSet::new(x, y).unwrap(), kernel, c)
}

pub fn signs(data: &LabeledSet) -> Vec<f64> {
    data.y
        .iter()
        .map(|&l| if l > 0 { 1.0 } else { -1.0 })
        .collect()
}

/// 16x16 unitary of one gate built from Kronecker products of 2x2 blocks,
/// with qubit 3 as the most significant factor.
pub fn gate_unitary(gate: &noiseprint::simulator::Gate) -> DMatrix<num_complex::Complex64> {
    use noiseprint::simulator::GateKind;
    use num_complex::Complex64 as C;
    let m = |a: [C; 4]| DMatrix::from_row_slice(2, 2, &a);
    let (o, l) = (C::new(0.0, 0.0), C::new(1.0, 0.0));
    let id = m([l, o, o, l]);
    let x = m([o, l, l, o]);
    let p0 = m([l, o, o, o]);
    let p1 = m([o, o, o, l]);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = m([
        C::new(s, 0.0),
        C::new(s, 0.0),
        C::new(s, 0.0),
        C::new(-s, 0.0),
    ]);
    let phase = |sign: f64| {
        m([
            l,
            o,
            o,
            C::from_polar(1.0, sign * std::f64::consts::FRAC_PI_4),
        ])
    };
    // operator acting as `ops[q]` on each listed qubit, identity elsewhere
    let embed = |ops: &[(usize, &DMatrix<C>)]| {
        let mut out = DMatrix::from_element(1, 1, l);
        for q in (0..4).rev() {
            let f = ops.iter().find(|(k, _)| *k == q).map_or(&id, |(_, a)| *a);
            out = out.kronecker(f);
        }
        out
    };
    let q = &gate.qubits;
    match gate.kind {
        GateKind::H => embed(&[(q[0], &h)]),
        GateKind::X => embed(&[(q[0], &x)]),
        GateKind::T => embed(&[(q[0], &phase(1.0))]),
        GateKind::Tdg => embed(&[(q[0], &phase(-1.0))]),
        GateKind::Cnot => embed(&[(q[0], &p0)]) + embed(&[(q[0], &p1), (q[1], &x)]),
        GateKind::Toffoli => {
            let both = embed(&[(q[0], &p1), (q[1], &p1)]);
            let flip = embed(&[(q[0], &p1), (q[1], &p1), (q[2], &x)]);
            DMatrix::identity(16, 16) - both + flip
        }
    }
}

/// Final state of a gate list applied to |0000>.
pub fn kron_statevector(gates: &[noiseprint::simulator::Gate]) -> DVector<num_complex::Complex64> {
    let mut psi = DVector::from_element(16, num_complex::Complex64::new(0.0, 0.0));
    psi[0] = num_complex::Complex64::new(1.0, 0.0);
    for g in gates {
        psi = gate_unitary(g) * psi;
    }
    psi
}

/// Distribution of (q3, q2) for a pure state, indexed `2 * q3 + q2`.
pub fn pair_marginal(psi: &DVector<num_complex::Complex64>) -> [f64; 4] {
    let mut p = [0.0; 4];
    for (b, a) in psi.iter().enumerate() {
        p[2 * ((b >> 3) & 1) + ((b >> 2) & 1)] += a.norm_sqr();
    }
    p
}
