mod common;

use common::{dual_optimum_by_enumeration, dual_optimum_by_grid, random_problem, signs};
use noiseprint::svm::{
    dual_objective, model_kkt_violation, predict, solve_dual_with, train_binary, FeatureVector,
    Gram, KernelKind, KernelSpec, LabeledSet, PairSelection, DEFAULT_MAX_ITER,
};
use proptest::prelude::*;

#[test]
fn enumeration_and_grid_oracles_agree() {
    for seed in 0..40 {
        let (data, kernel, c) = random_problem(seed, 4);
        let gram = Gram::compute(&kernel, &data.x).unwrap();
        let y = signs(&data);
        let exact = dual_optimum_by_enumeration(&gram, &y, c);
        let grid = dual_optimum_by_grid(&gram, &y, c, 41);
        assert!(
            grid <= exact + 1e-9,
            "seed {seed}: grid {grid} above exact {exact}"
        );
        assert!(
            exact - grid < 1e-3,
            "seed {seed}: grid {grid} vs exact {exact}"
        );
    }
}

#[test]
fn xor_dual_by_brute_force() {
    let x = [[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]];
    let data = LabeledSet::new(
        x.iter().map(|p| FeatureVector::new(p.to_vec())).collect(),
        vec![-1, -1, 1, 1],
    )
    .unwrap();
    let kernel = KernelSpec::new(KernelKind::Poly2, 1.0, 1.0).unwrap();
    let gram = Gram::compute(&kernel, &data.x).unwrap();
    let exact = dual_optimum_by_enumeration(&gram, &signs(&data), 10.0);
    let model = train_binary(&data, 10.0, kernel, 1e-6, DEFAULT_MAX_ITER).unwrap();
    assert!((model.dual_objective() - exact).abs() < 1e-6);
    for (p, l) in data.x.iter().zip(&data.y) {
        assert_eq!(predict(&model, p).unwrap().0, *l);
    }
}

#[test]
fn label_swap_flips_decision_values() {
    for seed in 100..130 {
        let (data, kernel, c) = random_problem(seed, 8);
        let swapped = LabeledSet::new(data.x.clone(), data.y.iter().map(|l| -l).collect()).unwrap();
        let a = train_binary(&data, c, kernel, 1e-6, DEFAULT_MAX_ITER).unwrap();
        let b = train_binary(&swapped, c, kernel, 1e-6, DEFAULT_MAX_ITER).unwrap();
        let probe = FeatureVector::new(vec![0.3; data.dim()]);
        let fa = predict(&a, &probe).unwrap().1;
        let fb = predict(&b, &probe).unwrap().1;
        assert!((fa + fb).abs() < 1e-6, "seed {seed}: {fa} vs {fb}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn smo_matches_enumeration(seed in 0u64..1_000_000) {
        let (data, kernel, c) = random_problem(seed, 8);
        let gram = Gram::compute(&kernel, &data.x).unwrap();
        let exact = dual_optimum_by_enumeration(&gram, &signs(&data), c);
        let model = train_binary(&data, c, kernel, 1e-3, DEFAULT_MAX_ITER).unwrap();
        prop_assert!(model.converged);
        prop_assert!((model.dual_objective() - exact).abs() < 1e-3, "smo {} exact {}", model.dual_objective(), exact);
    }

    #[test]
    fn both_pair_rules_reach_the_optimum(seed in 0u64..1_000_000) {
        let (data, kernel, c) = random_problem(seed, 8);
        let gram = Gram::compute(&kernel, &data.x).unwrap();
        let y = signs(&data);
        let exact = dual_optimum_by_enumeration(&gram, &y, c);
        for rule in [PairSelection::MaxViolating, PairSelection::SecondOrder] {
            let sol = solve_dual_with(&gram, &y, c, 1e-3, DEFAULT_MAX_ITER, rule).unwrap();
            prop_assert!(sol.converged && sol.gap < 1e-3);
            let obj = dual_objective(&gram, &y, &sol.alpha);
            prop_assert!((obj - exact).abs() < 1e-3, "{:?}: {} vs {}", rule, obj, exact);
        }
    }

    #[test]
    fn kkt_certificate_and_feasibility(seed in 0u64..1_000_000) {
        let (data, kernel, c) = random_problem(seed, 8);
        let model = train_binary(&data, c, kernel, 1e-3, DEFAULT_MAX_ITER).unwrap();
        prop_assert!(model.converged);
        prop_assert!(model_kkt_violation(&model, &data).unwrap() <= 1e-3);
        prop_assert!(model.dual_coefs.iter().all(|a| a.abs() <= c && *a != 0.0));
        prop_assert!(model.dual_coefs.iter().sum::<f64>().abs() < 1e-6);
        prop_assert_eq!(model.dual_coefs.len(), model.support_vectors.len());
    }

    #[test]
    fn free_support_vectors_sit_on_the_margin(seed in 0u64..1_000_000) {
        let (data, kernel, c) = random_problem(seed, 8);
        let model = train_binary(&data, c, kernel, 1e-3, DEFAULT_MAX_ITER).unwrap();
        for (sv, a) in model.support_vectors.iter().zip(&model.dual_coefs) {
            if a.abs() < c {
                let f = predict(&model, sv).unwrap().1;
                prop_assert!((f.abs() - 1.0).abs() <= 1e-3, "free SV decision {}", f);
            }
        }
    }

    #[test]
    fn gram_matrices_are_psd(seed in 0u64..1_000_000, n in 2usize..12) {
        let (data, _, _) = random_problem(seed, 2);
        let dim = data.dim();
        let pts: Vec<FeatureVector> = (0..n)
            .map(|i| FeatureVector::new((0..dim).map(|d| ((seed as f64 + 1.0) * (i * 7 + d) as f64).sin()).collect()))
            .collect();
        for kind in KernelKind::ALL {
            let spec = KernelSpec::new(kind, 0.7, 1.0).unwrap();
            let g = Gram::compute(&spec, &pts).unwrap();
            for i in 0..n {
                for j in 0..n {
                    prop_assert_eq!(g.get(i, j), g.get(j, i));
                }
            }
            prop_assert!(g.min_eigenvalue() >= -1e-8, "{} min eig {}", kind, g.min_eigenvalue());
        }
    }

    #[test]
    fn labels_invariant_under_positive_rescaling(seed in 0u64..1_000_000, scale in 0.01f64..100.0) {
        let (data, kernel, c) = random_problem(seed, 8);
        let model = train_binary(&data, c, kernel, 1e-3, DEFAULT_MAX_ITER).unwrap();
        let mut scaled = model.clone();
        scaled.dual_coefs.iter_mut().for_each(|a| *a *= scale);
        scaled.bias *= scale;
        for x in &data.x {
            prop_assert_eq!(predict(&model, x).unwrap().0, predict(&scaled, x).unwrap().0);
        }
    }
}
