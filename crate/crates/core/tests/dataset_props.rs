use noiseprint::acquisition::{builtin_profile, generate_dataset, Dataset, Protocol, Run};
use proptest::prelude::*;

const STEP3: usize = 2;

/// Per-component mean and standard error of one step over a run range.
fn step_stats(runs: &[&Run], step: usize) -> ([f64; 4], [f64; 4]) {
    let n = runs.len() as f64;
    let mut mean = [0.0; 4];
    for r in runs {
        let p = r.samples[0][step].probabilities();
        for k in 0..4 {
            mean[k] += p[k] / n;
        }
    }
    let mut se = [0.0; 4];
    for k in 0..4 {
        let var = runs
            .iter()
            .map(|r| (r.samples[0][step].probabilities()[k] - mean[k]).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        se[k] = (var / n).sqrt();
    }
    (mean, se)
}

/// Largest difference of means in units of pooled standard error.
fn separation(a: &[&Run], b: &[&Run], step: usize) -> f64 {
    let (ma, sa) = step_stats(a, step);
    let (mb, sb) = step_stats(b, step);
    (0..4)
        .map(|k| (ma[k] - mb[k]).abs() / (sa[k].powi(2) + sb[k].powi(2)).sqrt())
        .fold(0.0, f64::max)
}

#[test]
fn err_2q_difference_is_visible_at_step_three() {
    let base = builtin_profile("alder").unwrap();
    // binomial scale of one probability at 1000 shots, worst case p = 1/2
    let shot_scale = (0.25f64 / 1000.0).sqrt();
    let mut other = base.clone();
    other.machine_id = "alder-noisier".into();
    other.err_2q = base.err_2q + 5.0 * shot_scale;
    let ds = generate_dataset(&[base, other], Protocol::Slow, 200, 11).unwrap();
    let z = separation(&ds.runs_of("alder"), &ds.runs_of("alder-noisier"), STEP3);
    assert!(z > 3.0, "step-3 separation {z:.2} SE");
}

#[test]
fn drift_is_visible_between_early_and_late_runs() {
    let p = builtin_profile("fir").unwrap();
    let ds = generate_dataset(&[p], Protocol::Slow, 2000, 5).unwrap();
    let runs = ds.runs_of("fir");
    let z = (0..9)
        .map(|s| separation(&runs[..200], &runs[1800..], s))
        .fold(0.0, f64::max);
    assert!(z > 3.0, "early/late separation {z:.2} SE");
}

fn check_schedule(ds: &Dataset, min_gap: Option<f64>) {
    for id in ds.machine_ids() {
        let runs = ds.runs_of(id);
        for (i, w) in runs.windows(2).enumerate() {
            assert_eq!(w[0].run_id + 1, w[1].run_id);
            assert!(w[1].timestamp >= w[0].timestamp, "{id} run {i}");
            if let Some(g) = min_gap {
                assert!(w[1].timestamp - w[0].timestamp >= g, "{id} run {i}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn timestamps_are_monotone_and_slow_gaps_hold(seed in any::<u64>(), runs in 2usize..30) {
        let machines = [builtin_profile("birch").unwrap(), builtin_profile("gum").unwrap()];
        let slow = generate_dataset(&machines, Protocol::Slow, runs, seed).unwrap();
        check_schedule(&slow, Some(120.0));
        let fast = generate_dataset(&machines, Protocol::Fast, runs, seed).unwrap();
        check_schedule(&fast, None);
    }

    #[test]
    fn generation_is_a_pure_function_of_its_inputs(seed in any::<u64>()) {
        let machines = [builtin_profile("cedar").unwrap()];
        let a = generate_dataset(&machines, Protocol::Fast, 3, seed).unwrap();
        let b = generate_dataset(&machines, Protocol::Fast, 3, seed).unwrap();
        prop_assert_eq!(a, b);
    }
}
