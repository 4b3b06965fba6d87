use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind, SvmGrid};
use super::report::{AccuracyTable, CellInfo, Report};
use crate::acquisition::{load_dataset, Dataset, Run};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, Key};
use crate::svm::{
    accuracy, kernel_specs, run_features, select_model, split_indices, Classifier, FeatureSpec,
    LabeledSet, Standardizer,
};
use crate::testbed::NUM_STEPS;

pub const SPLIT: (f64, f64, f64) = (0.6, 0.2, 0.2);

/// A model fitted under the 60/20/20 protocol.
#[derive(Clone, Debug)]
pub struct FittedCell {
    pub model: Classifier,
    pub standardizer: Option<Standardizer>,
    pub info: CellInfo,
    /// Accuracy on the held-out test part.
    pub test_accuracy: f64,
}

impl FittedCell {
    /// Accuracy on a set that played no part in fitting.
    pub fn score(&self, data: &LabeledSet) -> Result<f64> {
        let data = match &self.standardizer {
            Some(s) => s.transform(data),
            None => data.clone(),
        };
        accuracy(&self.model.predict_all(&data.x)?, &data.y)
    }
}

/// Splits, selects a kernel and C on the validation part, and scores on
/// the test part.
pub fn fit_cell(
    data: &LabeledSet,
    grid: &SvmGrid,
    split_seed: u64,
    feature: &FeatureSpec,
) -> Result<FittedCell> {
    let idx = split_indices(data.len(), SPLIT, split_seed)?;
    if !idx.is_partition_of(data.len()) {
        return Err(Error::InvalidArgument("split parts overlap".into()));
    }
    let (mut train, mut val, mut test) = (
        data.subset(&idx.train),
        data.subset(&idx.val),
        data.subset(&idx.test),
    );
    let standardizer = grid.standardize.then(|| Standardizer::fit(&train));
    if let Some(s) = &standardizer {
        train = s.transform(&train);
        val = s.transform(&val);
        test = s.transform(&test);
    }
    let kernels = kernel_specs(&grid.kernels, grid.gamma, grid.coef0, &train)?;
    let (model, report) = select_model(&train, &val, &grid.c_grid, &kernels, grid.settings())?;
    let test_accuracy = accuracy(&model.predict_all(&test.x)?, &test.y)?;
    let best = report.best_row();
    let info = CellInfo {
        feature: feature.to_string(),
        kernel: best.kernel.to_string(),
        c: best.c,
        val_accuracy: best.val_accuracy,
        converged: model.converged(),
        split_seed,
        n_train: idx.train.len(),
        n_val: idx.val.len(),
        n_test: idx.test.len(),
    };
    Ok(FittedCell {
        model,
        standardizer,
        info,
        test_accuracy,
    })
}

fn cell_seed(seed: u64, parts: &[Key<'_>]) -> u64 {
    let mut path: Vec<Key<'_>> = vec!["cell".into()];
    path.extend_from_slice(parts);
    let s = derive_seed(seed, &path);
    log::info!("cell {parts:?}: split seed {s}");
    s
}

/// Two groups of runs labeled 0 and 1.
fn two_groups(a: &[&Run], b: &[&Run], spec: &FeatureSpec) -> Result<LabeledSet> {
    let xa = run_features(a.iter().copied(), spec);
    let xb = run_features(b.iter().copied(), spec);
    let y = std::iter::repeat_n(0, xa.len())
        .chain(std::iter::repeat_n(1, xb.len()))
        .collect();
    LabeledSet::new(xa.into_iter().chain(xb).collect(), y)
}

fn labeled_groups(groups: &[Vec<&Run>], spec: &FeatureSpec) -> Result<LabeledSet> {
    let mut out = LabeledSet {
        x: Vec::new(),
        y: Vec::new(),
    };
    for (label, g) in groups.iter().enumerate() {
        let x = run_features(g.iter().copied(), spec);
        out.y.extend(std::iter::repeat_n(label as i64, x.len()));
        out.x.extend(x);
    }
    Ok(out)
}

fn steps() -> impl Iterator<Item = usize> {
    1..=NUM_STEPS
}

fn k_labels() -> Vec<String> {
    steps().map(|k| k.to_string()).collect()
}

fn new_report(
    cfg: &ExperimentConfig,
    ds: &Dataset,
    tables: Vec<AccuracyTable>,
    notes: Vec<(String, String)>,
) -> Report {
    Report {
        experiment: cfg.experiment.name().to_string(),
        seed: cfg.seed,
        dataset_seed: ds.seed,
        config_hash: cfg.hash(),
        tables,
        notes,
    }
}

/// Runs `jobs` concurrently and returns results in job order.
fn run_cells<J: Sync>(
    jobs: &[J],
    f: impl Fn(&J) -> Result<FittedCell> + Sync + Send,
) -> Result<Vec<FittedCell>> {
    jobs.par_iter().map(f).collect()
}

fn single_machine<'a>(cfg: &'a ExperimentConfig, ds: &'a Dataset) -> Result<&'a str> {
    let sel = cfg.machine_selection(ds)?;
    match sel.as_slice() {
        [one] => Ok(one),
        _ => Err(Error::MachineCount {
            expected: 1,
            found: sel.len(),
        }),
    }
}

/// Binary SVMs for every machine pair, single(k) and prefix(k) inputs.
pub fn exp_pairwise(cfg: &ExperimentConfig, ds: &Dataset) -> Result<Report> {
    cfg.check_dataset(ds)?;
    let machines = cfg.machine_selection(ds)?;
    if machines.len() < 2 {
        return Err(Error::MachineCount {
            expected: 2,
            found: machines.len(),
        });
    }
    let runs: Vec<Vec<&Run>> = machines.iter().map(|m| ds.runs_of(m)).collect();
    let mut jobs = Vec::new();
    for a in 0..machines.len() {
        for b in a + 1..machines.len() {
            for k in steps() {
                for spec in [FeatureSpec::single(k)?, FeatureSpec::prefix(k)?] {
                    jobs.push((a, b, k, spec));
                }
            }
        }
    }
    let cells = run_cells(&jobs, |&(a, b, _, spec)| {
        let data = two_groups(&runs[a], &runs[b], &spec)?;
        let seed = cell_seed(
            cfg.seed,
            &[
                "pairwise".into(),
                machines[a].into(),
                machines[b].into(),
                spec.to_string().as_str().into(),
            ],
        );
        fit_cell(&data, &cfg.svm, seed, &spec)
    })?;
    let mut tables: Vec<AccuracyTable> = Vec::new();
    for ((a, b, k, spec), cell) in jobs.iter().zip(cells) {
        let title = format!("{} vs {}", machines[*a], machines[*b]);
        if tables.last().is_none_or(|t| t.title != title) {
            tables.push(AccuracyTable::new(
                title,
                "k",
                k_labels(),
                vec!["single".into(), "prefix".into()],
            ));
        }
        let col = usize::from(matches!(spec, FeatureSpec::Prefix { .. }));
        tables
            .last_mut()
            .expect("pushed")
            .set(k - 1, col, cell.test_accuracy, Some(cell.info));
    }
    Ok(new_report(cfg, ds, tables, vec![]))
}

/// Column layout of the multiclass table.
pub fn multiclass_columns() -> Vec<String> {
    let mut cols = vec!["single".to_string()];
    cols.extend((1..=5).map(|s| format!("window{s}")));
    cols.push("prefix".into());
    cols
}

fn multiclass_spec(k: usize, col: usize) -> Result<FeatureSpec> {
    match col {
        0 => FeatureSpec::single(k),
        6 => FeatureSpec::prefix(k),
        s => FeatureSpec::window(k, s),
    }
}

/// One-vs-rest SVMs over all selected machines; single, window(s) for
/// s = 1..5 and prefix inputs, with a mean row that leaves out the prefix
/// column.
pub fn exp_multiclass(cfg: &ExperimentConfig, ds: &Dataset) -> Result<Report> {
    cfg.check_dataset(ds)?;
    let machines = cfg.machine_selection(ds)?;
    if machines.len() < 3 {
        return Err(Error::MachineCount {
            expected: 3,
            found: machines.len(),
        });
    }
    let groups: Vec<Vec<&Run>> = machines.iter().map(|m| ds.runs_of(m)).collect();
    let cols = multiclass_columns();
    let jobs: Vec<(usize, usize, FeatureSpec)> = steps()
        .flat_map(|k| (0..cols.len()).map(move |c| (k, c)))
        .map(|(k, c)| Ok((k, c, multiclass_spec(k, c)?)))
        .collect::<Result<_>>()?;
    let cells = run_cells(&jobs, |&(_, _, spec)| {
        let data = labeled_groups(&groups, &spec)?;
        let seed = cell_seed(
            cfg.seed,
            &["multiclass".into(), spec.to_string().as_str().into()],
        );
        fit_cell(&data, &cfg.svm, seed, &spec)
    })?;
    let mut rows = k_labels();
    rows.push("mean".into());
    let mut table = AccuracyTable::new(
        format!("{} machines", machines.len()),
        "k",
        rows,
        cols.clone(),
    );
    for ((k, c, _), cell) in jobs.iter().zip(cells) {
        table.set(k - 1, *c, cell.test_accuracy, Some(cell.info));
    }
    for c in 0..cols.len() - 1 {
        let col = table.column(c);
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        table.set(NUM_STEPS, c, mean, None);
    }
    let notes = vec![("machines".to_string(), machines.join(" "))];
    Ok(new_report(cfg, ds, vec![table], notes))
}

/// Splits runs (sorted by time) at their largest timestamp gap.
fn split_days<'a>(runs: &[&'a Run], min_gap_h: f64) -> Result<(Vec<&'a Run>, Vec<&'a Run>, f64)> {
    if runs.len() < 2 {
        return Err(Error::MissingSecondEpoch(format!("{} run(s)", runs.len())));
    }
    let (cut, gap) = runs
        .windows(2)
        .enumerate()
        .map(|(i, w)| (i + 1, w[1].timestamp - w[0].timestamp))
        .fold((0, f64::NEG_INFINITY), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        });
    let gap_h = gap / 3600.0;
    if gap_h < min_gap_h {
        return Err(Error::MissingSecondEpoch(format!(
            "largest gap between runs is {gap_h:.2} h, below {min_gap_h} h"
        )));
    }
    Ok((runs[..cut].to_vec(), runs[cut..].to_vec(), gap_h))
}

/// Day 1 against day 2 on one machine.
pub fn exp_temporal24h(cfg: &ExperimentConfig, ds: &Dataset) -> Result<Report> {
    cfg.check_dataset(ds)?;
    let machine = single_machine(cfg, ds)?;
    let mut runs: Vec<&Run> = ds.runs_of(machine);
    runs.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    let (day1, day2, gap_h) = split_days(&runs, cfg.min_epoch_gap_hours)?;
    let jobs: Vec<(usize, FeatureSpec)> = steps()
        .flat_map(|k| [(k, FeatureSpec::single(k)), (k, FeatureSpec::prefix(k))])
        .map(|(k, s)| Ok((k, s?)))
        .collect::<Result<_>>()?;
    let cells = run_cells(&jobs, |(_, spec)| {
        let data = two_groups(&day1, &day2, spec)?;
        let seed = cell_seed(
            cfg.seed,
            &[
                "temporal24h".into(),
                machine.into(),
                spec.to_string().as_str().into(),
            ],
        );
        fit_cell(&data, &cfg.svm, seed, spec)
    })?;
    let mut table = AccuracyTable::new(
        format!("{machine} day 1 vs day 2"),
        "k",
        k_labels(),
        vec!["single".into(), "prefix".into()],
    );
    for ((k, spec), cell) in jobs.iter().zip(cells) {
        let col = usize::from(matches!(spec, FeatureSpec::Prefix { .. }));
        table.set(k - 1, col, cell.test_accuracy, Some(cell.info));
    }
    let notes = vec![
        (
            "runs per day".to_string(),
            format!("{} / {}", day1.len(), day2.len()),
        ),
        ("gap between days (h)".to_string(), format!("{gap_h:.2}")),
    ];
    Ok(new_report(cfg, ds, vec![table], notes))
}

fn window_cell(
    cfg: &ExperimentConfig,
    machine: &str,
    runs: &[&Run],
    start_a: usize,
    start_b: usize,
    spec: &FeatureSpec,
) -> Result<FittedCell> {
    let w = cfg.window_runs;
    let data = two_groups(
        &runs[start_a..start_a + w],
        &runs[start_b..start_b + w],
        spec,
    )?;
    // keyed by window positions, so the gap sweep reproduces these cells
    let seed = cell_seed(
        cfg.seed,
        &[
            "windows".into(),
            machine.into(),
            start_a.into(),
            start_b.into(),
            spec.to_string().as_str().into(),
        ],
    );
    fit_cell(&data, &cfg.svm, seed, spec)
}

fn machine_runs<'a>(ds: &'a Dataset, machine: &str, needed: usize) -> Result<Vec<&'a Run>> {
    let runs: Vec<&Run> = ds.runs_of(machine);
    if runs.len() < needed {
        return Err(Error::InsufficientRuns {
            needed,
            found: runs.len(),
        });
    }
    Ok(runs)
}

/// First window against each later window of one machine.
pub fn exp_window_temporal(cfg: &ExperimentConfig, ds: &Dataset) -> Result<Report> {
    cfg.check_dataset(ds)?;
    cfg.validate()?;
    let machine = single_machine(cfg, ds)?;
    let w = cfg.window_runs;
    let runs = machine_runs(ds, machine, w * cfg.windows)?;
    let jobs: Vec<(usize, usize, FeatureSpec)> = (1..cfg.windows)
        .flat_map(|j| {
            steps().flat_map(move |k| {
                [
                    (j, k, FeatureSpec::single(k)),
                    (j, k, FeatureSpec::prefix(k)),
                ]
            })
        })
        .map(|(j, k, s)| Ok((j, k, s?)))
        .collect::<Result<_>>()?;
    let cells = run_cells(&jobs, |(j, _, spec)| {
        window_cell(cfg, machine, &runs, 0, j * w, spec)
    })?;
    let cols: Vec<String> = (2..=cfg.windows).map(|j| format!("W{j}")).collect();
    let mut single = AccuracyTable::new("single", "k", k_labels(), cols.clone());
    let mut prefix = AccuracyTable::new("prefix", "k", k_labels(), cols);
    for ((j, k, spec), cell) in jobs.iter().zip(cells) {
        let t = if matches!(spec, FeatureSpec::Prefix { .. }) {
            &mut prefix
        } else {
            &mut single
        };
        t.set(k - 1, j - 1, cell.test_accuracy, Some(cell.info));
    }
    let span_h = |i: usize| {
        let s = &runs[i * w..(i + 1) * w];
        format!(
            "{:.1}-{:.1}",
            s[0].timestamp / 3600.0,
            s[w - 1].timestamp / 3600.0
        )
    };
    let notes = vec![
        ("machine".to_string(), machine.to_string()),
        (
            "window hours".to_string(),
            (0..cfg.windows).map(span_h).collect::<Vec<_>>().join(" "),
        ),
    ];
    Ok(new_report(cfg, ds, vec![single, prefix], notes))
}

/// Average number of runs started per six simulated hours.
pub fn runs_per_six_hours(runs: &[&Run]) -> f64 {
    match (runs.first(), runs.last()) {
        (Some(a), Some(b)) if b.timestamp > a.timestamp => {
            (runs.len() - 1) as f64 / ((b.timestamp - a.timestamp) / 21_600.0)
        }
        _ => 0.0,
    }
}

/// Reference window against windows at increasing gaps, prefix(9) inputs.
pub fn exp_gap_sweep(cfg: &ExperimentConfig, ds: &Dataset) -> Result<Report> {
    cfg.check_dataset(ds)?;
    cfg.validate()?;
    let machine = single_machine(cfg, ds)?;
    let w = cfg.window_runs;
    let runs = machine_runs(ds, machine, 2 * w)?;
    let mut starts = Vec::new();
    let mut s = w;
    while s + w <= runs.len() {
        let gap_h = (runs[s].timestamp - runs[w].timestamp) / 3600.0;
        if let Some(max) = cfg.max_gap_hours {
            if gap_h > max {
                break;
            }
        }
        starts.push((s, gap_h));
        s += cfg.gap_step_runs;
    }
    if let Some(max) = cfg.max_gap_hours {
        let last_h = (runs[runs.len() - w].timestamp - runs[w].timestamp) / 3600.0;
        if max > last_h {
            log::warn!("gap sweep truncated at {last_h:.2} h: dataset ends before {max} h");
        }
    }
    let spec = FeatureSpec::prefix(NUM_STEPS)?;
    let cells = run_cells(&starts, |(s, _)| {
        window_cell(cfg, machine, &runs, 0, *s, &spec)
    })?;
    let rows = starts.iter().map(|(_, g)| format!("{g:.2}")).collect();
    let mut table = AccuracyTable::new("gap sweep", "gap_hours", rows, vec!["accuracy".into()]);
    for (i, cell) in cells.into_iter().enumerate() {
        table.set(i, 0, cell.test_accuracy, Some(cell.info));
    }
    let notes = vec![
        ("machine".to_string(), machine.to_string()),
        (
            "runs per 6 h".to_string(),
            format!("{:.1}", runs_per_six_hours(&runs)),
        ),
        ("window runs".to_string(), w.to_string()),
        ("step runs".to_string(), cfg.gap_step_runs.to_string()),
    ];
    Ok(new_report(cfg, ds, vec![table], notes))
}

/// Train on one time window of two machines, test on every window.
pub fn exp_robustness(cfg: &ExperimentConfig, ds: &Dataset) -> Result<Report> {
    cfg.check_dataset(ds)?;
    cfg.validate()?;
    let machines = cfg.machine_selection(ds)?;
    if machines.len() != 2 {
        return Err(Error::MachineCount {
            expected: 2,
            found: machines.len(),
        });
    }
    let w = cfg.window_runs;
    let n = cfg.windows;
    let runs: Vec<Vec<&Run>> = machines
        .iter()
        .map(|m| machine_runs(ds, m, w * n))
        .collect::<Result<_>>()?;
    let spec = FeatureSpec::prefix(NUM_STEPS)?;
    let window_sets: Vec<LabeledSet> = (0..n)
        .map(|i| {
            two_groups(
                &runs[0][i * w..(i + 1) * w],
                &runs[1][i * w..(i + 1) * w],
                &spec,
            )
        })
        .collect::<Result<_>>()?;
    let rows: Vec<usize> = (0..n).collect();
    let fitted = run_cells(&rows, |&i| {
        let seed = cell_seed(
            cfg.seed,
            &[
                "robustness".into(),
                machines[0].into(),
                machines[1].into(),
                i.into(),
            ],
        );
        fit_cell(&window_sets[i], &cfg.svm, seed, &spec)
    })?;
    let labels: Vec<String> = (1..=n).map(|i| format!("W{i}")).collect();
    let mut table = AccuracyTable::new(
        format!("{} vs {}", machines[0], machines[1]),
        "train",
        labels.clone(),
        labels,
    );
    for (i, cell) in fitted.iter().enumerate() {
        for j in 0..n {
            let acc = if i == j {
                cell.test_accuracy
            } else {
                cell.score(&window_sets[j])?
            };
            table.set(i, j, acc, Some(cell.info.clone()));
        }
    }
    let notes = vec![(
        "evaluation".to_string(),
        "diagonal cells use the held-out test part of the training window; off-diagonal cells use the whole target window".to_string(),
    )];
    Ok(new_report(cfg, ds, vec![table], notes))
}

/// Runs the configured experiment on an already loaded dataset.
pub fn run_on_dataset(cfg: &ExperimentConfig, ds: &Dataset) -> Result<Report> {
    cfg.validate()?;
    match cfg.experiment {
        ExperimentKind::Pairwise => exp_pairwise(cfg, ds),
        ExperimentKind::Multiclass => exp_multiclass(cfg, ds),
        ExperimentKind::Temporal24h => exp_temporal24h(cfg, ds),
        ExperimentKind::WindowTemporal => exp_window_temporal(cfg, ds),
        ExperimentKind::GapSweep => exp_gap_sweep(cfg, ds),
        ExperimentKind::Robustness => exp_robustness(cfg, ds),
    }
}

/// Loads `cfg.dataset` and runs the experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    let ds = load_dataset(&cfg.dataset)?;
    run_on_dataset(cfg, &ds)
}
