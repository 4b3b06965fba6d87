//! Features from runs, soft-margin kernel SVMs and validation-driven model
//! selection.

mod features;
mod kernel;
mod ovr;
mod select;
mod smo;

pub use features::{
    build_features, run_features, FeatureSpec, FeatureVector, LabeledSet, Standardizer,
};
pub use kernel::{
    default_gamma, default_poly_gamma, kernel_eval, DotCache, Gram, KernelKind, KernelSpec,
};
pub use ovr::{train_ovr, train_ovr_with_gram, Classifier, OvrModel};
pub use select::{
    accuracy, kernel_specs, select_model, split, split_indices, SelectionReport, SelectionRow,
    SolverSettings, SplitIndices, DEFAULT_C_GRID,
};
pub use smo::{
    dual_objective, kkt_violation, model_kkt_violation, predict, solve_dual, solve_dual_with,
    train_binary, train_binary_with_gram, DualSolution, PairSelection, SvmModel, DEFAULT_MAX_ITER,
    DEFAULT_TOL,
};
