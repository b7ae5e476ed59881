//! Synthetic ground truth, the mean inlier error and the Monte-Carlo runner.

mod experiment;
mod metric;
mod presets;
mod scenario;
mod trace;

pub use experiment::{
    mean_std, randomized_scenario, run_experiment, run_trial, trial_data, trial_seed, Execution,
    Experiment, ExperimentReport, TrialRecord,
};
pub use metric::{ground_truth_pairs, mean_inlier_error};
pub use presets::{
    preset, reference_extents, reference_homography, reference_scenario, PaperTable, Preset,
};
pub use scenario::{
    centered_homography, generate_scenario, random_homography, scenario_inliers,
    HomographyDifficulty, Scenario, SyntheticData,
};
pub use trace::{checkpoints, run_iteration_trace, trace_trial, IterationTrace, TraceConfig};
