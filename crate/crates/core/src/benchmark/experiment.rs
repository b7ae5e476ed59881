use std::time::Instant;

use crate::error::{Error, Result};
use crate::methods::{estimate, MethodConfig};
use crate::rng::{derive_seed, SampleStream, STREAM_GROUND_TRUTH, STREAM_SCENARIO};

use super::metric::mean_inlier_error;
use super::scenario::{
    generate_scenario, random_homography, HomographyDifficulty, Scenario, SyntheticData,
};

/// A grid of scenarios crossed with a list of methods.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    /// Scenario ids are positions in this list.
    pub scenarios: Vec<Scenario>,
    /// Thresholds follow each scenario's noise level: a method's `sigma` is
    /// replaced by the scenario's unless `delta_d` is set.
    pub methods: Vec<MethodConfig>,
    pub trials: usize,
    pub master_seed: u64,
    /// When set, every trial draws its own ground truth and inlier set
    /// instead of using the scenario's.
    pub random_gt: Option<HomographyDifficulty>,
}

impl Experiment {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig(
                "at least one trial is required".into(),
            ));
        }
        if self.scenarios.is_empty() || self.methods.is_empty() {
            return Err(Error::InvalidConfig(
                "an experiment needs scenarios and methods".into(),
            ));
        }
        self.scenarios.iter().try_for_each(Scenario::validate)?;
        self.methods.iter().try_for_each(MethodConfig::validate)
    }
}

/// How trials are scheduled. Results do not depend on the choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Trials spread over the global rayon pool. Runs sequentially when the
    /// `parallel` feature is off, as does `ParallelWith`.
    #[default]
    Parallel,
    /// Trials spread over a dedicated pool of this many workers.
    ParallelWith(usize),
}

/// One method on one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    /// `None` when the estimator or the error evaluation failed.
    pub error: Option<f64>,
    pub iterations: usize,
    pub runtime_s: f64,
}

/// Statistics of one (scenario, method) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub scenario_id: usize,
    pub sigma: f64,
    pub n_inliers: usize,
    pub outlier_ratio: f64,
    pub method: String,
    /// Configured iteration budget.
    pub iterations: usize,
    pub trials: usize,
    /// Mean over successful trials; NaN when there is none.
    pub mean_error: f64,
    /// Sample standard deviation over successful trials; 0 for a single one.
    pub std_error: f64,
    pub mean_runtime_s: f64,
    pub failures: usize,
    pub records: Vec<TrialRecord>,
}

impl ExperimentReport {
    fn new(scenario_id: usize, s: &Scenario, m: &MethodConfig, records: Vec<TrialRecord>) -> Self {
        let errors: Vec<f64> = records.iter().filter_map(|r| r.error).collect();
        let (mean_error, std_error) = mean_std(&errors);
        let mean_runtime_s =
            records.iter().map(|r| r.runtime_s).sum::<f64>() / records.len() as f64;
        Self {
            scenario_id,
            sigma: s.sigma,
            n_inliers: s.n_inliers,
            outlier_ratio: s.outlier_ratio,
            method: m.label(),
            iterations: m.iterations,
            trials: records.len(),
            mean_error,
            std_error,
            mean_runtime_s,
            failures: records.len() - errors.len(),
            records,
        }
    }

    pub fn mean_iterations_used(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.iterations as f64)
            .sum::<f64>()
            / self.records.len() as f64
    }
}

/// Mean and sample standard deviation; `(NaN, NaN)` for no values.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Seed of one trial; it drives both the trial's data and every method's samples.
pub fn trial_seed(master: u64, scenario_id: usize, trial: usize) -> u64 {
    derive_seed(master, &[scenario_id as u64, trial as u64])
}

/// `scenario` with a ground truth and inlier set of its own for this trial.
pub fn randomized_scenario(
    scenario: &Scenario,
    d: &HomographyDifficulty,
    seed: u64,
) -> Result<Scenario> {
    let gt = random_homography(
        &scenario.extents_src,
        &mut SampleStream::new(seed, STREAM_GROUND_TRUTH),
        d,
    )?;
    Ok(Scenario {
        gt,
        seed,
        ..scenario.clone()
    })
}

/// The scenario and data of one trial, exactly as [`run_experiment`] draws them.
pub fn trial_data(
    scenario: &Scenario,
    random_gt: Option<&HomographyDifficulty>,
    seed: u64,
) -> Result<(Scenario, SyntheticData)> {
    let s = match random_gt {
        Some(d) => randomized_scenario(scenario, d, seed)?,
        None => scenario.clone(),
    };
    let data = generate_scenario(&s, &mut SampleStream::new(seed, STREAM_SCENARIO))?;
    Ok((s, data))
}

/// Runs every method on one trial.
///
/// All methods get the same seed and therefore the same minimal samples.
/// Each method's `sigma` is taken from the scenario.
pub fn run_trial(
    scenario: &Scenario,
    data: &SyntheticData,
    methods: &[MethodConfig],
    trial: usize,
    seed: u64,
) -> Vec<TrialRecord> {
    methods
        .iter()
        .map(|m| {
            let m = MethodConfig {
                sigma: scenario.sigma,
                ..m.clone()
            };
            let start = Instant::now();
            let est = estimate(
                &data.matches,
                &m,
                seed,
                &scenario.extents_src,
                Some(&data.inlier_indices),
            );
            let runtime_s = start.elapsed().as_secs_f64();
            match est {
                Ok(e) => TrialRecord {
                    trial,
                    error: mean_inlier_error(&e.model, &data.clean_inliers).ok(),
                    iterations: e.iterations,
                    runtime_s,
                },
                Err(_) => TrialRecord {
                    trial,
                    error: None,
                    iterations: 0,
                    runtime_s,
                },
            }
        })
        .collect()
}

fn failed_trial(n_methods: usize, trial: usize) -> Vec<TrialRecord> {
    vec![
        TrialRecord {
            trial,
            error: None,
            iterations: 0,
            runtime_s: 0.0
        };
        n_methods
    ]
}

/// Maps `f` over `0..n` under `exec`, keeping index order.
pub(crate) fn map_indexed<T, F>(n: usize, exec: Execution, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        match exec {
            Execution::Sequential => Ok((0..n).map(f).collect()),
            Execution::Parallel => Ok((0..n).into_par_iter().map(f).collect()),
            Execution::ParallelWith(workers) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
                Ok(pool.install(|| (0..n).into_par_iter().map(f).collect()))
            }
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = exec;
        Ok((0..n).map(f).collect())
    }
}

/// Runs the whole grid. Reports come out scenario-major, in method order.
pub fn run_experiment(exp: &Experiment, exec: Execution) -> Result<Vec<ExperimentReport>> {
    exp.validate()?;
    let t = exp.trials;
    let per_unit = map_indexed(exp.scenarios.len() * t, exec, |u| {
        let (sid, trial) = (u / t, u % t);
        let seed = trial_seed(exp.master_seed, sid, trial);
        match trial_data(&exp.scenarios[sid], exp.random_gt.as_ref(), seed) {
            Ok((s, data)) => run_trial(&s, &data, &exp.methods, trial, seed),
            Err(_) => failed_trial(exp.methods.len(), trial),
        }
    })?;
    let mut reports = Vec::with_capacity(exp.scenarios.len() * exp.methods.len());
    for (sid, scenario) in exp.scenarios.iter().enumerate() {
        let units = &per_unit[sid * t..(sid + 1) * t];
        for (mi, method) in exp.methods.iter().enumerate() {
            let records = units.iter().map(|u| u[mi]).collect();
            reports.push(ExperimentReport::new(sid, scenario, method, records));
        }
    }
    Ok(reports)
}
