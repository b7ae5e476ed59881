//! Error of the running estimate after every iteration, for RANSAC and for
//! RANSAAC with weighted-mean aggregation of the cloud gathered so far.

use crate::aggregation::{predefined_source_points, BasisProjector, ModelKind};
use crate::error::{Error, Result};
use crate::geometry::{dlt_fit, Homography, Match, Point2};
use crate::methods::{Method, MethodConfig};
use crate::rng::{SampleStream, STREAM_SCENARIO};
use crate::robust::{run_consensus, ConsensusObserver, Hypothesis};

use super::experiment::{map_indexed, trial_seed, Execution};
use super::metric::mean_inlier_error;
use super::scenario::{generate_scenario, Scenario};

/// Every iteration up to 1000, then every 50th, and always the last one.
pub fn checkpoints(iterations: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (1..=iterations.min(1000)).collect();
    out.extend((1050..=iterations).step_by(50));
    if out.last() != Some(&iterations) && iterations > 0 {
        out.push(iterations);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceConfig {
    pub scenario: Scenario,
    pub iterations: usize,
    pub trials: usize,
    pub master_seed: u64,
    /// Weight exponent of the RANSAAC weighted mean.
    pub p: f64,
}

/// Per-checkpoint errors averaged over trials.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub checkpoints: Vec<usize>,
    /// `(method id, mean error per checkpoint)`; NaN where no trial had a model yet.
    pub curves: Vec<(String, Vec<f64>)>,
}

impl IterationTrace {
    pub fn curve(&self, method: &str) -> Option<&[f64]> {
        self.curves
            .iter()
            .find(|(m, _)| m == method)
            .map(|(_, c)| c.as_slice())
    }

    /// First checkpoint from which `lower` stays strictly below `upper` through `until`.
    pub fn crossing(&self, lower: &str, upper: &str, until: usize) -> Option<usize> {
        let (a, b) = (self.curve(lower)?, self.curve(upper)?);
        let mut first = None;
        for ((&it, &x), &y) in self.checkpoints.iter().zip(a).zip(b) {
            if it > until {
                break;
            }
            if x < y {
                first.get_or_insert(it);
            } else {
                first = None;
            }
        }
        first
    }
}

/// Projector, p, per basis point sums of `w^p x` and `w^p y`, and the shared `w^p` sum.
type RunningMean = (BasisProjector, f64, Vec<(f64, f64)>, f64);

struct Running<'a> {
    clean: &'a [Match],
    checkpoints: &'a [usize],
    next: usize,
    best: Option<Homography>,
    wmean: Option<RunningMean>,
    basis: Vec<Point2>,
    min_inliers: usize,
    errors: Vec<f64>,
}

impl Running<'_> {
    fn current(&self) -> Option<Homography> {
        if let Some((_, _, sums, total)) = &self.wmean {
            if *total > 0.0 {
                let pairs: Vec<Match> = self
                    .basis
                    .iter()
                    .zip(sums)
                    .map(|(s, &(x, y))| Match::new(*s, Point2::new(x / total, y / total)))
                    .collect();
                if let Ok(h) = dlt_fit(&pairs) {
                    return Some(h);
                }
            }
        }
        self.best
    }
}

impl ConsensusObserver for Running<'_> {
    fn on_hypothesis(
        &mut self,
        _iteration: usize,
        model: &Homography,
        inliers: usize,
        _score: f64,
    ) {
        if inliers <= self.min_inliers {
            return;
        }
        if let Some((proj, p, sums, total)) = &mut self.wmean {
            if let Some(points) = proj.project(model) {
                let w = (inliers as f64).powf(*p);
                for (s, q) in sums.iter_mut().zip(points) {
                    s.0 += w * q.x;
                    s.1 += w * q.y;
                }
                *total += w;
            }
        }
    }

    fn on_new_best(&mut self, _iteration: usize, best: &Hypothesis) -> Option<usize> {
        self.best = Some(best.model);
        None
    }

    fn on_iteration_end(&mut self, iteration: usize) {
        if self.checkpoints.get(self.next) != Some(&iteration) {
            return;
        }
        self.next += 1;
        let e = self
            .current()
            .and_then(|h| mean_inlier_error(&h, self.clean).ok())
            .unwrap_or(f64::NAN);
        self.errors.push(e);
    }
}

/// Errors at every checkpoint of one trial: `[ransac, ransaac-wmean]`.
pub fn trace_trial(cfg: &TraceConfig, seed: u64, checkpoints: &[usize]) -> Result<[Vec<f64>; 2]> {
    let s = &cfg.scenario;
    let data = generate_scenario(s, &mut SampleStream::new(seed, STREAM_SCENARIO))?;
    let basis = predefined_source_points(&s.extents_src, ModelKind::Homography);
    let run = |method: Method| -> Result<Vec<f64>> {
        let mc = MethodConfig::new(method, s.sigma, cfg.iterations).with_p(cfg.p);
        let rc = mc.robust_config(seed);
        let wmean = mc.agg_config().map(|agg| {
            (
                BasisProjector::new(&basis, agg.sanity_margin),
                agg.p,
                vec![(0.0, 0.0); basis.len()],
                0.0,
            )
        });
        let mut obs = Running {
            clean: &data.clean_inliers,
            checkpoints,
            next: 0,
            best: None,
            wmean,
            basis: basis.points().to_vec(),
            min_inliers: rc.mss,
            errors: Vec::with_capacity(checkpoints.len()),
        };
        match run_consensus(&data.matches, &rc, &mut obs) {
            Ok(_) | Err(Error::NoValidHypothesis) => {}
            Err(e) => return Err(e),
        }
        obs.errors.resize(checkpoints.len(), f64::NAN);
        Ok(obs.errors)
    };
    Ok([
        run(Method::Ransac)?,
        run(Method::Ransaac(
            crate::aggregation::AggregationMethod::WeightedMean,
        ))?,
    ])
}

/// Averages [`trace_trial`] over `cfg.trials` trials, skipping missing values.
pub fn run_iteration_trace(cfg: &TraceConfig, exec: Execution) -> Result<IterationTrace> {
    if cfg.trials == 0 || cfg.iterations == 0 {
        return Err(Error::InvalidConfig(
            "trials and iterations must be positive".into(),
        ));
    }
    cfg.scenario.validate()?;
    let cps = checkpoints(cfg.iterations);
    let per_trial = map_indexed(cfg.trials, exec, |t| {
        trace_trial(cfg, trial_seed(cfg.master_seed, 0, t), &cps)
    })?;
    let mut curves = Vec::new();
    for (k, id) in ["ransac", "ransaac-wmean"].iter().enumerate() {
        let mut mean = Vec::with_capacity(cps.len());
        for i in 0..cps.len() {
            let vals: Vec<f64> = per_trial
                .iter()
                .filter_map(|r| r.as_ref().ok())
                .map(|r| r[k][i])
                .filter(|v| v.is_finite())
                .collect();
            mean.push(if vals.is_empty() {
                f64::NAN
            } else {
                vals.iter().sum::<f64>() / vals.len() as f64
            });
        }
        curves.push((id.to_string(), mean));
    }
    Ok(IterationTrace {
        checkpoints: cps,
        curves,
    })
}
