//! Local optimization of a new best hypothesis.
//!
//! Non-minimal samples of the current inliers are fitted, re-evaluated at an
//! inflated threshold and refined by least squares while the threshold shrinks
//! back to `delta_d`. Unlike classic LO-RANSAC every intermediate model is kept
//! with its inlier count so that it can be aggregated afterwards.

use crate::error::{Error, Result};
use crate::geometry::{dlt_fit, Homography, Match, HOMOGRAPHY_MSS};
use crate::rng::{floyd_sample, SampleStream, STREAM_LOCAL_OPT};
use crate::robust::{
    run_consensus, ConsensusObserver, ConsensusRun, Hypothesis, RobustConfig, Scorer,
};

#[derive(Debug, Clone, PartialEq)]
pub struct LoConfig {
    /// Inner (non-minimal) sample size.
    pub s_is: usize,
    /// Multiplier of `delta_d` for the first inner evaluation.
    pub m_delta: f64,
    /// Inner sample repetitions.
    pub reps: usize,
    /// Least-squares refinement rounds per repetition.
    pub ls_iters: usize,
}

impl Default for LoConfig {
    fn default() -> Self {
        Self {
            s_is: 14,
            m_delta: 4.0,
            reps: 10,
            ls_iters: 4,
        }
    }
}

impl LoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.s_is < HOMOGRAPHY_MSS {
            return Err(Error::InvalidConfig(
                "inner sample size must be at least 4".into(),
            ));
        }
        if !(self.m_delta > 1.0 && self.m_delta.is_finite()) {
            return Err(Error::InvalidConfig(
                "threshold multiplier must exceed 1".into(),
            ));
        }
        if self.reps == 0 || self.ls_iters == 0 {
            return Err(Error::InvalidConfig(
                "reps and ls_iters must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Everything a local optimization call produced.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoOutput {
    pub max_score: usize,
    pub best_model: Option<Homography>,
    pub models: Vec<Homography>,
    /// Inlier count of each model at the threshold in force when it was recorded.
    pub weights: Vec<usize>,
    /// Threshold used for each recorded weight.
    pub thresholds: Vec<f64>,
}

impl LoOutput {
    fn record(&mut self, model: Homography, weight: usize, threshold: f64) {
        self.models.push(model);
        self.weights.push(weight);
        self.thresholds.push(threshold);
    }
}

/// Runs local optimization around the inliers (indices into `matches`) of a new best hypothesis.
///
/// Returns an empty output when fewer than `2 * s_is` inliers are available.
/// Randomness is consumed in repetition order, `s_is` draws per repetition.
pub fn local_optimize(
    matches: &[Match],
    inliers: &[usize],
    delta_d: f64,
    cfg: &LoConfig,
    stream: &mut SampleStream,
) -> LoOutput {
    let k = inliers.len();
    if k < 2 * cfg.s_is {
        return LoOutput::default();
    }
    let step = (cfg.m_delta * delta_d - delta_d) / cfg.ls_iters as f64;
    let mut out = LoOutput {
        max_score: k,
        ..Default::default()
    };
    let mut scorer = Scorer::new(matches);
    let mut picks = Vec::with_capacity(cfg.s_is);
    let mut subset = Vec::with_capacity(cfg.s_is);
    let mut support = Vec::with_capacity(matches.len());

    'reps: for _ in 0..cfg.reps {
        floyd_sample(stream, k, cfg.s_is, &mut picks);
        subset.clear();
        subset.extend(picks.iter().map(|&i| matches[inliers[i]]));
        let Ok(h_sample) = dlt_fit(&subset) else {
            continue;
        };

        let wide = delta_d * cfg.m_delta;
        scorer.residuals(&h_sample);
        scorer.inliers_into(wide, &mut support);
        out.record(h_sample, support.len(), wide);
        let Ok(mut h_ls) = dlt_fit(&support) else {
            continue;
        };

        for j in 1..=cfg.ls_iters {
            let threshold = wide - j as f64 * step;
            scorer.residuals(&h_ls);
            scorer.inliers_into(threshold, &mut support);
            out.record(h_ls, support.len(), threshold);
            match dlt_fit(&support) {
                Ok(h) => h_ls = h,
                Err(_) => continue 'reps,
            }
        }

        scorer.residuals(&h_ls);
        let score = scorer.count_within(delta_d);
        out.record(h_ls, score, delta_d);
        if score > out.max_score {
            out.max_score = score;
            out.best_model = Some(h_ls);
        }
    }
    out
}

/// Result of LO-RANSAC.
#[derive(Debug, Clone, PartialEq)]
pub struct LoRansacEstimate {
    pub model: Homography,
    /// Inliers of `model` at `delta_d`.
    pub inliers: usize,
    pub run: ConsensusRun,
    pub lo_calls: usize,
}

struct LoRansacObserver<'a> {
    matches: &'a [Match],
    delta_d: f64,
    lo: &'a LoConfig,
    stream: SampleStream,
    best: Option<(Homography, usize)>,
    calls: usize,
}

impl ConsensusObserver for LoRansacObserver<'_> {
    fn on_new_best(&mut self, _iteration: usize, best: &Hypothesis) -> Option<usize> {
        self.calls += 1;
        let out = local_optimize(
            self.matches,
            &best.inlier_indices(),
            self.delta_d,
            self.lo,
            &mut self.stream,
        );
        let model = out.best_model?;
        if self.best.is_none_or(|(_, s)| out.max_score > s) {
            self.best = Some((model, out.max_score));
        }
        Some(out.max_score)
    }
}

/// RANSAC with local optimization on every new best hypothesis.
///
/// Returns the locally optimized model when it gathers more inliers than the
/// best minimal-sample hypothesis, and that hypothesis otherwise.
pub fn lo_ransac_estimate(
    matches: &[Match],
    cfg: &RobustConfig,
    lo: &LoConfig,
) -> Result<LoRansacEstimate> {
    lo.validate()?;
    let mut obs = LoRansacObserver {
        matches,
        delta_d: cfg.delta_d,
        lo,
        stream: SampleStream::new(cfg.seed, STREAM_LOCAL_OPT),
        best: None,
        calls: 0,
    };
    let run = run_consensus(matches, cfg, &mut obs)?;
    let (model, inliers) = match obs.best {
        Some((m, s)) if s > run.best.inlier_count => (m, s),
        _ => (run.best.model, run.best.inlier_count),
    };
    Ok(LoRansacEstimate {
        model,
        inliers,
        run,
        lo_calls: obs.calls,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{symmetric_transfer_error, Point2};

    fn scene(n: usize) -> (Homography, Vec<Match>) {
        let h = Homography::from_row_major(&[1.02, 0.05, 12.0, -0.03, 0.97, -8.0, 1e-4, 5e-5, 1.0])
            .unwrap();
        let mut s = SampleStream::new(11, 0);
        let m = (0..n)
            .map(|_| {
                let p = Point2::new(s.uniform(0.0, 640.0), s.uniform(0.0, 480.0));
                Match::new(p, h.project(p).unwrap())
            })
            .collect();
        (h, m)
    }

    #[test]
    fn too_few_inliers_returns_empty() {
        let (_, m) = scene(40);
        let cfg = LoConfig::default();
        let inliers: Vec<usize> = (0..2 * cfg.s_is - 1).collect();
        let out = local_optimize(&m, &inliers, 10.0, &cfg, &mut SampleStream::new(0, 2));
        assert_eq!(out, LoOutput::default());
        assert_eq!(out.max_score, 0);
    }

    #[test]
    fn records_every_model() {
        let (_, m) = scene(60);
        let cfg = LoConfig {
            reps: 3,
            ls_iters: 4,
            ..Default::default()
        };
        let inliers: Vec<usize> = (0..60).collect();
        let out = local_optimize(&m, &inliers, 10.0, &cfg, &mut SampleStream::new(0, 2));
        assert_eq!(out.models.len(), 18);
        assert_eq!(out.weights.len(), 18);
    }

    #[test]
    fn noiseless_input_is_recovered() {
        let (_, m) = scene(100);
        let inliers: Vec<usize> = (0..100).collect();
        let out = local_optimize(
            &m,
            &inliers,
            5.0,
            &LoConfig::default(),
            &mut SampleStream::new(4, 2),
        );
        // Every fit is exact, so no model can beat the K = 100 starting score.
        assert_eq!(out.max_score, 100);
        assert!(out.best_model.is_none());
        assert!(out.weights.iter().all(|&w| w == 100));
        for h in &out.models {
            for mm in &m {
                assert!(symmetric_transfer_error(h, mm).unwrap() < 1e-9);
            }
        }
    }

    #[test]
    fn thresholds_shrink_to_delta() {
        let (_, m) = scene(50);
        let cfg = LoConfig {
            reps: 2,
            ..Default::default()
        };
        let inliers: Vec<usize> = (0..50).collect();
        let out = local_optimize(&m, &inliers, 3.0, &cfg, &mut SampleStream::new(1, 2));
        let per_rep = cfg.ls_iters + 2;
        for rep in out.thresholds.chunks(per_rep) {
            assert_eq!(rep[0], 12.0);
            for w in rep[1..=cfg.ls_iters].windows(2) {
                assert!(w[1] < w[0]);
            }
            assert!((rep[cfg.ls_iters] - 3.0).abs() < 1e-12);
            assert_eq!(rep[per_rep - 1], 3.0);
        }
    }

    #[test]
    fn config_validation() {
        assert!(LoConfig::default().validate().is_ok());
        assert!(LoConfig {
            s_is: 3,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(LoConfig {
            m_delta: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(LoConfig {
            reps: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
