use crate::error::Result;
use crate::geometry::{dlt_fit, Homography, Match, Point2};
use crate::local_opt::{local_optimize, LoConfig};
use crate::rng::{SampleStream, STREAM_LOCAL_OPT};
use crate::robust::{run_consensus, ConsensusObserver, ConsensusRun, Hypothesis, RobustConfig};

use super::{AggConfig, BasisProjector, EstimateCloud, SourceBasis};

/// Output of the aggregating estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedEstimate {
    pub model: Homography,
    /// The underlying consensus loop; `run.best` is the plain RANSAC answer.
    pub run: ConsensusRun,
    pub cloud: EstimateCloud,
    /// Aggregated basis destinations, when the cloud was non-empty.
    pub aggregated: Option<Vec<Point2>>,
    /// Set when the estimator returned the RANSAC best hypothesis instead of an aggregate.
    pub fallback: bool,
    pub lo_calls: usize,
}

/// Aggregates `cloud` and fits the homography through the basis and the aggregated points.
pub fn fit_from_cloud(
    basis: &SourceBasis,
    cloud: &EstimateCloud,
    agg: &AggConfig,
) -> Result<(Homography, Vec<Point2>)> {
    let targets = cloud.aggregate(agg)?;
    let pairs: Vec<Match> = basis
        .points()
        .iter()
        .zip(&targets)
        .map(|(s, d)| Match::new(*s, *d))
        .collect();
    Ok((dlt_fit(&pairs)?, targets))
}

fn finish(
    basis: &SourceBasis,
    agg: &AggConfig,
    run: ConsensusRun,
    cloud: EstimateCloud,
    lo_calls: usize,
) -> AggregatedEstimate {
    if !cloud.is_empty() {
        if let Ok((model, targets)) = fit_from_cloud(basis, &cloud, agg) {
            return AggregatedEstimate {
                model,
                run,
                cloud,
                aggregated: Some(targets),
                fallback: false,
                lo_calls,
            };
        }
    }
    AggregatedEstimate {
        model: run.best.model,
        run,
        cloud,
        aggregated: None,
        fallback: true,
        lo_calls,
    }
}

struct EveryHypothesis {
    projector: BasisProjector,
    cloud: EstimateCloud,
    min_inliers: usize,
}

impl ConsensusObserver for EveryHypothesis {
    fn on_hypothesis(
        &mut self,
        _iteration: usize,
        model: &Homography,
        inliers: usize,
        _score: f64,
    ) {
        if inliers > self.min_inliers {
            if let Some(points) = self.projector.project(model) {
                self.cloud.push(points, inliers as f64);
            }
        }
    }
}

/// RANSAAC: every hypothesis with more than `mss` inliers votes for the basis
/// destinations with its inlier count as weight.
///
/// `cfg.delta_d` is used as given; callers deriving it from the noise level
/// usually double the RANSAC threshold.
pub fn ransaac_estimate(
    matches: &[Match],
    cfg: &RobustConfig,
    agg: &AggConfig,
    basis: &SourceBasis,
) -> Result<AggregatedEstimate> {
    agg.validate()?;
    let mut obs = EveryHypothesis {
        projector: BasisProjector::new(basis, agg.sanity_margin),
        cloud: EstimateCloud::new(basis.len()),
        min_inliers: cfg.mss,
    };
    let run = run_consensus(matches, cfg, &mut obs)?;
    Ok(finish(basis, agg, run, obs.cloud, 0))
}

struct LocallyOptimized<'a> {
    matches: &'a [Match],
    delta_d: f64,
    lo: &'a LoConfig,
    stream: SampleStream,
    projector: BasisProjector,
    cloud: EstimateCloud,
    calls: usize,
}

impl ConsensusObserver for LocallyOptimized<'_> {
    fn on_new_best(&mut self, _iteration: usize, best: &Hypothesis) -> Option<usize> {
        self.calls += 1;
        let out = local_optimize(
            self.matches,
            &best.inlier_indices(),
            self.delta_d,
            self.lo,
            &mut self.stream,
        );
        for (model, &weight) in out.models.iter().zip(&out.weights) {
            if let Some(points) = self.projector.project(model) {
                self.cloud.push(points, weight as f64);
            }
        }
        (out.max_score > 0).then_some(out.max_score)
    }
}

/// LO-RANSAAC: only the models produced by local optimization are aggregated.
pub fn lo_ransaac_estimate(
    matches: &[Match],
    cfg: &RobustConfig,
    lo: &LoConfig,
    agg: &AggConfig,
    basis: &SourceBasis,
) -> Result<AggregatedEstimate> {
    agg.validate()?;
    lo.validate()?;
    let mut obs = LocallyOptimized {
        matches,
        delta_d: cfg.delta_d,
        lo,
        stream: SampleStream::new(cfg.seed, STREAM_LOCAL_OPT),
        projector: BasisProjector::new(basis, agg.sanity_margin),
        cloud: EstimateCloud::new(basis.len()),
        calls: 0,
    };
    let run = run_consensus(matches, cfg, &mut obs)?;
    let calls = obs.calls;
    Ok(finish(basis, agg, run, obs.cloud, calls))
}
