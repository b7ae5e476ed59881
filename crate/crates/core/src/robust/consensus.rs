use crate::error::{Error, Result};
use crate::geometry::{dlt_fit, Homography, Match, TransferPair};
use crate::rng::{floyd_sample, SampleStream, STREAM_HYPOTHESES};

use super::{required_iterations, RobustConfig, ScoringVariant};

/// A scored candidate model.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub model: Homography,
    /// Inlier count for binary scoring; truncated cost (MSAC) or median residual (LMedS) otherwise.
    pub score: f64,
    /// `inlier_mask[i]` is set when match `i` has residual `<= delta_d`.
    pub inlier_mask: Vec<bool>,
    pub inlier_count: usize,
}

impl Hypothesis {
    pub fn inlier_indices(&self) -> Vec<usize> {
        self.inlier_mask
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    pub fn inlier_matches(&self, matches: &[Match]) -> Vec<Match> {
        matches
            .iter()
            .zip(&self.inlier_mask)
            .filter_map(|(m, &b)| b.then_some(*m))
            .collect()
    }
}

/// One entry per improvement of the best-so-far hypothesis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub iteration: usize,
    pub score: f64,
    pub inliers: usize,
    pub model: Homography,
}

/// Result of a consensus loop.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusRun {
    pub best: Hypothesis,
    pub trace: Vec<TracePoint>,
    /// Iterations actually performed, degenerate samples included.
    pub iterations: usize,
}

/// Hooks into [`run_consensus`]. All methods default to no-ops.
pub trait ConsensusObserver {
    /// Called for every non-degenerate hypothesis after scoring.
    fn on_hypothesis(
        &mut self,
        _iteration: usize,
        _model: &Homography,
        _inliers: usize,
        _score: f64,
    ) {
    }

    /// Called whenever `best` becomes the best-so-far hypothesis. A returned
    /// inlier count (e.g. from local optimization) feeds adaptive termination
    /// when it exceeds the hypothesis' own.
    fn on_new_best(&mut self, _iteration: usize, _best: &Hypothesis) -> Option<usize> {
        None
    }

    /// Called at the end of every iteration, degenerate ones included.
    fn on_iteration_end(&mut self, _iteration: usize) {}
}

impl ConsensusObserver for () {}

/// Residual evaluation with reusable buffers.
pub(crate) struct Scorer<'a> {
    matches: &'a [Match],
    residuals: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> Scorer<'a> {
    pub(crate) fn new(matches: &'a [Match]) -> Self {
        Self {
            matches,
            residuals: Vec::with_capacity(matches.len()),
            scratch: Vec::new(),
        }
    }

    /// Symmetric transfer errors of every match; `+inf` for horizon-degenerate ones.
    pub(crate) fn residuals(&mut self, h: &Homography) -> &[f64] {
        self.residuals.clear();
        match TransferPair::new(h) {
            Ok(pair) => self
                .residuals
                .extend(self.matches.iter().map(|m| pair.symmetric_error(m))),
            Err(_) => self.residuals.resize(self.matches.len(), f64::INFINITY),
        }
        &self.residuals
    }

    /// Scores `h`; returns `(score, inlier count)`.
    pub(crate) fn score(
        &mut self,
        h: &Homography,
        delta: f64,
        variant: ScoringVariant,
    ) -> (f64, usize) {
        self.residuals(h);
        let inliers = self.count_within(delta);
        let score = match variant {
            ScoringVariant::RansacBinary => inliers as f64,
            ScoringVariant::Msac => self.residuals.iter().map(|&e| e.min(delta)).sum(),
            ScoringVariant::LMedS => {
                self.scratch.clear();
                self.scratch.extend_from_slice(&self.residuals);
                let mid = (self.scratch.len() - 1) / 2;
                *self.scratch.select_nth_unstable_by(mid, f64::total_cmp).1
            }
        };
        (score, inliers)
    }

    pub(crate) fn count_within(&self, delta: f64) -> usize {
        self.residuals.iter().filter(|&&e| e <= delta).count()
    }

    pub(crate) fn mask(&self, delta: f64) -> Vec<bool> {
        self.residuals.iter().map(|&e| e <= delta).collect()
    }

    pub(crate) fn inliers_into(&self, delta: f64, out: &mut Vec<Match>) {
        out.clear();
        out.extend(
            self.matches
                .iter()
                .zip(&self.residuals)
                .filter_map(|(m, &e)| (e <= delta).then_some(*m)),
        );
    }
}

/// Scores `h` against every match under the configured variant.
pub fn score_hypothesis(h: &Homography, matches: &[Match], cfg: &RobustConfig) -> Hypothesis {
    let mut scorer = Scorer::new(matches);
    let (score, inlier_count) = scorer.score(h, cfg.delta_d, cfg.scoring);
    Hypothesis {
        model: *h,
        score,
        inlier_mask: scorer.mask(cfg.delta_d),
        inlier_count,
    }
}

/// Draws `mss` distinct indices uniformly from `0..dataset_size`.
pub fn draw_minimal_sample(
    stream: &mut SampleStream,
    dataset_size: usize,
    mss: usize,
) -> Result<Vec<usize>> {
    if dataset_size < mss {
        return Err(Error::InsufficientData {
            needed: mss,
            got: dataset_size,
        });
    }
    let mut out = Vec::with_capacity(mss);
    floyd_sample(stream, dataset_size, mss, &mut out);
    Ok(out)
}

/// The sample-fit-score loop shared by every estimator.
///
/// Minimal samples come from the [`STREAM_HYPOTHESES`] substream of `cfg.seed`.
/// Degenerate samples are skipped but still consume an iteration.
pub fn run_consensus<O>(
    matches: &[Match],
    cfg: &RobustConfig,
    observer: &mut O,
) -> Result<ConsensusRun>
where
    O: ConsensusObserver + ?Sized,
{
    cfg.validate()?;
    let n = matches.len();
    if n < cfg.mss {
        return Err(Error::InsufficientData {
            needed: cfg.mss,
            got: n,
        });
    }
    let mut stream = SampleStream::new(cfg.seed, STREAM_HYPOTHESES);
    let mut scorer = Scorer::new(matches);
    let mut indices = Vec::with_capacity(cfg.mss);
    let mut sample = Vec::with_capacity(cfg.mss);
    let mut best: Option<Hypothesis> = None;
    let mut trace = Vec::new();
    let mut bound = cfg.iterations;
    let mut it = 0;

    while it < bound {
        it += 1;
        floyd_sample(&mut stream, n, cfg.mss, &mut indices);
        sample.clear();
        sample.extend(indices.iter().map(|&i| matches[i]));
        if let Ok(model) = dlt_fit(&sample) {
            let (score, inliers) = scorer.score(&model, cfg.delta_d, cfg.scoring);
            observer.on_hypothesis(it, &model, inliers, score);
            let improved = best
                .as_ref()
                .is_none_or(|b| cfg.scoring.is_better(score, b.score));
            if improved {
                let hyp = Hypothesis {
                    model,
                    score,
                    inlier_mask: scorer.mask(cfg.delta_d),
                    inlier_count: inliers,
                };
                trace.push(TracePoint {
                    iteration: it,
                    score,
                    inliers,
                    model,
                });
                let support = observer
                    .on_new_best(it, &hyp)
                    .map_or(inliers, |s| s.max(inliers));
                best = Some(hyp);
                if cfg.adaptive {
                    let k = required_iterations(
                        cfg.eta0,
                        support as f64 / n as f64,
                        cfg.mss,
                        cfg.iterations,
                    );
                    let scaled = (k as f64 * cfg.adaptive_multiplier).ceil();
                    bound = if scaled >= cfg.iterations as f64 {
                        cfg.iterations
                    } else {
                        scaled as usize
                    };
                }
            }
        }
        observer.on_iteration_end(it);
    }

    let best = best.ok_or(Error::NoValidHypothesis)?;
    Ok(ConsensusRun {
        best,
        trace,
        iterations: it,
    })
}

/// Plain RANSAC (or MSAC / LMedS, depending on `cfg.scoring`).
pub fn ransac_estimate(matches: &[Match], cfg: &RobustConfig) -> Result<ConsensusRun> {
    run_consensus(matches, cfg, &mut ())
}

/// Least-squares refit on the inliers of `h` (the last step of RANSAC+M).
pub fn refit_on_inliers(matches: &[Match], h: &Hypothesis) -> Result<Homography> {
    let inliers = h.inlier_matches(matches);
    if inliers.len() < crate::geometry::HOMOGRAPHY_MSS {
        return Err(Error::InsufficientData {
            needed: crate::geometry::HOMOGRAPHY_MSS,
            got: inliers.len(),
        });
    }
    dlt_fit(&inliers)
}
