//! Minimal-sample hypothesis generation and consensus scoring.
//!
//! The consensus loop in [`run_consensus`] is shared by every estimator in the
//! crate. Plain RANSAC, RANSAC+M, MSAC and LMedS are thin wrappers around it;
//! the aggregating estimators plug in through [`ConsensusObserver`].

mod chi2;
mod consensus;

pub use chi2::{chi2_inverse_cdf, chi2_threshold, ChiSquareDof};
pub(crate) use consensus::Scorer;
pub use consensus::{
    draw_minimal_sample, ransac_estimate, refit_on_inliers, run_consensus, score_hypothesis,
    ConsensusObserver, ConsensusRun, Hypothesis, TracePoint,
};

use crate::error::{Error, Result};
use crate::geometry::HOMOGRAPHY_MSS;

/// Confidence level used to derive the inlier threshold from the noise level.
pub const DEFAULT_ALPHA: f64 = 0.99;

/// How a hypothesis is scored against the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScoringVariant {
    /// Inlier count, higher is better.
    #[default]
    RansacBinary,
    /// Truncated quadratic `Σ min(e, δ)`, lower is better.
    Msac,
    /// Lower median of the residuals, lower is better.
    LMedS,
}

impl ScoringVariant {
    /// Whether `candidate` strictly improves on `incumbent`.
    pub fn is_better(&self, candidate: f64, incumbent: f64) -> bool {
        match self {
            ScoringVariant::RansacBinary => candidate > incumbent,
            ScoringVariant::Msac | ScoringVariant::LMedS => candidate < incumbent,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustConfig {
    /// Iteration budget (the cap when `adaptive` is set).
    pub iterations: usize,
    /// Inlier threshold on the symmetric transfer error, in squared pixels.
    pub delta_d: f64,
    /// Confidence of drawing at least one all-inlier sample.
    pub eta0: f64,
    pub adaptive: bool,
    /// Factor applied to the adaptive bound before capping.
    pub adaptive_multiplier: f64,
    pub mss: usize,
    pub seed: u64,
    pub scoring: ScoringVariant,
}

impl Default for RobustConfig {
    fn default() -> Self {
        Self {
            iterations: 1000,
            delta_d: chi2_threshold(1.0, DEFAULT_ALPHA, ChiSquareDof::Four),
            eta0: 0.99,
            adaptive: false,
            adaptive_multiplier: 1.0,
            mss: HOMOGRAPHY_MSS,
            seed: 0,
            scoring: ScoringVariant::RansacBinary,
        }
    }
}

impl RobustConfig {
    /// Default configuration with the threshold derived from the noise level.
    pub fn for_sigma(sigma: f64) -> Self {
        Self {
            delta_d: chi2_threshold(sigma, DEFAULT_ALPHA, ChiSquareDof::Four),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.iterations == 0 {
            return bad("iterations must be at least 1");
        }
        if !(self.delta_d > 0.0 && self.delta_d.is_finite()) {
            return bad("delta_d must be positive");
        }
        if !(self.eta0 > 0.0 && self.eta0 < 1.0) {
            return bad("eta0 must lie in (0, 1)");
        }
        if !(self.adaptive_multiplier >= 1.0 && self.adaptive_multiplier.is_finite()) {
            return bad("adaptive multiplier must be at least 1");
        }
        if self.mss < HOMOGRAPHY_MSS {
            return bad("sample size must be at least 4 for a homography");
        }
        Ok(())
    }
}

/// Number of samples needed to draw one outlier-free sample with confidence
/// `eta0` from data with inlier ratio `epsilon`, clamped to `[1, cap]`.
pub fn required_iterations(eta0: f64, epsilon: f64, mss: usize, cap: usize) -> usize {
    assert!(eta0 > 0.0 && eta0 < 1.0, "eta0 must lie in (0, 1)");
    let cap = cap.max(1);
    if epsilon >= 1.0 {
        return 1;
    }
    if epsilon <= 0.0 {
        return cap;
    }
    let denom = (-epsilon.powi(mss as i32)).ln_1p();
    if denom == 0.0 {
        return cap;
    }
    let k = ((-eta0).ln_1p() / denom).ceil();
    if k >= cap as f64 {
        cap
    } else {
        (k as usize).max(1)
    }
}
