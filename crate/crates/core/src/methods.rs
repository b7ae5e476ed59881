//! Named estimators and a single dispatch entry point.

use std::fmt;
use std::str::FromStr;

use crate::aggregation::{
    lo_ransaac_estimate, predefined_source_points, ransaac_estimate, AggConfig, AggregatedEstimate,
    AggregationMethod, EstimateCloud, ModelKind,
};
use crate::error::{Error, Result};
use crate::geometry::{dlt_fit, Homography, ImageExtents, Match};
use crate::local_opt::{lo_ransac_estimate, LoConfig};
use crate::robust::{
    chi2_threshold, ransac_estimate, refit_on_inliers, score_hypothesis, ChiSquareDof,
    RobustConfig, ScoringVariant, TracePoint, DEFAULT_ALPHA,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Ransac,
    /// RANSAC followed by a least-squares fit on the inliers.
    RansacM,
    Msac,
    LMedS,
    LoRansac,
    Ransaac(AggregationMethod),
    LoRansaac(AggregationMethod),
    /// Least-squares fit on the known inliers.
    Oracle,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::Ransac,
        Method::RansacM,
        Method::Msac,
        Method::LMedS,
        Method::LoRansac,
        Method::Ransaac(AggregationMethod::WeightedMean),
        Method::Ransaac(AggregationMethod::WeightedGeometricMedian),
        Method::LoRansaac(AggregationMethod::WeightedMean),
        Method::LoRansaac(AggregationMethod::WeightedGeometricMedian),
        Method::Oracle,
    ];

    pub fn id(&self) -> &'static str {
        use AggregationMethod::*;
        match self {
            Method::Ransac => "ransac",
            Method::RansacM => "ransac+m",
            Method::Msac => "msac",
            Method::LMedS => "lmeds",
            Method::LoRansac => "lo-ransac",
            Method::Ransaac(WeightedMean) => "ransaac-wmean",
            Method::Ransaac(WeightedGeometricMedian) => "ransaac-wgmed",
            Method::LoRansaac(WeightedMean) => "lo-ransaac-wmean",
            Method::LoRansaac(WeightedGeometricMedian) => "lo-ransaac-wgmed",
            Method::Oracle => "oracle",
        }
    }

    pub fn is_aggregating(&self) -> bool {
        matches!(self, Method::Ransaac(_) | Method::LoRansaac(_))
    }

    pub fn uses_local_optimization(&self) -> bool {
        matches!(self, Method::LoRansac | Method::LoRansaac(_))
    }

    /// Weight exponent used when none is configured.
    pub fn default_p(&self) -> f64 {
        match self {
            Method::LoRansaac(AggregationMethod::WeightedGeometricMedian) => 2.0,
            _ => 5.0,
        }
    }

    /// Factor applied to the chi-square threshold for scoring.
    pub fn threshold_factor(&self) -> f64 {
        if self.is_aggregating() {
            2.0
        } else {
            1.0
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.id() == s)
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

/// One estimator with all of its knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodConfig {
    pub method: Method,
    /// Noise level the threshold is derived from.
    pub sigma: f64,
    /// Scoring threshold override, used verbatim.
    pub delta_d: Option<f64>,
    pub iterations: usize,
    pub eta0: f64,
    pub adaptive: bool,
    pub adaptive_multiplier: f64,
    /// Weight exponent override.
    pub p: Option<f64>,
    pub lo: LoConfig,
    pub weiszfeld_tol: f64,
    pub weiszfeld_max_iters: usize,
    pub sanity_margin: f64,
}

impl MethodConfig {
    pub fn new(method: Method, sigma: f64, iterations: usize) -> Self {
        let agg = AggConfig::weighted_mean(0.0);
        Self {
            method,
            sigma,
            delta_d: None,
            iterations,
            eta0: 0.99,
            adaptive: false,
            adaptive_multiplier: 1.0,
            p: None,
            lo: LoConfig::default(),
            weiszfeld_tol: agg.weiszfeld_tol,
            weiszfeld_max_iters: agg.weiszfeld_max_iters,
            sanity_margin: agg.sanity_margin,
        }
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p = Some(p);
        self
    }

    pub fn with_adaptive(mut self, multiplier: f64) -> Self {
        self.adaptive = true;
        self.adaptive_multiplier = multiplier;
        self
    }

    /// Method id plus any non-default settings, e.g. `ransaac-wmean[p=3]+adaptive`.
    pub fn label(&self) -> String {
        let mut s = self.method.id().to_string();
        if let Some(p) = self.p {
            s.push_str(&format!("[p={p}]"));
        }
        if self.adaptive {
            s.push_str("+adaptive");
            if self.adaptive_multiplier != 1.0 {
                s.push_str(&format!("x{}", self.adaptive_multiplier));
            }
        }
        s
    }

    /// Threshold for reporting inliers of a final model: the plain chi-square value.
    pub fn inlier_threshold(&self) -> f64 {
        self.delta_d
            .unwrap_or_else(|| chi2_threshold(self.sigma, DEFAULT_ALPHA, ChiSquareDof::Four))
    }

    /// Threshold the method scores hypotheses with.
    pub fn scoring_threshold(&self) -> f64 {
        self.delta_d
            .unwrap_or_else(|| self.method.threshold_factor() * self.inlier_threshold())
    }

    pub fn p(&self) -> f64 {
        self.p.unwrap_or_else(|| self.method.default_p())
    }

    pub fn robust_config(&self, seed: u64) -> RobustConfig {
        let scoring = match self.method {
            Method::Msac => ScoringVariant::Msac,
            Method::LMedS => ScoringVariant::LMedS,
            _ => ScoringVariant::RansacBinary,
        };
        RobustConfig {
            iterations: self.iterations,
            delta_d: self.scoring_threshold(),
            eta0: self.eta0,
            adaptive: self.adaptive,
            adaptive_multiplier: self.adaptive_multiplier,
            seed,
            scoring,
            ..RobustConfig::default()
        }
    }

    pub fn agg_config(&self) -> Option<AggConfig> {
        let kind = match self.method {
            Method::Ransaac(k) | Method::LoRansaac(k) => k,
            _ => return None,
        };
        Some(AggConfig {
            weiszfeld_tol: self.weiszfeld_tol,
            weiszfeld_max_iters: self.weiszfeld_max_iters,
            sanity_margin: self.sanity_margin,
            ..AggConfig::new(kind, self.p())
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.delta_d.is_none() && !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig(
                "sigma must be positive unless delta_d is given".into(),
            ));
        }
        self.robust_config(0).validate()?;
        if self.method.uses_local_optimization() {
            self.lo.validate()?;
        }
        if let Some(agg) = self.agg_config() {
            agg.validate()?;
        }
        Ok(())
    }
}

/// Output of [`estimate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub model: Homography,
    /// Matches within [`MethodConfig::inlier_threshold`] of `model`.
    pub inliers: usize,
    pub iterations: usize,
    /// Improvements of the best hypothesis; empty for the oracle.
    pub trace: Vec<TracePoint>,
    /// Aggregation cloud of the RANSAAC variants.
    pub cloud: Option<EstimateCloud>,
    /// Set when an aggregating method returned the RANSAC best instead.
    pub fallback: bool,
}

/// Runs `cfg.method` on `matches`.
///
/// The aggregation basis is the corner layout of `extents`. `oracle_inliers`
/// is required by, and only used by, [`Method::Oracle`].
pub fn estimate(
    matches: &[Match],
    cfg: &MethodConfig,
    seed: u64,
    extents: &ImageExtents,
    oracle_inliers: Option<&[usize]>,
) -> Result<Estimate> {
    cfg.validate()?;
    let rc = cfg.robust_config(seed);
    let plain = |model: Homography, run: crate::robust::ConsensusRun| {
        (model, run.iterations, run.trace, None, false)
    };
    let (model, iterations, trace, cloud, fallback) = match cfg.method {
        Method::Ransac | Method::Msac | Method::LMedS => {
            let run = ransac_estimate(matches, &rc)?;
            plain(run.best.model, run)
        }
        Method::RansacM => {
            let run = ransac_estimate(matches, &rc)?;
            // Keep the minimal-sample model when the refit is degenerate.
            let model = refit_on_inliers(matches, &run.best).unwrap_or(run.best.model);
            plain(model, run)
        }
        Method::LoRansac => {
            let est = lo_ransac_estimate(matches, &rc, &cfg.lo)?;
            plain(est.model, est.run)
        }
        Method::Ransaac(_) | Method::LoRansaac(_) => {
            let agg = cfg.agg_config().expect("aggregating method");
            let basis = predefined_source_points(extents, ModelKind::Homography);
            let AggregatedEstimate {
                model,
                run,
                cloud,
                fallback,
                ..
            } = if cfg.method.uses_local_optimization() {
                lo_ransaac_estimate(matches, &rc, &cfg.lo, &agg, &basis)?
            } else {
                ransaac_estimate(matches, &rc, &agg, &basis)?
            };
            (model, run.iterations, run.trace, Some(cloud), fallback)
        }
        Method::Oracle => {
            let idx = oracle_inliers.ok_or_else(|| {
                Error::InvalidConfig("the oracle needs the ground-truth inliers".into())
            })?;
            let subset: Vec<Match> = idx.iter().map(|&i| matches[i]).collect();
            (dlt_fit(&subset)?, 0, Vec::new(), None, false)
        }
    };
    let check = RobustConfig {
        delta_d: cfg.inlier_threshold(),
        ..RobustConfig::default()
    };
    let inliers = score_hypothesis(&model, matches, &check).inlier_count;
    Ok(Estimate {
        model,
        inliers,
        iterations,
        trace,
        cloud,
        fallback,
    })
}
