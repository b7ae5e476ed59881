//! Ready-made experiment grids.

use std::fmt;
use std::str::FromStr;

use crate::aggregation::AggregationMethod::{
    WeightedGeometricMedian as Wgmed, WeightedMean as Wmean,
};
use crate::error::{Error, Result};
use crate::geometry::{Homography, ImageExtents};
use crate::methods::{Method, MethodConfig};
use crate::rng::derive_seed;

use super::experiment::Experiment;
use super::scenario::{centered_homography, HomographyDifficulty, Scenario};
use super::trace::TraceConfig;

/// Both images of the reference scene are 1024x768.
pub fn reference_extents() -> ImageExtents {
    ImageExtents::new(1024.0, 768.0).expect("positive extents")
}

/// A mild perspective view: 4 degrees of rotation, slight anisotropic scale,
/// a small shift and weak projective terms.
pub fn reference_homography() -> Homography {
    centered_homography(
        &reference_extents(),
        4f64.to_radians(),
        (1.05, 0.97),
        (25.0, -18.0),
        (3e-5, -2e-5),
    )
    .expect("reference homography is valid")
}

/// A scenario on the reference scene. The inlier set depends on the master
/// seed and the inlier count only.
pub fn reference_scenario(
    n_inliers: usize,
    outlier_ratio: f64,
    sigma: f64,
    master_seed: u64,
) -> Scenario {
    Scenario {
        gt: reference_homography(),
        extents_src: reference_extents(),
        extents_dst: reference_extents(),
        n_inliers,
        outlier_ratio,
        sigma,
        seed: derive_seed(master_seed, &[u64::MAX, n_inliers as u64]),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaperTable {
    /// RANSAAC and LO-RANSAAC with both aggregations over noise, inlier count and outlier ratio.
    Table1,
    /// 90% outliers against RANSAC+M, LO-RANSAC and the oracle.
    Table3,
    /// Fixed budget against adaptive termination.
    Adaptive,
    /// Weight exponent sweep.
    PSweep,
    /// Per-iteration error curves.
    PerIteration,
    /// A new random homography and inlier set per trial.
    RandomHomographies,
}

impl PaperTable {
    pub const ALL: [PaperTable; 6] = [
        PaperTable::Table1,
        PaperTable::Table3,
        PaperTable::Adaptive,
        PaperTable::PSweep,
        PaperTable::PerIteration,
        PaperTable::RandomHomographies,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            PaperTable::Table1 => "1",
            PaperTable::Table3 => "3",
            PaperTable::Adaptive => "adaptive",
            PaperTable::PSweep => "p-sweep",
            PaperTable::PerIteration => "periter",
            PaperTable::RandomHomographies => "random",
        }
    }

    pub fn default_trials(&self) -> usize {
        match self {
            PaperTable::Table3 => 50,
            PaperTable::PerIteration => 1000,
            _ => 100,
        }
    }
}

impl fmt::Display for PaperTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for PaperTable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PaperTable::ALL
            .into_iter()
            .find(|t| t.id() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown preset `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    Grid(Experiment),
    Trace(TraceConfig),
}

fn grid(
    scenarios: Vec<Scenario>,
    methods: Vec<MethodConfig>,
    trials: usize,
    master_seed: u64,
) -> Experiment {
    Experiment {
        scenarios,
        methods,
        trials,
        master_seed,
        random_gt: None,
    }
}

/// The grid of `table` on the reference scene.
pub fn preset(table: PaperTable, trials: usize, master_seed: u64) -> Preset {
    let sc = |n, r, s| reference_scenario(n, r, s, master_seed);
    // Thresholds are re-derived from each scenario's noise level.
    let mc = |m, its| MethodConfig::new(m, 1.0, its);
    match table {
        PaperTable::Table1 => {
            let mut scenarios = Vec::new();
            for n in [100, 1000] {
                for sigma in [0.5, 2.0, 5.0] {
                    for r in [0.0, 0.05, 0.2, 0.5] {
                        scenarios.push(sc(n, r, sigma));
                    }
                }
            }
            let mut methods = Vec::new();
            for m in [
                Method::Ransaac(Wmean),
                Method::LoRansaac(Wmean),
                Method::Ransaac(Wgmed),
                Method::LoRansaac(Wgmed),
            ] {
                for its in [1000, 10000] {
                    methods.push(mc(m, its));
                }
            }
            Preset::Grid(grid(scenarios, methods, trials, master_seed))
        }
        PaperTable::Table3 => {
            let mut methods = Vec::new();
            for m in [
                Method::LoRansaac(Wmean),
                Method::LoRansaac(Wgmed),
                Method::RansacM,
                Method::LoRansac,
            ] {
                for its in [10000, 20000] {
                    methods.push(mc(m, its));
                }
            }
            methods.push(mc(Method::Oracle, 1));
            Preset::Grid(grid(
                vec![sc(1000, 0.9, 2.0), sc(1000, 0.9, 5.0)],
                methods,
                trials,
                master_seed,
            ))
        }
        PaperTable::Adaptive => {
            let mut methods = Vec::new();
            for m in [
                Method::Ransac,
                Method::RansacM,
                Method::LoRansac,
                Method::LoRansaac(Wmean),
                Method::LoRansaac(Wgmed),
            ] {
                methods.push(mc(m, 1000));
                methods.push(mc(m, 1000).with_adaptive(1.0));
            }
            Preset::Grid(grid(
                vec![sc(100, 0.5, 5.0), sc(1000, 0.5, 5.0)],
                methods,
                trials,
                master_seed,
            ))
        }
        PaperTable::PSweep => {
            let mut methods = Vec::new();
            for m in [Method::Ransaac(Wmean), Method::LoRansaac(Wgmed)] {
                for its in [100, 1000, 10000] {
                    for p in 0..=10 {
                        methods.push(mc(m, its).with_p(p as f64));
                    }
                }
            }
            Preset::Grid(grid(vec![sc(1000, 0.2, 5.0)], methods, trials, master_seed))
        }
        PaperTable::PerIteration => Preset::Trace(TraceConfig {
            scenario: sc(100, 0.5, 5.0),
            iterations: 20000,
            trials,
            master_seed,
            p: Method::Ransaac(Wmean).default_p(),
        }),
        PaperTable::RandomHomographies => {
            let mut scenarios = Vec::new();
            for sigma in [0.5, 2.0, 5.0] {
                scenarios.push(sc(1000, 0.2, sigma));
                scenarios.push(sc(1000, 0.5, sigma));
            }
            let methods = [
                Method::LoRansaac(Wmean),
                Method::LoRansaac(Wgmed),
                Method::Oracle,
            ]
            .into_iter()
            .map(|m| mc(m, 1000))
            .collect();
            let mut e = grid(scenarios, methods, trials, master_seed);
            e.random_gt = Some(HomographyDifficulty::default());
            Preset::Grid(e)
        }
    }
}
