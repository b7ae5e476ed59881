//! Hypothesis aggregation.
//!
//! Instead of averaging homographies directly, every accepted hypothesis maps
//! a small fixed basis of source points (the image corners) into the second
//! image. The per-point clouds of estimates are aggregated with a weighted mean
//! or a weighted geometric median, and the final model is the homography
//! through the basis and the aggregated points.

mod aggregate;
mod estimator;

use std::fmt;
use std::str::FromStr;

pub use aggregate::{
    geometric_median_objective, weighted_geometric_median, weighted_mean, weiszfeld,
    WEISZFELD_DISTANCE_FLOOR,
};
pub use estimator::{fit_from_cloud, lo_ransaac_estimate, ransaac_estimate, AggregatedEstimate};

use crate::error::{Error, Result};
use crate::geometry::{Homography, ImageExtents, Point2, HOMOGRAPHY_MSS};

/// Transformation family whose source-point layout is requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Homography,
    /// Homography with one radial distortion coefficient per image. Only the
    /// five-point layout is provided; no such model is fitted here.
    HomographyDistortion,
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "homography" => Ok(ModelKind::Homography),
            "homography+distortion" => Ok(ModelKind::HomographyDistortion),
            other => Err(Error::UnknownModelKind(other.to_string())),
        }
    }
}

fn collinear(a: &Point2, b: &Point2, c: &Point2) -> bool {
    let cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    let scale = a.distance(b).max(a.distance(c)).max(b.distance(c));
    cross.abs() <= 1e-12 * scale * scale
}

/// Source points whose images are aggregated.
///
/// The points are pairwise distinct and their first four contain no collinear
/// triple, so they determine a homography.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceBasis {
    points: Vec<Point2>,
}

impl SourceBasis {
    pub fn new(points: Vec<Point2>) -> Result<Self> {
        if points.len() < HOMOGRAPHY_MSS {
            return Err(Error::InvalidConfig(
                "a source basis needs at least 4 points".into(),
            ));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite);
        }
        for (i, a) in points.iter().enumerate() {
            if points[i + 1..].iter().any(|b| a == b) {
                return Err(Error::InvalidConfig(
                    "source basis points must be distinct".into(),
                ));
            }
        }
        let q = &points[..HOMOGRAPHY_MSS];
        for (i, j, k) in [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)] {
            if collinear(&q[i], &q[j], &q[k]) {
                return Err(Error::InvalidConfig(
                    "source basis has three collinear points".into(),
                ));
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn bounds(&self) -> (Point2, f64) {
        let (mut lo, mut hi) = (self.points[0], self.points[0]);
        for p in &self.points {
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        (
            Point2::new((lo.x + hi.x) / 2.0, (lo.y + hi.y) / 2.0),
            lo.distance(&hi),
        )
    }
}

/// Image corners for a homography; corners plus the top-border midpoint for
/// the homography+distortion layout.
pub fn predefined_source_points(extents: &ImageExtents, kind: ModelKind) -> SourceBasis {
    let (w, h) = (extents.width(), extents.height());
    let mut points = vec![
        Point2::new(0.0, 0.0),
        Point2::new(w, 0.0),
        Point2::new(0.0, h),
        Point2::new(w, h),
    ];
    if kind == ModelKind::HomographyDistortion {
        points.push(Point2::new(w / 2.0, 0.0));
    }
    SourceBasis::new(points).expect("image corners form a valid basis")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggregationMethod {
    WeightedMean,
    WeightedGeometricMedian,
}

impl AggregationMethod {
    pub fn id(&self) -> &'static str {
        match self {
            AggregationMethod::WeightedMean => "wmean",
            AggregationMethod::WeightedGeometricMedian => "wgmed",
        }
    }
}

impl fmt::Display for AggregationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggConfig {
    pub method: AggregationMethod,
    /// Exponent applied to the hypothesis weights.
    pub p: f64,
    pub weiszfeld_tol: f64,
    pub weiszfeld_max_iters: usize,
    /// Projections further than this many basis diagonals from the basis
    /// center (per axis) are treated as horizon-degenerate.
    pub sanity_margin: f64,
}

impl AggConfig {
    pub fn new(method: AggregationMethod, p: f64) -> Self {
        Self {
            method,
            p,
            weiszfeld_tol: 1e-9,
            weiszfeld_max_iters: 100,
            sanity_margin: 100.0,
        }
    }

    pub fn weighted_mean(p: f64) -> Self {
        Self::new(AggregationMethod::WeightedMean, p)
    }

    pub fn weighted_geometric_median(p: f64) -> Self {
        Self::new(AggregationMethod::WeightedGeometricMedian, p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 0.0 && self.p.is_finite()) {
            return Err(Error::InvalidConfig(
                "weight exponent must be non-negative".into(),
            ));
        }
        if !(self.weiszfeld_tol > 0.0) || self.weiszfeld_max_iters == 0 {
            return Err(Error::InvalidConfig(
                "Weiszfeld tolerance and iteration cap must be positive".into(),
            ));
        }
        if !(self.sanity_margin > 0.0) {
            return Err(Error::InvalidConfig(
                "sanity margin must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Aggregates one per-point cloud.
    pub fn aggregate(&self, points: &[Point2], weights: &[f64]) -> Result<Point2> {
        match self.method {
            AggregationMethod::WeightedMean => weighted_mean(points, weights, self.p),
            AggregationMethod::WeightedGeometricMedian => weighted_geometric_median(
                points,
                weights,
                self.p,
                self.weiszfeld_tol,
                self.weiszfeld_max_iters,
            ),
        }
    }
}

/// Per-basis-point estimates sharing one weight per hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateCloud {
    per_point: Vec<Vec<Point2>>,
    weights: Vec<f64>,
}

impl EstimateCloud {
    pub fn new(basis_len: usize) -> Self {
        Self {
            per_point: vec![Vec::new(); basis_len],
            weights: Vec::new(),
        }
    }

    /// Number of hypotheses recorded.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn estimates(&self, basis_index: usize) -> &[Point2] {
        &self.per_point[basis_index]
    }

    pub fn basis_len(&self) -> usize {
        self.per_point.len()
    }

    /// Records one hypothesis; zero or negative weights are ignored.
    pub fn push(&mut self, estimates: &[Point2], weight: f64) {
        assert_eq!(
            estimates.len(),
            self.per_point.len(),
            "one estimate per basis point"
        );
        if !(weight > 0.0) {
            return;
        }
        for (cloud, p) in self.per_point.iter_mut().zip(estimates) {
            cloud.push(*p);
        }
        self.weights.push(weight);
    }

    /// Aggregated position of every basis point.
    pub fn aggregate(&self, cfg: &AggConfig) -> Result<Vec<Point2>> {
        if self.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let a = aggregate::powered_weights(&self.weights, cfg.p)?;
        let one = |points: &Vec<Point2>| -> Result<Point2> {
            aggregate::check_cloud(points, &self.weights)?;
            Ok(match cfg.method {
                AggregationMethod::WeightedMean => aggregate::mean_with(points, &a),
                AggregationMethod::WeightedGeometricMedian => {
                    aggregate::median_with(points, &a, cfg.weiszfeld_tol, cfg.weiszfeld_max_iters).0
                }
            })
        };
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            self.per_point.par_iter().map(one).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            self.per_point.iter().map(one).collect()
        }
    }
}

/// Projects the basis through hypotheses, rejecting those that send a basis
/// point to (or near) infinity.
#[derive(Debug, Clone)]
pub(crate) struct BasisProjector {
    points: Vec<Point2>,
    center: Point2,
    limit: f64,
    buf: Vec<Point2>,
}

impl BasisProjector {
    pub(crate) fn new(basis: &SourceBasis, margin: f64) -> Self {
        let (center, diag) = basis.bounds();
        Self {
            points: basis.points.clone(),
            center,
            limit: margin * diag,
            buf: Vec::with_capacity(basis.len()),
        }
    }

    pub(crate) fn project(&mut self, h: &Homography) -> Option<&[Point2]> {
        self.buf.clear();
        for p in &self.points {
            let q = h.project(*p).ok()?;
            if (q.x - self.center.x).abs() > self.limit || (q.y - self.center.y).abs() > self.limit
            {
                return None;
            }
            self.buf.push(q);
        }
        Some(&self.buf)
    }
}
