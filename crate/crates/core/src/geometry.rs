//! Planar projective geometry: points, matches, homographies and their fitting.
//!
//! Every [`Homography`] is stored in a canonical form: unit Frobenius norm with
//! its largest-magnitude entry positive. Two matrices that differ only by a
//! non-zero scale therefore compare equal entry by entry.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix3, SMatrix, Vector3};

use crate::error::{Error, Result};

/// Relative tolerance on the homogeneous `w` coordinate below which a point is
/// considered to sit on the horizon: `|w| <= HORIZON_TOL * ||(x, y, 1)||`.
pub const HORIZON_TOL: f64 = 1e-8;

/// Smallest admissible `|det|` of a normalized homography.
pub const MIN_DETERMINANT: f64 = 1e-12;

/// Relative gap between the two smallest singular values of the DLT design
/// matrix under which the null space is considered ambiguous.
pub const SINGULAR_GAP_TOL: f64 = 1e-12;

/// Minimum number of matches determining a homography.
pub const HOMOGRAPHY_MSS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance_squared(&self, other: &Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// A correspondence between a point of the first image and one of the second.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Match {
    pub src: Point2,
    pub dst: Point2,
}

impl Match {
    pub const fn new(src: Point2, dst: Point2) -> Self {
        Self { src, dst }
    }

    pub fn swapped(&self) -> Match {
        Match {
            src: self.dst,
            dst: self.src,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.src.is_finite() && self.dst.is_finite()
    }
}

/// Width and height of an image, in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageExtents {
    width: f64,
    height: f64,
}

impl ImageExtents {
    pub fn new(width: f64, height: f64) -> Result<Self> {
        if !(width.is_finite() && height.is_finite() && width > 0.0 && height > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "image extents must be positive, got {width}x{height}"
            )));
        }
        Ok(Self { width, height })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn diagonal(&self) -> f64 {
        self.width.hypot(self.height)
    }

    pub fn center(&self) -> Point2 {
        Point2::new(self.width / 2.0, self.height / 2.0)
    }
}

/// A 3x3 projective transformation in canonical form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography {
    m: Matrix3<f64>,
}

impl Homography {
    /// Normalizes `m` to unit Frobenius norm with a positive largest-magnitude entry.
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let norm = m.norm();
        if norm == 0.0 {
            return Err(Error::SingularModel { det: 0.0 });
        }
        // Already-canonical input is kept bit-for-bit.
        let mut m = if (norm - 1.0).abs() <= 4.0 * f64::EPSILON {
            m
        } else {
            m / norm
        };
        // Ties keep the first entry in row-major order.
        let mut pivot = m[(0, 0)];
        for r in 0..3 {
            for c in 0..3 {
                if m[(r, c)].abs() > pivot.abs() {
                    pivot = m[(r, c)];
                }
            }
        }
        if pivot < 0.0 {
            m = -m;
        }
        let det = m.determinant();
        if !(det.abs() > MIN_DETERMINANT) {
            return Err(Error::SingularModel { det });
        }
        Ok(Self { m })
    }

    pub fn identity() -> Self {
        Self::new(Matrix3::identity()).expect("identity is invertible")
    }

    /// Builds a homography from nine row-major entries.
    pub fn from_row_major(entries: &[f64; 9]) -> Result<Self> {
        Self::new(Matrix3::from_row_slice(entries))
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Self::new(Matrix3::new(1.0, 0.0, tx, 0.0, 1.0, ty, 0.0, 0.0, 1.0))
            .expect("translation is invertible")
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        let m = &self.m;
        [
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 0)],
            m[(1, 1)],
            m[(1, 2)],
            m[(2, 0)],
            m[(2, 1)],
            m[(2, 2)],
        ]
    }

    pub fn determinant(&self) -> f64 {
        self.m.determinant()
    }

    /// Maps `p` through the homography.
    pub fn project(&self, p: Point2) -> Result<Point2> {
        if !p.is_finite() {
            return Err(Error::NonFinite);
        }
        let v = self.m * Vector3::new(p.x, p.y, 1.0);
        if v.z.abs() <= HORIZON_TOL * (p.x * p.x + p.y * p.y + 1.0).sqrt() {
            return Err(Error::HorizonDegenerate { x: p.x, y: p.y });
        }
        Ok(Point2::new(v.x / v.z, v.y / v.z))
    }

    pub fn invert(&self) -> Result<Homography> {
        let inv = self.m.try_inverse().ok_or(Error::SingularModel {
            det: self.determinant(),
        })?;
        Homography::new(inv)
    }

    /// The transformation applying `first`, then `self`.
    pub fn compose(&self, first: &Homography) -> Result<Homography> {
        Homography::new(self.m * first.m)
    }

    /// Largest absolute entrywise difference to `other`.
    pub fn max_abs_diff(&self, other: &Homography) -> f64 {
        (self.m - other.m).amax()
    }
}

impl fmt::Display for Homography {
    /// Nine whitespace-separated row-major entries; `Display` for `f64` is
    /// the shortest decimal that round-trips exactly.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e = self.to_row_major();
        for (i, v) in e.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl FromStr for Homography {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse_err = |message: String| Error::Parse { line: 1, message };
        let values = s
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|e| parse_err(format!("`{t}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let entries: [f64; 9] = values
            .try_into()
            .map_err(|v: Vec<f64>| parse_err(format!("expected 9 numbers, got {}", v.len())))?;
        Homography::from_row_major(&entries)
    }
}

/// Free-function form of [`Homography::project`].
pub fn project(h: &Homography, p: Point2) -> Result<Point2> {
    h.project(p)
}

/// Free-function form of [`Homography::invert`].
pub fn invert(h: &Homography) -> Result<Homography> {
    h.invert()
}

/// Squared distance between `m.dst` and the projection of `m.src`.
pub fn direct_transfer_error(h: &Homography, m: &Match) -> Result<f64> {
    Ok(m.dst.distance_squared(&h.project(m.src)?))
}

/// Sum of the squared forward and backward transfer distances of `m`.
pub fn symmetric_transfer_error(h: &Homography, m: &Match) -> Result<f64> {
    let inv = h.invert()?;
    Ok(direct_transfer_error(h, m)? + direct_transfer_error(&inv, &m.swapped())?)
}

/// A homography together with its inverse, laid out for tight scoring loops.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TransferPair {
    fwd: [f64; 9],
    bwd: [f64; 9],
}

impl TransferPair {
    pub(crate) fn new(h: &Homography) -> Result<Self> {
        Ok(Self {
            fwd: h.to_row_major(),
            bwd: h.invert()?.to_row_major(),
        })
    }

    #[inline]
    fn apply(h: &[f64; 9], p: &Point2) -> Option<(f64, f64)> {
        let w = h[6] * p.x + h[7] * p.y + h[8];
        let tol = HORIZON_TOL * HORIZON_TOL * (p.x * p.x + p.y * p.y + 1.0);
        if w * w <= tol {
            return None;
        }
        let inv_w = 1.0 / w;
        Some((
            (h[0] * p.x + h[1] * p.y + h[2]) * inv_w,
            (h[3] * p.x + h[4] * p.y + h[5]) * inv_w,
        ))
    }

    /// Symmetric transfer error, `+inf` when either projection hits the horizon.
    #[inline]
    pub(crate) fn symmetric_error(&self, m: &Match) -> f64 {
        match (
            Self::apply(&self.fwd, &m.src),
            Self::apply(&self.bwd, &m.dst),
        ) {
            (Some((fx, fy)), Some((bx, by))) => {
                let (dx, dy) = (m.dst.x - fx, m.dst.y - fy);
                let (ex, ey) = (m.src.x - bx, m.src.y - by);
                dx * dx + dy * dy + ex * ex + ey * ey
            }
            _ => f64::INFINITY,
        }
    }
}

/// Similarity moving the centroid of `points` to the origin with mean distance sqrt(2).
fn hartley_normalization(points: impl Iterator<Item = Point2> + Clone) -> Result<(f64, Point2)> {
    let mut n = 0usize;
    let (mut cx, mut cy) = (0.0, 0.0);
    for p in points.clone() {
        cx += p.x;
        cy += p.y;
        n += 1;
    }
    let c = Point2::new(cx / n as f64, cy / n as f64);
    let mean_dist = points.map(|p| p.distance(&c)).sum::<f64>() / n as f64;
    if !(mean_dist > f64::EPSILON * (1.0 + c.x.abs() + c.y.abs())) {
        return Err(Error::DegenerateSample("coincident points"));
    }
    Ok((std::f64::consts::SQRT_2 / mean_dist, c))
}

#[inline]
fn design_rows(s: Point2, d: Point2) -> [[f64; 9]; 2] {
    [
        [-s.x, -s.y, -1.0, 0.0, 0.0, 0.0, d.x * s.x, d.x * s.y, d.x],
        [0.0, 0.0, 0.0, -s.x, -s.y, -1.0, d.y * s.x, d.y * s.y, d.y],
    ]
}

/// Picks the right singular vector of the smallest singular value, rejecting
/// an ambiguous (rank-deficient) null space.
fn null_vector(singular_values: &[f64], v_t_row: impl Fn(usize) -> [f64; 9]) -> Result<[f64; 9]> {
    let mut order: Vec<usize> = (0..singular_values.len()).collect();
    order.sort_by(|&a, &b| singular_values[b].total_cmp(&singular_values[a]));
    let largest = singular_values[order[0]];
    let smallest = singular_values[order[8]];
    let second = singular_values[order[7]];
    if !(second - smallest > SINGULAR_GAP_TOL * largest) {
        return Err(Error::DegenerateSample("rank-deficient design matrix"));
    }
    Ok(v_t_row(order[8]))
}

/// Least-squares homography under algebraic error with Hartley conditioning.
///
/// Exact for noiseless, non-degenerate correspondences. Four matches use a
/// fixed-size 9x9 system (the design matrix padded with a zero row).
pub fn dlt_fit(matches: &[Match]) -> Result<Homography> {
    if matches.len() < HOMOGRAPHY_MSS {
        return Err(Error::InsufficientData {
            needed: HOMOGRAPHY_MSS,
            got: matches.len(),
        });
    }
    if matches.iter().any(|m| !m.is_finite()) {
        return Err(Error::NonFinite);
    }
    let (ss, sc) = hartley_normalization(matches.iter().map(|m| m.src))?;
    let (ds, dc) = hartley_normalization(matches.iter().map(|m| m.dst))?;
    let norm = |p: Point2, s: f64, c: Point2| Point2::new(s * (p.x - c.x), s * (p.y - c.y));

    let h = if matches.len() == HOMOGRAPHY_MSS {
        let mut a = SMatrix::<f64, 9, 9>::zeros();
        for (i, m) in matches.iter().enumerate() {
            let rows = design_rows(norm(m.src, ss, sc), norm(m.dst, ds, dc));
            for (k, row) in rows.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    a[(2 * i + k, j)] = *v;
                }
            }
        }
        let svd = a.svd(false, true);
        let v_t = svd.v_t.ok_or(Error::DegenerateSample("svd failed"))?;
        null_vector(svd.singular_values.as_slice(), |r| {
            std::array::from_fn(|j| v_t[(r, j)])
        })?
    } else {
        let mut a = DMatrix::<f64>::zeros(2 * matches.len(), 9);
        for (i, m) in matches.iter().enumerate() {
            let rows = design_rows(norm(m.src, ss, sc), norm(m.dst, ds, dc));
            for (k, row) in rows.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    a[(2 * i + k, j)] = *v;
                }
            }
        }
        let svd = a.svd(false, true);
        let v_t = svd.v_t.ok_or(Error::DegenerateSample("svd failed"))?;
        null_vector(svd.singular_values.as_slice(), |r| {
            std::array::from_fn(|j| v_t[(r, j)])
        })?
    };

    let h_norm = Matrix3::from_row_slice(&h);
    let t_src = Matrix3::new(ss, 0.0, -ss * sc.x, 0.0, ss, -ss * sc.y, 0.0, 0.0, 1.0);
    let t_dst_inv = Matrix3::new(1.0 / ds, 0.0, dc.x, 0.0, 1.0 / ds, dc.y, 0.0, 0.0, 1.0);
    Homography::new(t_dst_inv * h_norm * t_src).map_err(|e| match e {
        Error::SingularModel { .. } | Error::NonFinite => {
            Error::DegenerateSample("fitted model is singular")
        }
        other => other,
    })
}
