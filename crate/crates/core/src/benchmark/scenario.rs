use nalgebra::Matrix3;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::{Homography, ImageExtents, Match, Point2};
use crate::rng::{SampleStream, STREAM_GROUND_TRUTH};

/// Attempts per point before a scenario or a random homography is given up.
const MAX_RESAMPLES: usize = 1000;

/// A synthetic ground-truth configuration.
///
/// The inlier source points depend only on `seed`, so every trial of a
/// scenario shares them; outliers and noise come from the per-trial stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub gt: Homography,
    pub extents_src: ImageExtents,
    pub extents_dst: ImageExtents,
    pub n_inliers: usize,
    /// Fraction of outliers among all matches.
    pub outlier_ratio: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl Scenario {
    pub fn n_outliers(&self) -> usize {
        let r = self.outlier_ratio;
        (self.n_inliers as f64 * r / (1.0 - r)).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_inliers < crate::geometry::HOMOGRAPHY_MSS {
            return Err(Error::InvalidConfig(
                "a scenario needs at least 4 inliers".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.outlier_ratio) {
            return Err(Error::InvalidConfig(
                "outlier ratio must lie in [0, 1)".into(),
            ));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig("sigma must be non-negative".into()));
        }
        Ok(())
    }
}

/// Noisy matches of one trial plus the noiseless inliers they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    /// Inliers first, then outliers.
    pub matches: Vec<Match>,
    /// Noiseless `(x, gt(x))` pairs, in the order of the inliers in `matches`.
    pub clean_inliers: Vec<Match>,
    pub inlier_indices: Vec<usize>,
}

fn uniform_point(stream: &mut SampleStream, e: &ImageExtents) -> Point2 {
    Point2::new(
        stream.uniform(0.0, e.width()),
        stream.uniform(0.0, e.height()),
    )
}

/// The fixed inlier pairs of a scenario.
pub fn scenario_inliers(s: &Scenario) -> Result<Vec<Match>> {
    let mut stream = SampleStream::new(s.seed, STREAM_GROUND_TRUTH);
    let mut out = Vec::with_capacity(s.n_inliers);
    for _ in 0..s.n_inliers {
        let mut tries = 0;
        let m = loop {
            let p = uniform_point(&mut stream, &s.extents_src);
            match s.gt.project(p) {
                Ok(q) => break Match::new(p, q),
                Err(e) if tries + 1 >= MAX_RESAMPLES => return Err(e),
                Err(_) => tries += 1,
            }
        };
        out.push(m);
    }
    Ok(out)
}

/// Draws one trial of `s`: its fixed inliers plus fresh outliers, with
/// N(0, sigma^2) noise added to every coordinate of every match afterwards.
pub fn generate_scenario(s: &Scenario, stream: &mut SampleStream) -> Result<SyntheticData> {
    s.validate()?;
    let clean_inliers = scenario_inliers(s)?;
    let mut matches = clean_inliers.clone();
    for _ in 0..s.n_outliers() {
        let src = uniform_point(stream, &s.extents_src);
        let dst = uniform_point(stream, &s.extents_dst);
        matches.push(Match::new(src, dst));
    }
    if s.sigma > 0.0 {
        let noise = Normal::new(0.0, s.sigma).expect("sigma is finite and positive");
        let rng = stream.rng_mut();
        for m in &mut matches {
            m.src.x += noise.sample(rng);
            m.src.y += noise.sample(rng);
            m.dst.x += noise.sample(rng);
            m.dst.y += noise.sample(rng);
        }
    }
    let inlier_indices = (0..s.n_inliers).collect();
    Ok(SyntheticData {
        matches,
        clean_inliers,
        inlier_indices,
    })
}

/// Ranges of the random homography generator. [`HomographyDifficulty::none`]
/// yields the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct HomographyDifficulty {
    /// Largest rotation angle, radians.
    pub max_rotation: f64,
    /// Per-axis scale range.
    pub scale: (f64, f64),
    /// Largest translation as a fraction of the image size.
    pub max_translation: f64,
    /// Largest magnitude of the projective terms, per pixel.
    pub max_projective: f64,
}

impl HomographyDifficulty {
    pub fn none() -> Self {
        Self {
            max_rotation: 0.0,
            scale: (1.0, 1.0),
            max_translation: 0.0,
            max_projective: 0.0,
        }
    }
}

impl Default for HomographyDifficulty {
    fn default() -> Self {
        Self {
            max_rotation: std::f64::consts::FRAC_PI_6,
            scale: (0.7, 1.4),
            max_translation: 0.2,
            max_projective: 1e-4,
        }
    }
}

/// A random homography about the image center: rotation, anisotropic scale,
/// translation and small projective terms.
///
/// The horizon is kept outside the image box doubled about its center.
pub fn random_homography(
    extents: &ImageExtents,
    stream: &mut SampleStream,
    d: &HomographyDifficulty,
) -> Result<Homography> {
    for _ in 0..MAX_RESAMPLES {
        let theta = stream.uniform(-d.max_rotation, d.max_rotation);
        let sx = stream.uniform(d.scale.0, d.scale.1);
        let sy = stream.uniform(d.scale.0, d.scale.1);
        let tx = stream.uniform(-d.max_translation, d.max_translation) * extents.width();
        let ty = stream.uniform(-d.max_translation, d.max_translation) * extents.height();
        let g = stream.uniform(-d.max_projective, d.max_projective);
        let k = stream.uniform(-d.max_projective, d.max_projective);
        if let Ok(h) = centered_homography(extents, theta, (sx, sy), (tx, ty), (g, k)) {
            return Ok(h);
        }
    }
    Err(Error::InvalidConfig(
        "could not draw a homography with its horizon off the image".into(),
    ))
}

/// `R(theta) S(scale)` plus `shift` and projective terms `(g, k)`, all acting on
/// coordinates centered on the image.
///
/// Fails when the horizon meets the image box doubled about its center.
pub fn centered_homography(
    extents: &ImageExtents,
    theta: f64,
    scale: (f64, f64),
    shift: (f64, f64),
    (g, k): (f64, f64),
) -> Result<Homography> {
    let c = extents.center();
    let (w, h) = (extents.width(), extents.height());
    // w is affine in the centered coordinates; positive at the corners of the
    // doubled box means positive inside it.
    if ![(-w, -h), (w, -h), (-w, h), (w, h)]
        .iter()
        .all(|&(x, y)| g * x + k * y + 1.0 > 0.0)
    {
        return Err(Error::InvalidConfig("horizon crosses the image".into()));
    }
    let (sin, cos) = theta.sin_cos();
    let centered = Matrix3::new(1.0, 0.0, -c.x, 0.0, 1.0, -c.y, 0.0, 0.0, 1.0);
    let back = Matrix3::new(1.0, 0.0, c.x, 0.0, 1.0, c.y, 0.0, 0.0, 1.0);
    let core = Matrix3::new(
        cos * scale.0,
        -sin * scale.1,
        shift.0,
        sin * scale.0,
        cos * scale.1,
        shift.1,
        g,
        k,
        1.0,
    );
    Homography::new(back * core * centered)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::symmetric_transfer_error;

    fn scenario(n: usize, r: f64, sigma: f64) -> Scenario {
        let e = ImageExtents::new(640.0, 480.0).unwrap();
        Scenario {
            gt: Homography::from_row_major(&[1.1, 0.02, 5.0, -0.03, 0.95, 12.0, 2e-5, 1e-5, 1.0])
                .unwrap(),
            extents_src: e,
            extents_dst: e,
            n_inliers: n,
            outlier_ratio: r,
            sigma,
            seed: 9,
        }
    }

    #[test]
    fn outlier_counts() {
        assert_eq!(scenario(1000, 0.5, 1.0).n_outliers(), 1000);
        assert_eq!(scenario(1000, 0.9, 1.0).n_outliers(), 9000);
        assert_eq!(scenario(1000, 0.2, 1.0).n_outliers(), 250);
        assert_eq!(scenario(1000, 0.05, 1.0).n_outliers(), 53);
        assert_eq!(scenario(1000, 0.0, 1.0).n_outliers(), 0);
    }

    #[test]
    fn noiseless_inliers_are_exact() {
        let s = scenario(200, 0.0, 0.0);
        let d = generate_scenario(&s, &mut SampleStream::new(1, 0)).unwrap();
        assert_eq!(d.matches.len(), 200);
        for m in &d.matches {
            assert!(symmetric_transfer_error(&s.gt, m).unwrap() < 1e-18);
        }
    }

    #[test]
    fn inliers_are_fixed_across_trials() {
        let s = scenario(50, 0.5, 1.0);
        let a = generate_scenario(&s, &mut SampleStream::new(1, 0)).unwrap();
        let b = generate_scenario(&s, &mut SampleStream::new(2, 0)).unwrap();
        assert_eq!(a.clean_inliers, b.clean_inliers);
        assert_ne!(a.matches, b.matches);
        assert_eq!(a.matches.len(), 100);
    }

    #[test]
    fn zero_difficulty_is_identity() {
        let e = ImageExtents::new(640.0, 480.0).unwrap();
        let h = random_homography(
            &e,
            &mut SampleStream::new(0, 3),
            &HomographyDifficulty::none(),
        )
        .unwrap();
        assert!(h.max_abs_diff(&Homography::identity()) < 1e-15);
    }

    #[test]
    fn random_homographies_keep_corners_finite() {
        let e = ImageExtents::new(640.0, 480.0).unwrap();
        let mut s = SampleStream::new(3, 3);
        for _ in 0..200 {
            let h = random_homography(&e, &mut s, &HomographyDifficulty::default()).unwrap();
            let m = h.matrix();
            // Canonical scaling may flip the overall sign, never the relative one.
            let w: Vec<f64> = [(0.0, 0.0), (640.0, 0.0), (0.0, 480.0), (640.0, 480.0)]
                .iter()
                .map(|&(x, y)| m[(2, 0)] * x + m[(2, 1)] * y + m[(2, 2)])
                .collect();
            assert!(w.iter().all(|&v| v * w[0] > 0.0));
            let inv = h.invert().unwrap();
            let p = Point2::new(100.0, 200.0);
            assert!(inv.project(h.project(p).unwrap()).unwrap().distance(&p) < 1e-9);
        }
    }
}
