use crate::error::{Error, Result};
use crate::geometry::{symmetric_transfer_error, Homography, Match};

/// Mean over the noiseless inliers of the halved sum of forward and backward
/// transfer distances (not squared), in pixels.
pub fn mean_inlier_error(phi: &Homography, gt_inliers: &[Match]) -> Result<f64> {
    if gt_inliers.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let inv = phi.invert()?;
    let mut sum = 0.0;
    for m in gt_inliers {
        let fwd = phi.project(m.src)?.distance(&m.dst);
        let bwd = inv.project(m.dst)?.distance(&m.src);
        sum += (fwd + bwd) / 2.0;
    }
    Ok(sum / gt_inliers.len() as f64)
}

/// Noiseless stand-ins for the inliers of a matches file with known ground
/// truth: `(x, gt(x))` for every match within `delta_d` of `gt`.
pub fn ground_truth_pairs(gt: &Homography, matches: &[Match], delta_d: f64) -> Vec<Match> {
    matches
        .iter()
        .filter(|m| symmetric_transfer_error(gt, m).is_ok_and(|e| e <= delta_d))
        .filter_map(|m| gt.project(m.src).ok().map(|q| Match::new(m.src, q)))
        .collect()
}
