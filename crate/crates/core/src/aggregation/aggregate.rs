use crate::error::{Error, Result};
use crate::geometry::Point2;

/// Distance floor used in place of zero when an iterate sits on a data point.
pub const WEISZFELD_DISTANCE_FLOOR: f64 = 1e-12;

/// `w^p`, computed on weights rescaled by their maximum so large counts and
/// exponents cannot overflow. The rescaling cancels in every ratio below.
pub(super) fn powered_weights(weights: &[f64], p: f64) -> Result<Vec<f64>> {
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidConfig(
            "weights must be finite and non-negative".into(),
        ));
    }
    let max = weights.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Err(Error::InvalidConfig("all weights are zero".into()));
    }
    Ok(weights.iter().map(|w| (w / max).powf(p)).collect())
}

pub(super) fn check_cloud(points: &[Point2], weights: &[f64]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if points.len() != weights.len() {
        return Err(Error::InvalidConfig(
            "points and weights differ in length".into(),
        ));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

pub(super) fn mean_with(points: &[Point2], a: &[f64]) -> Point2 {
    let (mut sx, mut sy, mut s) = (0.0, 0.0, 0.0);
    for (p, w) in points.iter().zip(a) {
        sx += w * p.x;
        sy += w * p.y;
        s += w;
    }
    Point2::new(sx / s, sy / s)
}

fn objective_with(points: &[Point2], a: &[f64], y: &Point2) -> f64 {
    points.iter().zip(a).map(|(p, w)| w * p.distance(y)).sum()
}

/// Weighted mean with weights raised to the power `p`.
pub fn weighted_mean(points: &[Point2], weights: &[f64], p: f64) -> Result<Point2> {
    check_cloud(points, weights)?;
    let a = powered_weights(weights, p)?;
    Ok(mean_with(points, &a))
}

/// Weighted sum of Euclidean distances from `y`, with weights raised to `p`.
pub fn geometric_median_objective(
    points: &[Point2],
    weights: &[f64],
    p: f64,
    y: &Point2,
) -> Result<f64> {
    check_cloud(points, weights)?;
    Ok(objective_with(points, &powered_weights(weights, p)?, y))
}

/// Weighted geometric median by Weiszfeld iteration, started at the weighted mean.
pub fn weighted_geometric_median(
    points: &[Point2],
    weights: &[f64],
    p: f64,
    tol: f64,
    max_iters: usize,
) -> Result<Point2> {
    weiszfeld(points, weights, p, tol, max_iters).map(|(y, _)| y)
}

/// Like [`weighted_geometric_median`], also returning the (rescaled-weight)
/// objective at the start point and after every accepted step.
pub fn weiszfeld(
    points: &[Point2],
    weights: &[f64],
    p: f64,
    tol: f64,
    max_iters: usize,
) -> Result<(Point2, Vec<f64>)> {
    check_cloud(points, weights)?;
    let a = powered_weights(weights, p)?;
    Ok(median_with(points, &a, tol, max_iters))
}

/// Candidate moves from the current iterate.
struct Step {
    weiszfeld: Point2,
    newton: Option<Point2>,
}

/// `d` holds the distances from every point to `y`.
fn step_from(points: &[Point2], a: &[f64], y: &Point2, d: &[f64]) -> Step {
    let (mut nx, mut ny, mut den) = (0.0, 0.0, 0.0);
    let (mut gx, mut gy) = (0.0, 0.0);
    let (mut hxx, mut hxy, mut hyy) = (0.0, 0.0, 0.0);
    let mut smooth = true;
    for ((x, w), &dist) in points.iter().zip(a).zip(d) {
        if *w == 0.0 {
            continue;
        }
        let c = w / dist.max(WEISZFELD_DISTANCE_FLOOR);
        nx += c * x.x;
        ny += c * x.y;
        den += c;
        if dist < WEISZFELD_DISTANCE_FLOOR {
            smooth = false;
            continue;
        }
        let (ux, uy) = ((y.x - x.x) / dist, (y.y - x.y) / dist);
        gx += w * ux;
        gy += w * uy;
        hxx += c * (1.0 - ux * ux);
        hxy -= c * ux * uy;
        hyy += c * (1.0 - uy * uy);
    }
    // Newton step on the objective, which is smooth away from the data points.
    let det = hxx * hyy - hxy * hxy;
    let newton = (smooth && det > 0.0 && det.is_finite())
        .then(|| {
            Point2::new(
                y.x - (hyy * gx - hxy * gy) / det,
                y.y - (hxx * gy - hxy * gx) / det,
            )
        })
        .filter(Point2::is_finite);
    Step {
        weiszfeld: Point2::new(nx / den, ny / den),
        newton,
    }
}

/// Objective at `to` minus objective at `from`, summed term by term as
/// `(|x-to|^2 - |x-from|^2) / (|x-to| + |x-from|)` so that the difference of
/// two nearby objectives keeps its relative precision. Fills `d_to`.
fn change_to(
    points: &[Point2],
    a: &[f64],
    from: &Point2,
    d_from: &[f64],
    to: &Point2,
    d_to: &mut Vec<f64>,
) -> f64 {
    let (dx, dy) = (to.x - from.x, to.y - from.y);
    d_to.clear();
    let mut total = 0.0;
    for ((x, w), &df) in points.iter().zip(a).zip(d_from) {
        let dt = x.distance(to);
        d_to.push(dt);
        let den = dt + df;
        if den > 0.0 {
            let num = dx * (2.0 * (from.x - x.x) + dx) + dy * (2.0 * (from.y - x.y) + dy);
            total += w * num / den;
        }
    }
    total
}

pub(super) fn median_with(
    points: &[Point2],
    a: &[f64],
    tol: f64,
    max_iters: usize,
) -> (Point2, Vec<f64>) {
    let mut y = mean_with(points, a);
    let mut d: Vec<f64> = points.iter().map(|x| x.distance(&y)).collect();
    let mut objective: f64 = a.iter().zip(&d).map(|(w, di)| w * di).sum();
    let mut history = vec![objective];
    let (mut dw, mut dn) = (Vec::with_capacity(d.len()), Vec::with_capacity(d.len()));
    for _ in 0..max_iters {
        let step = step_from(points, a, &y, &d);
        let mut next = (
            step.weiszfeld,
            change_to(points, a, &y, &d, &step.weiszfeld, &mut dw),
        );
        if let Some(n) = step.newton {
            let change = change_to(points, a, &y, &d, &n, &mut dn);
            if change < next.1 {
                next = (n, change);
                std::mem::swap(&mut dw, &mut dn);
            }
        }
        // The floor can break the descent property next to a data point.
        if !(next.1 <= 0.0) {
            break;
        }
        let moved = next.0.distance(&y);
        y = next.0;
        std::mem::swap(&mut d, &mut dw);
        objective += next.1;
        history.push(objective);
        if moved < tol {
            break;
        }
    }
    // Weiszfeld crawls towards a minimizer that sits on a data point. Test the
    // nearest one directly: it is optimal when the unit pulls of all other
    // points, weighted, do not outweigh the weight resting on it.
    let nearest = points
        .iter()
        .zip(a)
        .zip(&d)
        .filter(|((_, w), _)| **w > 0.0)
        .min_by(|(_, p), (_, q)| p.total_cmp(q))
        .map(|((p, _), _)| *p);
    if let Some(v) = nearest {
        if v != y && vertex_is_optimal(points, a, &v) {
            let change = change_to(points, a, &y, &d, &v, &mut dw);
            if change <= 0.0 {
                y = v;
                history.push(objective + change);
            }
        }
    }
    (y, history)
}

fn vertex_is_optimal(points: &[Point2], a: &[f64], v: &Point2) -> bool {
    let (mut rx, mut ry, mut resting) = (0.0, 0.0, 0.0);
    for (x, w) in points.iter().zip(a) {
        let d = x.distance(v);
        if d == 0.0 {
            resting += w;
        } else {
            rx += w * (x.x - v.x) / d;
            ry += w * (x.y - v.y) / d;
        }
    }
    rx.hypot(ry) <= resting
}
