//! Invariant suites shared by the `invariants` and `acceptance` targets.

use proptest::collection::vec;
use proptest::prelude::*;
use proptest::test_runner::{TestRng, TestRunner};
use ransaac::aggregation::{
    fit_from_cloud, geometric_median_objective, predefined_source_points,
    weighted_geometric_median, weighted_mean, weiszfeld, AggConfig, EstimateCloud, ModelKind,
};
use ransaac::geometry::{dlt_fit, symmetric_transfer_error};
use ransaac::{estimate, Match, Method, Point2};

use super::{exact_matches, extents, homography, point, quad, tame};

pub fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn cloud_point() -> impl Strategy<Value = Point2> {
    (-100.0f64..100.0, -100.0f64..100.0).prop_map(|(x, y)| Point2::new(x, y))
}

fn weighted_cloud() -> impl Strategy<Value = (Vec<Point2>, Vec<f64>)> {
    (2usize..30).prop_flat_map(|n| (vec(cloud_point(), n), vec(0.1f64..50.0, n)))
}

fn gmed(points: &[Point2], weights: &[f64], p: f64) -> Point2 {
    weighted_geometric_median(points, weights, p, 1e-12, 1000).unwrap()
}

/// Minimizes `f` over a square by repeatedly halving a grid around its best node.
fn grid_minimize(f: &impl Fn(&Point2) -> f64, center: Point2, half: f64) -> Point2 {
    let (mut c, mut h) = (center, half);
    while h > 1e-7 {
        let mut best = (f64::INFINITY, c);
        for i in -20..=20 {
            for j in -20..=20 {
                let q = Point2::new(c.x + h * i as f64 / 20.0, c.y + h * j as f64 / 20.0);
                let v = f(&q);
                if v < best.0 {
                    best = (v, q);
                }
            }
        }
        c = best.1;
        h /= 2.0;
    }
    c
}

fn rigid(theta: f64, t: (f64, f64)) -> impl Fn(&Point2) -> Point2 {
    let (c, s) = (theta.cos(), theta.sin());
    move |p| Point2::new(c * p.x - s * p.y + t.0, s * p.x + c * p.y + t.1)
}

fn noisy_matches() -> impl Strategy<Value = Vec<Match>> {
    (
        homography(),
        vec(point(), 12..40),
        vec(point(), 0..20),
        vec((-1.0f64..1.0, -1.0f64..1.0), 40),
    )
        .prop_filter_map("horizon", |(h, inl, out, noise)| {
            if !tame(&h) {
                return None;
            }
            let mut m = exact_matches(&h, &inl)?;
            for (x, (nx, ny)) in m.iter_mut().zip(noise) {
                x.dst = Point2::new(x.dst.x + nx, x.dst.y + ny);
            }
            for pair in out.chunks(2).filter(|c| c.len() == 2) {
                m.push(Match::new(pair[0], pair[1]));
            }
            Some(m)
        })
}

fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let config = config(cases);
    let rng = TestRng::deterministic_rng(config.rng_algorithm);
    TestRunner::new_with_rng(config, rng)
        .run(&strategy, test)
        .map_err(|e| e.to_string())
}

pub fn dlt_exactness(cases: u32) -> Result<(), String> {
    run(cases, (homography(), quad()), |(h, q)| {
        prop_assume!(tame(&h));
        let m = exact_matches(&h, &q).unwrap();
        let fit = dlt_fit(&m).unwrap();
        prop_assert!(fit.max_abs_diff(&h) < 1e-8, "{} vs {}", fit, h);
        for x in &m {
            prop_assert!(symmetric_transfer_error(&fit, x).unwrap() < 1e-10);
        }
        Ok(())
    })
}

pub fn weiszfeld_monotonicity(cases: u32) -> Result<(), String> {
    run(cases, (weighted_cloud(), 0.0f64..6.0), |((pts, w), p)| {
        let (_, history) = weiszfeld(&pts, &w, p, 1e-12, 200).unwrap();
        for pair in history.windows(2) {
            prop_assert!(pair[1] <= pair[0]);
        }
        Ok(())
    })
}

pub fn fermat_point(cases: u32) -> Result<(), String> {
    run(
        cases,
        (cloud_point(), cloud_point(), cloud_point()),
        |(a, b, c)| {
            let pts = [a, b, c];
            let w = [1.0; 3];
            let y = weighted_geometric_median(&pts, &w, 1.0, 1e-13, 100_000).unwrap();
            let f = |q: &Point2| geometric_median_objective(&pts, &w, 1.0, q).unwrap();
            let centroid = Point2::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0);
            // The objective has kinks at the vertices; they are candidates too.
            let oracle = [grid_minimize(&f, centroid, 200.0), a, b, c]
                .into_iter()
                .min_by(|p, q| f(p).total_cmp(&f(q)))
                .unwrap();
            prop_assert!(y.distance(&oracle) <= 1e-4, "{:?} vs {:?}", y, oracle);
            Ok(())
        },
    )
}

pub fn weight_scale_invariance(cases: u32) -> Result<(), String> {
    run(
        cases,
        (weighted_cloud(), 0.0f64..8.0, 1e-3f64..1e3),
        |((pts, w), p, c)| {
            let scaled: Vec<f64> = w.iter().map(|v| v * c).collect();
            let m0 = weighted_mean(&pts, &w, p).unwrap();
            let m1 = weighted_mean(&pts, &scaled, p).unwrap();
            prop_assert!(m0.distance(&m1) <= 1e-12);
            prop_assert!(gmed(&pts, &w, p).distance(&gmed(&pts, &scaled, p)) <= 1e-12);
            Ok(())
        },
    )
}

pub fn rigid_equivariance(cases: u32) -> Result<(), String> {
    run(
        cases,
        (
            weighted_cloud(),
            0.0f64..6.0,
            -3.2f64..3.2,
            (-500.0f64..500.0, -500.0f64..500.0),
        ),
        |((pts, w), p, theta, t)| {
            let g = rigid(theta, t);
            let moved: Vec<Point2> = pts.iter().map(&g).collect();
            let m = weighted_mean(&moved, &w, p).unwrap();
            prop_assert!(m.distance(&g(&weighted_mean(&pts, &w, p).unwrap())) <= 1e-9);
            prop_assert!(gmed(&moved, &w, p).distance(&g(&gmed(&pts, &w, p))) <= 1e-9);
            Ok(())
        },
    )
}

pub fn dominant_weight(cases: u32) -> Result<(), String> {
    run(
        cases,
        (cloud_point(), cloud_point(), cloud_point()),
        |(a, b, c)| {
            let pts = [a, b, c];
            let w = [2.0, 1.0, 1.0];
            prop_assert!(weighted_mean(&pts, &w, 50.0).unwrap().distance(&a) <= 1e-6);
            prop_assert!(gmed(&pts, &w, 50.0).distance(&a) <= 1e-6);
            Ok(())
        },
    )
}

pub fn aggregation_idempotence(cases: u32) -> Result<(), String> {
    run(
        cases,
        (
            homography(),
            1usize..20,
            vec(0.5f64..100.0, 20),
            0.0f64..6.0,
        ),
        |(h, copies, w, p)| {
            prop_assume!(tame(&h));
            let basis = predefined_source_points(&extents(), ModelKind::Homography);
            let projected: Vec<Point2> = basis
                .points()
                .iter()
                .map(|&s| h.project(s).unwrap())
                .collect();
            let mut cloud = EstimateCloud::new(basis.len());
            for wt in &w[..copies] {
                cloud.push(&projected, *wt);
            }
            for agg in [
                AggConfig::weighted_mean(p),
                AggConfig::weighted_geometric_median(p),
            ] {
                let (fit, _) = fit_from_cloud(&basis, &cloud, &agg).unwrap();
                prop_assert!(fit.max_abs_diff(&h) < 1e-9);
            }
            Ok(())
        },
    )
}

pub fn seed_determinism(cases: u32) -> Result<(), String> {
    let methods: Vec<Method> = Method::ALL
        .iter()
        .copied()
        .filter(|m| *m != Method::Oracle)
        .collect();
    run(
        cases,
        (noisy_matches(), prop::sample::select(methods), any::<u64>()),
        |(m, method, seed)| {
            let cfg = ransaac::MethodConfig::new(method, 1.0, 30);
            let a = estimate(&m, &cfg, seed, &extents(), None).unwrap();
            let b = estimate(&m, &cfg, seed, &extents(), None).unwrap();
            prop_assert_eq!(a, b);
            Ok(())
        },
    )
}

pub type Suite = (&'static str, fn(u32) -> Result<(), String>);

pub const ALL: [Suite; 8] = [
    ("DLT exactness", dlt_exactness),
    ("Weiszfeld monotonicity", weiszfeld_monotonicity),
    ("Fermat point oracle", fermat_point),
    ("weight-scale invariance", weight_scale_invariance),
    ("rigid equivariance", rigid_equivariance),
    ("dominant weight at p=50", dominant_weight),
    ("aggregation idempotence", aggregation_idempotence),
    ("determinism by seed", seed_determinism),
];
