#![allow(dead_code)]

pub mod invariants;

use proptest::prelude::*;
use ransaac::{Homography, ImageExtents, Match, Point2};

pub fn extents() -> ImageExtents {
    ImageExtents::new(1000.0, 800.0).unwrap()
}

/// Homographies of moderate distortion over a 1000x800 image.
pub fn homography() -> impl Strategy<Value = Homography> {
    (
        -0.6f64..0.6,
        0.6f64..1.5,
        0.6f64..1.5,
        -0.2f64..0.2,
        -200.0f64..200.0,
        -200.0f64..200.0,
        -2e-4f64..2e-4,
        -2e-4f64..2e-4,
    )
        .prop_map(|(t, sx, sy, k, tx, ty, g, h)| {
            let (c, s) = (t.cos(), t.sin());
            Homography::from_row_major(&[sx * c, -sy * s + k, tx, sx * s, sy * c, ty, g, h, 1.0])
                .unwrap()
        })
}

pub fn point() -> impl Strategy<Value = Point2> {
    (0.0f64..1000.0, 0.0f64..800.0).prop_map(|(x, y)| Point2::new(x, y))
}

fn area(a: &Point2, b: &Point2, c: &Point2) -> f64 {
    ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)).abs() / 2.0
}

/// Four points with no three of them close to collinear.
pub fn quad() -> impl Strategy<Value = [Point2; 4]> {
    [point(), point(), point(), point()].prop_filter("near-collinear", |q| {
        (0..4).all(|skip| {
            let t: Vec<&Point2> = q
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != skip)
                .map(|(_, p)| p)
                .collect();
            area(t[0], t[1], t[2]) > 2e4
        })
    })
}

pub fn exact_matches(h: &Homography, src: &[Point2]) -> Option<Vec<Match>> {
    src.iter()
        .map(|&p| h.project(p).ok().map(|q| Match::new(p, q)))
        .collect()
}

/// Keeps homographies whose projective terms stay tame over the image.
pub fn tame(h: &Homography) -> bool {
    let m = h.matrix();
    [(0.0, 0.0), (1000.0, 0.0), (0.0, 800.0), (1000.0, 800.0)]
        .iter()
        .all(|&(x, y)| {
            let w = (m[(2, 0)] * x + m[(2, 1)] * y + m[(2, 2)]) / m[(2, 2)];
            w > 0.5
        })
}
