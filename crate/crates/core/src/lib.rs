//! Robust homography estimation with hypothesis aggregation.
//!
//! Besides plain RANSAC, MSAC, LMedS and LO-RANSAC, the crate implements
//! RANSAAC: rather than keeping only the best hypothesis, every good one maps
//! a small set of source points into the second image and the final model is
//! fitted through a weighted aggregate of those projections.

pub mod aggregation;
pub mod benchmark;
pub mod error;
pub mod geometry;
pub mod io;
pub mod local_opt;
pub mod methods;
pub mod rng;
pub mod robust;

pub use error::{Error, Result};
pub use geometry::{Homography, ImageExtents, Match, Point2};
pub use methods::{estimate, Estimate, Method, MethodConfig};
