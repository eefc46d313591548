//! Nose-tip and inner eye-corner landmarks.
//!
//! The nose tip is the pixel whose 3x3 neighborhood has the largest depth sum
//! (depth grows toward the sensor, so the nose is the "brightest" region).
//! Eye corners are the two strongest curvature responses in a band above the
//! nose, kept apart by non-maximum suppression.

mod curvature;
mod eyes;
mod nose;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rangeio::RangeImage;

pub use curvature::{curvature_map, Curvature, CurvatureMap, QuadricFit};
pub use eyes::{detect_eye_corners, Corner, EyeCorners, EyeRoiSpec, ScoreMode};
pub use nose::detect_nose_tip;

/// A facial feature point on the grid. `col` is the horizontal coordinate,
/// `row` the vertical one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub row: usize,
    pub col: usize,
    pub depth: f64,
}

impl Landmark {
    /// Landmark at a valid pixel of `image`.
    pub fn at(image: &RangeImage, row: usize, col: usize) -> Result<Self> {
        let depth = image.depth(row, col).ok_or_else(|| {
            Error::InvalidImage(format!("pixel ({row}, {col}) is not a valid pixel"))
        })?;
        Ok(Self { row, col, depth })
    }
}
