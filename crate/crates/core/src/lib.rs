//! Pose-orientation detection for 3D face range images.
//!
//! A frontal and a rotated range image of the same face are each cropped,
//! Otsu-masked and smoothed; the nose tip is the maximum 3x3 depth sum and the
//! inner eye corners are curvature maxima above it. The classifier then names
//! the axis (X, Y or Z) the second face was rotated about.
//!
//! [`synthface`] generates parametric faces with exact ground truth and
//! [`evalharness`] scores the pipeline over such datasets.

pub mod dataset;
pub mod error;
pub mod evalharness;
pub mod landmarks;
pub mod pipeline;
pub mod poseclassify;
pub mod preprocess;
pub mod rangeio;
pub mod synthface;

pub use error::{Error, Location, Result};
pub use evalharness::{
    evaluate, render_table, AccuracyTable, EvalMode, EvalRow, Evaluation, TableFormat,
};
pub use landmarks::{Corner, Curvature, EyeCorners, EyeRoiSpec, Landmark, ScoreMode};
pub use pipeline::{detect_pose, process_image, Detection, FaceLandmarks, RunConfig};
pub use poseclassify::{classify_pose, ClassifierConfig, PoseClass, PoseInput, PoseReport};
pub use preprocess::{CropSpec, SmoothSpec};
pub use rangeio::{DepthFormat, GridSpec, Point3, PointCloud, RangeImage};
pub use synthface::{Axis, LabeledSample, RotationSpec, SyntheticFaceSpec};
