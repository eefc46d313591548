//! Rotation-axis classification from nose and eye-corner landmarks.
//!
//! Columns are the horizontal (x) coordinate and rows the vertical (y) one.
//! The decision uses three pixel distances:
//!
//! * `eye_line_diff`: vertical offset between the two eye corners of the
//!   rotated face. Eyes stay level under X and Y rotations, so an offset above
//!   epsilon means a roll about Z.
//! * `nose_dcol` / `nose_drow`: horizontal and vertical displacement of the
//!   nose tip between the frontal and the rotated face. A yaw about Y moves the
//!   nose sideways more than up or down; a pitch about X does the opposite.
//!
//! Depth never enters the decision.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landmarks::{EyeCorners, Landmark};

/// Default eye-line tolerance in pixel rows.
pub const DEFAULT_EPSILON: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub epsilon: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl ClassifierConfig {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::Config(format!(
                "epsilon must be >= 0, got {epsilon}"
            )));
        }
        Ok(Self { epsilon })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseInput {
    pub frontal_nose: Landmark,
    pub rotated_nose: Landmark,
    pub rotated_eyes: EyeCorners,
    /// Carried through for reporting; the decision does not use it.
    pub frontal_eyes: Option<EyeCorners>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PoseClass {
    #[serde(rename = "rotated-x")]
    RotatedX,
    #[serde(rename = "rotated-y")]
    RotatedY,
    #[serde(rename = "rotated-z")]
    RotatedZ,
    #[serde(rename = "frontal")]
    Frontal,
}

impl PoseClass {
    pub fn as_str(self) -> &'static str {
        match self {
            PoseClass::RotatedX => "rotated-x",
            PoseClass::RotatedY => "rotated-y",
            PoseClass::RotatedZ => "rotated-z",
            PoseClass::Frontal => "frontal",
        }
    }
}

impl fmt::Display for PoseClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseReport {
    pub pose: PoseClass,
    pub eye_line_diff: usize,
    pub nose_dcol: usize,
    pub nose_drow: usize,
    pub epsilon: f64,
    pub trace: Vec<String>,
}

/// The decision rule on the three measured distances.
pub fn decide(eye_line_diff: usize, nose_dcol: usize, nose_drow: usize, epsilon: f64) -> PoseClass {
    if eye_line_diff as f64 > epsilon {
        PoseClass::RotatedZ
    } else if (nose_dcol, nose_drow) != (0, 0) && nose_dcol >= nose_drow {
        PoseClass::RotatedY
    } else if nose_drow > nose_dcol {
        PoseClass::RotatedX
    } else {
        PoseClass::Frontal
    }
}

pub fn classify_pose(input: &PoseInput, config: &ClassifierConfig) -> PoseReport {
    let eps = config.epsilon;
    let eyes = &input.rotated_eyes;
    let diff = eyes.first.landmark.row.abs_diff(eyes.second.landmark.row);
    let dcol = input.frontal_nose.col.abs_diff(input.rotated_nose.col);
    let drow = input.frontal_nose.row.abs_diff(input.rotated_nose.row);

    let mut trace = vec![format!(
        "eye-line diff |{} - {}| = {diff} px vs epsilon {eps}",
        eyes.first.landmark.row, eyes.second.landmark.row
    )];
    let pose = decide(diff, dcol, drow, eps);
    if pose == PoseClass::RotatedZ {
        trace.push(format!("{diff} > {eps}: eyes not level, rotated about Z"));
    } else {
        trace.push(format!("{diff} <= {eps}: eyes level, not a Z rotation"));
        trace.push(format!(
            "nose displacement: dcol |{} - {}| = {dcol}, drow |{} - {}| = {drow}",
            input.frontal_nose.col,
            input.rotated_nose.col,
            input.frontal_nose.row,
            input.rotated_nose.row
        ));
        trace.push(match pose {
            PoseClass::RotatedY => format!("dcol {dcol} >= drow {drow}: rotated about Y"),
            PoseClass::RotatedX => format!("drow {drow} > dcol {dcol}: rotated about X"),
            _ => "nose did not move: frontal".to_string(),
        });
    }
    PoseReport {
        pose,
        eye_line_diff: diff,
        nose_dcol: dcol,
        nose_drow: drow,
        epsilon: eps,
        trace,
    }
}
