//! Single-image landmarking pipeline and the two-image pose detector.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landmarks::{
    curvature_map, detect_eye_corners, detect_nose_tip, EyeCorners, EyeRoiSpec, Landmark,
};
use crate::poseclassify::{
    classify_pose, ClassifierConfig, PoseInput, PoseReport, DEFAULT_EPSILON,
};
use crate::preprocess::{crop_face, gaussian_smooth, otsu_threshold, CropSpec, SmoothSpec};
use crate::rangeio::RangeImage;

/// Every tunable of the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// `None` processes the whole image.
    pub crop: Option<CropSpec>,
    pub smooth: SmoothSpec,
    pub epsilon: f64,
    pub fit_window: usize,
    /// Millimeters per pixel for curvature units.
    pub pixel_pitch: f64,
    pub eyes: EyeRoiSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            crop: Some(CropSpec::default()),
            smooth: SmoothSpec::default(),
            epsilon: DEFAULT_EPSILON,
            fit_window: 7,
            pixel_pitch: 1.0,
            eyes: EyeRoiSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.smooth.validate()?;
        self.eyes.validate()?;
        ClassifierConfig::new(self.epsilon)?;
        if self.fit_window < 5 || self.fit_window % 2 == 0 {
            return Err(Error::Config(format!(
                "fit window must be odd and >= 5, got {}",
                self.fit_window
            )));
        }
        if !(self.pixel_pitch.is_finite() && self.pixel_pitch > 0.0) {
            return Err(Error::Config("pixel pitch must be > 0".into()));
        }
        Ok(())
    }

    pub fn classifier(&self) -> ClassifierConfig {
        ClassifierConfig {
            epsilon: self.epsilon,
        }
    }
}

/// Landmarks of one face in input-image coordinates. `origin` is the crop
/// offset of the processed image the landmarks were found in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceLandmarks {
    pub nose: Landmark,
    pub eyes: EyeCorners,
    pub origin: (usize, usize),
    pub otsu_threshold: f64,
}

/// Crop, Otsu mask and smooth.
pub fn preprocess(
    image: &RangeImage,
    config: &RunConfig,
) -> Result<(RangeImage, (usize, usize), f64)> {
    let (cropped, origin) = match &config.crop {
        Some(spec) => (crop_face(image, spec)?, (spec.row_start, spec.col_start)),
        None => (image.clone(), (0, 0)),
    };
    let otsu = otsu_threshold(&cropped)?;
    let smoothed = gaussian_smooth(&otsu.masked, &config.smooth)?;
    Ok((smoothed, origin, otsu.threshold))
}

/// Full single-image landmarking: preprocess, nose tip, curvature, eye corners.
pub fn process_image(image: &RangeImage, config: &RunConfig) -> Result<FaceLandmarks> {
    config.validate()?;
    let (processed, origin, threshold) = preprocess(image, config)?;
    let nose = detect_nose_tip(&processed)?;
    let curv = curvature_map(&processed, config.fit_window, config.pixel_pitch)?;
    let eyes = detect_eye_corners(&processed, &curv, &nose, &config.eyes)?;
    let shift = |lm: Landmark| Landmark {
        row: lm.row + origin.0,
        col: lm.col + origin.1,
        ..lm
    };
    let mut eyes = eyes;
    eyes.first.landmark = shift(eyes.first.landmark);
    eyes.second.landmark = shift(eyes.second.landmark);
    Ok(FaceLandmarks {
        nose: shift(nose),
        eyes,
        origin,
        otsu_threshold: threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub frontal: FaceLandmarks,
    pub rotated: FaceLandmarks,
    pub report: PoseReport,
}

/// Landmarks both images and classifies the rotation of the second relative
/// to the first. Landmarking failures name the image they occurred in.
pub fn detect_pose(
    frontal: &RangeImage,
    rotated: &RangeImage,
    config: &RunConfig,
) -> Result<Detection> {
    if (frontal.width(), frontal.height()) != (rotated.width(), rotated.height()) {
        return Err(Error::InvalidImage(format!(
            "frontal is {}x{} but rotated is {}x{}",
            frontal.width(),
            frontal.height(),
            rotated.width(),
            rotated.height()
        )));
    }
    let f = process_image(frontal, config).map_err(|e| e.context("frontal image"))?;
    let r = process_image(rotated, config).map_err(|e| e.context("rotated image"))?;
    let report = classify_pose(
        &PoseInput {
            frontal_nose: f.nose,
            rotated_nose: r.nose,
            rotated_eyes: r.eyes,
            frontal_eyes: Some(f.eyes),
        },
        &config.classifier(),
    );
    Ok(Detection {
        frontal: f,
        rotated: r,
        report,
    })
}
