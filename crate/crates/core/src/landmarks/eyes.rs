use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rangeio::RangeImage;

use super::{Curvature, CurvatureMap, Landmark};

/// Which curvature magnitude ranks eye-corner candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreMode {
    /// |H|
    #[default]
    Mean,
    /// |K|
    Gaussian,
    /// |k1|
    Principal,
}

impl ScoreMode {
    pub fn score(self, k: &Curvature) -> f64 {
        match self {
            ScoreMode::Mean => k.mean.abs(),
            ScoreMode::Gaussian => k.gaussian.abs(),
            ScoreMode::Principal => k.k1.abs(),
        }
    }
}

impl std::str::FromStr for ScoreMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(ScoreMode::Mean),
            "gaussian" => Ok(ScoreMode::Gaussian),
            "principal" => Ok(ScoreMode::Principal),
            other => Err(Error::Config(format!(
                "unknown score mode {other:?} (expected mean, gaussian or principal)"
            ))),
        }
    }
}

/// Search band for the inner eye corners, in rows above the nose tip, and the
/// non-maximum-suppression radius in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EyeRoiSpec {
    pub min_rows_above: usize,
    pub max_rows_above: usize,
    pub suppression_radius: f64,
    pub score: ScoreMode,
}

impl Default for EyeRoiSpec {
    fn default() -> Self {
        Self {
            min_rows_above: 5,
            max_rows_above: 35,
            suppression_radius: 8.0,
            score: ScoreMode::Mean,
        }
    }
}

impl EyeRoiSpec {
    pub fn validate(&self) -> Result<()> {
        if self.min_rows_above > self.max_rows_above {
            return Err(Error::Config(format!(
                "eye band is empty: {} > {} rows above the nose",
                self.min_rows_above, self.max_rows_above
            )));
        }
        if !(self.suppression_radius.is_finite() && self.suppression_radius >= 0.0) {
            return Err(Error::Config("suppression radius must be >= 0".into()));
        }
        Ok(())
    }
}

/// An eye-corner landmark and its curvature score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Corner {
    #[serde(flatten)]
    pub landmark: Landmark,
    pub curvature: f64,
}

/// The two inner eye corners, leftmost column first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EyeCorners {
    pub first: Corner,
    pub second: Corner,
}

impl EyeCorners {
    /// Orders two corners by column, then row.
    pub fn new(a: Corner, b: Corner) -> Self {
        if (a.landmark.col, a.landmark.row) <= (b.landmark.col, b.landmark.row) {
            Self {
                first: a,
                second: b,
            }
        } else {
            Self {
                first: b,
                second: a,
            }
        }
    }
}

/// Top-2 curvature responses in the band above the nose, the second taken
/// outside the suppression disk of the first. Ties go to row-major order.
pub fn detect_eye_corners(
    image: &RangeImage,
    curv: &CurvatureMap,
    nose: &Landmark,
    roi: &EyeRoiSpec,
) -> Result<EyeCorners> {
    roi.validate()?;
    if (curv.width(), curv.height()) != (image.width(), image.height()) {
        return Err(Error::InvalidImage(
            "curvature map and image sizes differ".into(),
        ));
    }
    if nose.row < roi.min_rows_above {
        return Err(Error::EyeCornersNotFound(format!(
            "nose at row {} leaves no room for the eye band",
            nose.row
        )));
    }
    let row_hi = nose.row - roi.min_rows_above;
    let row_lo = nose.row.saturating_sub(roi.max_rows_above);

    let candidates: Vec<(usize, usize, f64)> = (row_lo..=row_hi)
        .flat_map(|r| (0..curv.width()).map(move |c| (r, c)))
        .filter_map(|(r, c)| curv.at(r, c).map(|k| (r, c, roi.score.score(&k))))
        .collect();

    let pick = |exclude: Option<(usize, usize)>| {
        candidates
            .iter()
            .filter(|&&(r, c, _)| match exclude {
                None => true,
                Some((er, ec)) => pixel_distance((r, c), (er, ec)) >= roi.suppression_radius,
            })
            .fold(
                None,
                |best: Option<(usize, usize, f64)>, &cand| match best {
                    Some(b) if b.2 >= cand.2 => Some(b),
                    _ => Some(cand),
                },
            )
    };

    let Some(a) = pick(None) else {
        return Err(Error::EyeCornersNotFound(format!(
            "no curvature defined in rows {row_lo}..={row_hi}"
        )));
    };
    let Some(b) = pick(Some((a.0, a.1))) else {
        return Err(Error::EyeCornersNotFound(format!(
            "only one curvature maximum in rows {row_lo}..={row_hi}"
        )));
    };
    let corner = |(r, c, s): (usize, usize, f64)| -> Result<Corner> {
        Ok(Corner {
            landmark: Landmark::at(image, r, c)?,
            curvature: s,
        })
    };
    Ok(EyeCorners::new(corner(a)?, corner(b)?))
}

fn pixel_distance(a: (usize, usize), b: (usize, usize)) -> f64 {
    let dr = a.0 as f64 - b.0 as f64;
    let dc = a.1 as f64 - b.1 as f64;
    (dr * dr + dc * dc).sqrt()
}
