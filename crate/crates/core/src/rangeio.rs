//! Depth grids, point clouds and their on-disk formats.
//!
//! Depth polarity is normalized on load: larger values are closer to the
//! sensor. Sources that store distance-from-sensor are negated by the loaders
//! when asked to with [`DepthConvention::DistanceFromSensor`].

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Depth stored at invalid pixels. Numeric kernels never read it.
pub const INVALID_DEPTH: f64 = 0.0;

/// Rectangular depth grid with a validity mask, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeImage {
    width: usize,
    height: usize,
    depth: Vec<f64>,
    valid: Vec<bool>,
}

impl RangeImage {
    /// Builds an image, checking the size invariants. Depth at invalid pixels
    /// is replaced with [`INVALID_DEPTH`]; a non-finite depth at a valid pixel
    /// is an error.
    pub fn new(width: usize, height: usize, mut depth: Vec<f64>, valid: Vec<bool>) -> Result<Self> {
        if width < 3 || height < 3 {
            return Err(Error::Dimension { width, height });
        }
        let n = width * height;
        if depth.len() != n || valid.len() != n {
            return Err(Error::InvalidImage(format!(
                "expected {n} depth and mask entries, got {} and {}",
                depth.len(),
                valid.len()
            )));
        }
        for (i, (z, &ok)) in depth.iter_mut().zip(&valid).enumerate() {
            if !ok {
                *z = INVALID_DEPTH;
            } else if !z.is_finite() {
                return Err(Error::InvalidImage(format!(
                    "non-finite depth at row {}, col {}",
                    i / width,
                    i % width
                )));
            }
        }
        Ok(Self {
            width,
            height,
            depth,
            valid,
        })
    }

    /// Fully valid image from a row-major depth vector.
    pub fn from_depths(width: usize, height: usize, depth: Vec<f64>) -> Result<Self> {
        let valid = vec![true; depth.len()];
        Self::new(width, height, depth, valid)
    }

    /// Builds an image from a per-pixel closure returning `None` for invalid
    /// pixels.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> Option<f64>,
    ) -> Result<Self> {
        let mut depth = Vec::with_capacity(width * height);
        let mut valid = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                match f(row, col) {
                    Some(z) => {
                        depth.push(z);
                        valid.push(true);
                    }
                    None => {
                        depth.push(INVALID_DEPTH);
                        valid.push(false);
                    }
                }
            }
        }
        Self::new(width, height, depth, valid)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Row-major depth buffer, sentinel at invalid pixels.
    pub fn depths(&self) -> &[f64] {
        &self.depth
    }

    pub fn mask(&self) -> &[bool] {
        &self.valid
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    #[inline]
    pub fn is_valid(&self, row: usize, col: usize) -> bool {
        row < self.height && col < self.width && self.valid[self.index(row, col)]
    }

    /// Depth at a valid pixel, `None` for invalid or out-of-bounds pixels.
    #[inline]
    pub fn depth(&self, row: usize, col: usize) -> Option<f64> {
        if self.is_valid(row, col) {
            Some(self.depth[self.index(row, col)])
        } else {
            None
        }
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Minimum and maximum over valid pixels.
    pub fn depth_range(&self) -> Option<(f64, f64)> {
        self.valid_depths().fold(None, |acc, z| match acc {
            None => Some((z, z)),
            Some((lo, hi)) => Some((lo.min(z), hi.max(z))),
        })
    }

    pub fn valid_depths(&self) -> impl Iterator<Item = f64> + '_ {
        self.depth
            .iter()
            .zip(&self.valid)
            .filter(|(_, &ok)| ok)
            .map(|(&z, _)| z)
    }

    /// Copy of this image with additional pixels invalidated.
    pub fn with_mask(&self, keep: impl Fn(usize, f64) -> bool) -> Self {
        let mut valid = self.valid.clone();
        let mut depth = self.depth.clone();
        for i in 0..valid.len() {
            if valid[i] && !keep(i, depth[i]) {
                valid[i] = false;
                depth[i] = INVALID_DEPTH;
            }
        }
        Self {
            width: self.width,
            height: self.height,
            depth,
            valid,
        }
    }

    pub(crate) fn from_parts_unchecked(
        width: usize,
        height: usize,
        depth: Vec<f64>,
        valid: Vec<bool>,
    ) -> Self {
        debug_assert_eq!(depth.len(), width * height);
        debug_assert_eq!(valid.len(), width * height);
        Self {
            width,
            height,
            depth,
            valid,
        }
    }
}

/// A 3D point in millimeters; `z` grows toward the sensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    points: Vec<Point3>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        if let Some(i) = points
            .iter()
            .position(|p| !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()))
        {
            return Err(Error::InvalidImage(format!(
                "point {i} has a non-finite coordinate"
            )));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub(crate) fn from_points_unchecked(points: Vec<Point3>) -> Self {
        Self { points }
    }
}

/// Mapping from world (x, y) onto grid columns and rows. Columns follow x,
/// rows follow y; cell `(row, col)` covers the half-open box starting at
/// `(x_min + col * pitch_x, y_min + row * pitch_y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl GridSpec {
    pub fn new(
        width: usize,
        height: usize,
        x_range: (f64, f64),
        y_range: (f64, f64),
    ) -> Result<Self> {
        let spec = Self {
            width,
            height,
            x_min: x_range.0,
            x_max: x_range.1,
            y_min: y_range.0,
            y_max: y_range.1,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < 3 || self.height < 3 {
            return Err(Error::Dimension {
                width: self.width,
                height: self.height,
            });
        }
        let ok = |lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && lo < hi;
        if !ok(self.x_min, self.x_max) || !ok(self.y_min, self.y_max) {
            return Err(Error::Config(format!(
                "degenerate grid extents x [{}, {}), y [{}, {})",
                self.x_min, self.x_max, self.y_min, self.y_max
            )));
        }
        Ok(())
    }

    pub fn pitch_x(&self) -> f64 {
        (self.x_max - self.x_min) / self.width as f64
    }

    pub fn pitch_y(&self) -> f64 {
        (self.y_max - self.y_min) / self.height as f64
    }

    /// Grid cell `(row, col)` containing world point `(x, y)`.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let c = ((x - self.x_min) / self.pitch_x()).floor();
        let r = ((y - self.y_min) / self.pitch_y()).floor();
        if c >= 0.0 && r >= 0.0 && c < self.width as f64 && r < self.height as f64 {
            Some((r as usize, c as usize))
        } else {
            None
        }
    }

    pub fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        (
            self.x_min + (col as f64 + 0.5) * self.pitch_x(),
            self.y_min + (row as f64 + 0.5) * self.pitch_y(),
        )
    }
}

/// Renders a cloud orthographically onto a grid. The closest point (largest
/// `z`) wins each cell; cells with no point are invalid.
pub fn project_to_range(cloud: &PointCloud, spec: &GridSpec) -> Result<RangeImage> {
    spec.validate()?;
    let n = spec.width * spec.height;
    let mut depth = vec![f64::NEG_INFINITY; n];
    let mut hit = false;
    for p in cloud.points() {
        if let Some((r, c)) = spec.cell_of(p.x, p.y) {
            let cell = &mut depth[r * spec.width + c];
            if p.z > *cell {
                *cell = p.z;
            }
            hit = true;
        }
    }
    if !hit {
        return Err(Error::EmptyProjection);
    }
    let valid: Vec<bool> = depth.iter().map(|z| z.is_finite()).collect();
    RangeImage::new(spec.width, spec.height, depth, valid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepthFormat {
    Pgm16,
    Csv,
}

impl DepthFormat {
    /// Guesses the format from a file extension (`.pgm` or `.csv`).
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "pgm" => Some(DepthFormat::Pgm16),
            "csv" => Some(DepthFormat::Csv),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            DepthFormat::Pgm16 => "pgm",
            DepthFormat::Csv => "csv",
        }
    }
}

impl FromStr for DepthFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pgm16" | "pgm" => Ok(DepthFormat::Pgm16),
            "csv" => Ok(DepthFormat::Csv),
            other => Err(Error::Config(format!("unknown depth format {other:?}"))),
        }
    }
}

/// What the stored numbers mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DepthConvention {
    /// Larger stored value is closer to the sensor; loaded as is.
    #[default]
    CloserIsLarger,
    /// Stored value is distance from the sensor; negated on load.
    DistanceFromSensor,
}

pub fn load_depth_grid(path: &Path, format: DepthFormat) -> Result<RangeImage> {
    load_depth_grid_with(path, format, DepthConvention::default())
}

pub fn load_depth_grid_with(
    path: &Path,
    format: DepthFormat,
    convention: DepthConvention,
) -> Result<RangeImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let image = match format {
        DepthFormat::Csv => {
            let text = std::str::from_utf8(&bytes)
                .map_err(|e| Error::parse_offset(e.valid_up_to(), "file is not valid UTF-8"))?;
            parse_csv(text)?
        }
        DepthFormat::Pgm16 => parse_pgm16(&bytes)?,
    };
    Ok(match convention {
        DepthConvention::CloserIsLarger => image,
        DepthConvention::DistanceFromSensor => {
            let depth = image
                .depth
                .iter()
                .zip(&image.valid)
                .map(|(&z, &ok)| if ok { -z } else { INVALID_DEPTH })
                .collect();
            RangeImage::from_parts_unchecked(image.width, image.height, depth, image.valid)
        }
    })
}

pub fn save_depth_grid(image: &RangeImage, path: &Path, format: DepthFormat) -> Result<()> {
    let bytes = match format {
        DepthFormat::Csv => encode_csv(image).into_bytes(),
        DepthFormat::Pgm16 => encode_pgm16(image),
    };
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))
}

/// One row per line, comma separated, empty cell = invalid. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn encode_csv(image: &RangeImage) -> String {
    let mut out = String::with_capacity(image.width * image.height * 8);
    for row in 0..image.height {
        for col in 0..image.width {
            if col > 0 {
                out.push(',');
            }
            if let Some(z) = image.depth(row, col) {
                write!(out, "{z}").expect("writing to a String cannot fail");
            }
        }
        out.push('\n');
    }
    out
}

pub fn parse_csv(text: &str) -> Result<RangeImage> {
    let mut width = None;
    let mut depth = Vec::new();
    let mut valid = Vec::new();
    let mut height = 0;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            // Blank lines are only allowed at the end of the file.
            if text.lines().skip(i).all(|l| l.trim().is_empty()) {
                break;
            }
            return Err(Error::parse_line(line_no, "blank line inside grid"));
        }
        let mut cells = 0;
        for cell in line.split(',') {
            let cell = cell.trim();
            if cell.is_empty() {
                depth.push(INVALID_DEPTH);
                valid.push(false);
            } else {
                let z: f64 = cell
                    .parse()
                    .map_err(|_| Error::parse_line(line_no, format!("bad depth value {cell:?}")))?;
                if !z.is_finite() {
                    return Err(Error::parse_line(
                        line_no,
                        format!("non-finite depth {cell:?}"),
                    ));
                }
                depth.push(z);
                valid.push(true);
            }
            cells += 1;
        }
        match width {
            None => width = Some(cells),
            Some(w) if w != cells => {
                return Err(Error::parse_line(
                    line_no,
                    format!("expected {w} cells, found {cells}"),
                ))
            }
            _ => {}
        }
        height += 1;
    }
    let width = width.unwrap_or(0);
    RangeImage::new(width, height, depth, valid)
}

const PGM_RANGE_TAG: &str = "# depth-range";
const PGM_MAX: u16 = 65535;

/// Binary PGM, maxval 65535, big-endian samples, value 0 = invalid. Valid
/// depths are mapped linearly onto 1..=65535; the original range is kept in a
/// header comment so the loader can undo the mapping.
pub fn encode_pgm16(image: &RangeImage) -> Vec<u8> {
    let (lo, hi) = image.depth_range().unwrap_or((0.0, 0.0));
    let span = hi - lo;
    let levels = f64::from(PGM_MAX - 1);
    let mut out = format!(
        "P5\n{PGM_RANGE_TAG} {lo:e} {hi:e}\n{} {}\n{PGM_MAX}\n",
        image.width, image.height
    )
    .into_bytes();
    out.reserve(image.width * image.height * 2);
    for (&z, &ok) in image.depth.iter().zip(&image.valid) {
        let q: u16 = if !ok {
            0
        } else if span > 0.0 {
            1 + ((z - lo) / span * levels).round().clamp(0.0, levels) as u16
        } else {
            1
        };
        out.extend_from_slice(&q.to_be_bytes());
    }
    out
}

pub fn parse_pgm16(bytes: &[u8]) -> Result<RangeImage> {
    let mut pos = 0;
    let mut range = None;

    let next_token = |pos: &mut usize, range: &mut Option<(f64, f64)>| -> Result<String> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                let start = *pos;
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                let comment = String::from_utf8_lossy(&bytes[start..*pos]);
                if let Some(rest) = comment.strip_prefix(PGM_RANGE_TAG) {
                    let nums: Vec<f64> = rest
                        .split_whitespace()
                        .map(str::parse)
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| Error::parse_offset(start, "bad depth-range comment"))?;
                    if nums.len() != 2 || !nums.iter().all(|v| v.is_finite()) || nums[0] > nums[1] {
                        return Err(Error::parse_offset(start, "bad depth-range comment"));
                    }
                    *range = Some((nums[0], nums[1]));
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
            *pos += 1;
        }
        if start == *pos {
            return Err(Error::parse_offset(start, "unexpected end of header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };

    let magic = next_token(&mut pos, &mut range)?;
    if magic != "P5" {
        return Err(Error::parse_offset(
            0,
            format!("expected magic P5, found {magic:?}"),
        ));
    }
    let mut header_num = |what: &str| -> Result<usize> {
        let at = pos;
        let tok = next_token(&mut pos, &mut range)?;
        tok.parse()
            .map_err(|_| Error::parse_offset(at, format!("bad {what} {tok:?}")))
    };
    let width = header_num("width")?;
    let height = header_num("height")?;
    let maxval = header_num("maxval")?;
    if maxval != usize::from(PGM_MAX) {
        return Err(Error::parse_offset(
            pos,
            format!("expected maxval 65535, found {maxval}"),
        ));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::parse_offset(pos, "missing whitespace after maxval"));
    }
    pos += 1;
    if width < 3 || height < 3 {
        return Err(Error::Dimension { width, height });
    }
    let n = width * height;
    let raster = &bytes[pos..];
    if raster.len() < 2 * n {
        return Err(Error::parse_offset(
            bytes.len(),
            format!(
                "raster truncated: need {} bytes, have {}",
                2 * n,
                raster.len()
            ),
        ));
    }
    let levels = f64::from(PGM_MAX - 1);
    let mut depth = Vec::with_capacity(n);
    let mut valid = Vec::with_capacity(n);
    for pair in raster[..2 * n].chunks_exact(2) {
        let q = u16::from_be_bytes([pair[0], pair[1]]);
        if q == 0 {
            depth.push(INVALID_DEPTH);
            valid.push(false);
        } else {
            let z = match range {
                Some((lo, hi)) => lo + f64::from(q - 1) / levels * (hi - lo),
                None => f64::from(q),
            };
            depth.push(z);
            valid.push(true);
        }
    }
    RangeImage::new(width, height, depth, valid)
}
