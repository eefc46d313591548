//! Face-region cropping, Otsu face/background separation and Gaussian
//! smoothing of range images.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rangeio::{RangeImage, INVALID_DEPTH};

/// Number of histogram bins used by [`otsu_threshold`].
pub const OTSU_BINS: usize = 256;

/// Half-open row and column ranges of a crop window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CropSpec {
    pub row_start: usize,
    pub row_end: usize,
    pub col_start: usize,
    pub col_end: usize,
}

impl CropSpec {
    pub const fn new(rows: (usize, usize), cols: (usize, usize)) -> Self {
        Self {
            row_start: rows.0,
            row_end: rows.1,
            col_start: cols.0,
            col_end: cols.1,
        }
    }

    pub fn full(image: &RangeImage) -> Self {
        Self::new((0, image.height()), (0, image.width()))
    }

    pub fn rows(&self) -> usize {
        self.row_end.saturating_sub(self.row_start)
    }

    pub fn cols(&self) -> usize {
        self.col_end.saturating_sub(self.col_start)
    }
}

impl Default for CropSpec {
    /// Central window of a 100x100 scan: a 70-column face-width band spanning
    /// forehead to chin.
    fn default() -> Self {
        Self::new((10, 90), (15, 85))
    }
}

pub fn crop_face(image: &RangeImage, spec: &CropSpec) -> Result<RangeImage> {
    let in_bounds = spec.row_start < spec.row_end
        && spec.col_start < spec.col_end
        && spec.row_end <= image.height()
        && spec.col_end <= image.width();
    if !in_bounds || spec.rows() < 3 || spec.cols() < 3 {
        return Err(Error::CropBounds {
            row_start: spec.row_start,
            row_end: spec.row_end,
            col_start: spec.col_start,
            col_end: spec.col_end,
            width: image.width(),
            height: image.height(),
        });
    }
    let (w, h) = (spec.cols(), spec.rows());
    let mut depth = Vec::with_capacity(w * h);
    let mut valid = Vec::with_capacity(w * h);
    for row in spec.row_start..spec.row_end {
        let start = image.index(row, spec.col_start);
        depth.extend_from_slice(&image.depths()[start..start + w]);
        valid.extend_from_slice(&image.mask()[start..start + w]);
    }
    Ok(RangeImage::from_parts_unchecked(w, h, depth, valid))
}

/// 256-bin histogram of the valid depths together with the depth span it
/// covers. `None` when the image has no valid pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthHistogram {
    pub counts: [u64; OTSU_BINS],
    pub lo: f64,
    pub hi: f64,
}

impl DepthHistogram {
    pub fn of(image: &RangeImage) -> Option<Self> {
        let (lo, hi) = image.depth_range()?;
        let mut counts = [0u64; OTSU_BINS];
        for z in image.valid_depths() {
            counts[bin_of(z, lo, hi)] += 1;
        }
        Some(Self { counts, lo, hi })
    }
}

/// Bin index of `z` for a histogram spanning `[lo, hi]`; `hi` lands in the
/// last bin.
#[inline]
pub fn bin_of(z: f64, lo: f64, hi: f64) -> usize {
    if hi <= lo {
        return 0;
    }
    let b = ((z - lo) / (hi - lo) * OTSU_BINS as f64).floor();
    (b.max(0.0) as usize).min(OTSU_BINS - 1)
}

/// Bin `t` maximizing the between-class variance when bins `0..=t` form the
/// background class. Only splits with both classes non-empty compete; ties go
/// to the lowest `t`. `None` when every sample sits in one bin.
pub fn otsu_bin(counts: &[u64; OTSU_BINS]) -> Option<usize> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return None;
    }
    let n = total as f64;
    let sum_all: f64 = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| i as f64 * c as f64)
        .sum();

    let mut best: Option<(usize, f64)> = None;
    let mut w0 = 0u64;
    let mut sum0 = 0.0;
    for (t, &c) in counts.iter().enumerate().take(OTSU_BINS - 1) {
        w0 += c;
        sum0 += t as f64 * c as f64;
        if w0 == 0 || w0 == total {
            continue;
        }
        let p0 = w0 as f64 / n;
        let p1 = 1.0 - p0;
        let mu0 = sum0 / w0 as f64;
        let mu1 = (sum_all - sum0) / (total - w0) as f64;
        let var = p0 * p1 * (mu0 - mu1) * (mu0 - mu1);
        if best.is_none_or(|(_, v)| var > v) {
            best = Some((t, var));
        }
    }
    best.map(|(t, _)| t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OtsuOutcome {
    /// Depth separating background (at or below) from face (above).
    pub threshold: f64,
    /// Winning histogram bin, `None` for a degenerate histogram.
    pub bin: Option<usize>,
    pub masked: RangeImage,
}

impl OtsuOutcome {
    /// All valid depths were equal; nothing was masked.
    pub fn is_degenerate(&self) -> bool {
        self.bin.is_none()
    }
}

/// Separates the face from the background. Valid pixels at or below the
/// returned threshold are invalidated; the rest keep their depth.
pub fn otsu_threshold(image: &RangeImage) -> Result<OtsuOutcome> {
    let hist = DepthHistogram::of(image)
        .ok_or_else(|| Error::InvalidImage("image has no valid pixel".into()))?;
    let Some(t) = otsu_bin(&hist.counts) else {
        return Ok(OtsuOutcome {
            threshold: hist.lo,
            bin: None,
            masked: image.clone(),
        });
    };

    // Midpoint of the gap between the two classes, so that the class
    // membership and `depth <= threshold` agree exactly.
    let mut below = f64::NEG_INFINITY;
    let mut above = f64::INFINITY;
    for z in image.valid_depths() {
        if bin_of(z, hist.lo, hist.hi) <= t {
            below = below.max(z);
        } else {
            above = above.min(z);
        }
    }
    let mut threshold = below + (above - below) / 2.0;
    if threshold >= above {
        threshold = below;
    }
    let masked = image.with_mask(|_, z| z > threshold);
    Ok(OtsuOutcome {
        threshold,
        bin: Some(t),
        masked,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothSpec {
    pub sigma: f64,
    pub radius: usize,
}

impl Default for SmoothSpec {
    fn default() -> Self {
        Self {
            sigma: 1.5,
            radius: 3,
        }
    }
}

impl SmoothSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::Config(format!(
                "sigma must be > 0, got {}",
                self.sigma
            )));
        }
        if self.radius < 1 {
            return Err(Error::Config("kernel radius must be >= 1".into()));
        }
        Ok(())
    }

    /// Normalized 1-D Gaussian taps for offsets `-radius..=radius`. The 2-D
    /// kernel is the outer product, so it sums to one as well.
    pub fn kernel_1d(&self) -> Vec<f64> {
        let r = self.radius as isize;
        let taps: Vec<f64> = (-r..=r)
            .map(|i| (-((i * i) as f64) / (2.0 * self.sigma * self.sigma)).exp())
            .collect();
        let sum: f64 = taps.iter().sum();
        taps.into_iter().map(|t| t / sum).collect()
    }
}

/// Normalized convolution: each valid output pixel is the kernel-weighted mean
/// of the valid pixels in its window. Invalid pixels stay invalid and never
/// contribute, so holes and borders do not pull depths toward zero.
pub fn gaussian_smooth(image: &RangeImage, spec: &SmoothSpec) -> Result<RangeImage> {
    spec.validate()?;
    let kernel = spec.kernel_1d();
    let r = spec.radius;
    let (w, h) = (image.width(), image.height());
    let depth = image.depths();
    let mask = image.mask();

    // Horizontal pass producing a normalized row average and its weight, then
    // a vertical pass weighting those averages. Both passes accumulate offsets
    // from a reference sample so constant neighborhoods come out exactly.
    let mut avg_h = vec![0.0; w * h];
    let mut den_h = vec![0.0; w * h];
    for row in 0..h {
        let base = row * w;
        for col in 0..w {
            let lo = col.saturating_sub(r);
            let hi = (col + r).min(w - 1);
            let Some(reference) = (lo..=hi).find(|&c| mask[base + c]).map(|c| depth[base + c])
            else {
                continue;
            };
            let (mut num, mut den) = (0.0, 0.0);
            for c in lo..=hi {
                if mask[base + c] {
                    let k = kernel[c + r - col];
                    num += k * (depth[base + c] - reference);
                    den += k;
                }
            }
            avg_h[base + col] = reference + num / den;
            den_h[base + col] = den;
        }
    }

    let mut out = vec![INVALID_DEPTH; w * h];
    for row in 0..h {
        let lo = row.saturating_sub(r);
        let hi = (row + r).min(h - 1);
        for col in 0..w {
            let i = row * w + col;
            if !mask[i] {
                continue;
            }
            let reference = avg_h[i];
            let (mut num, mut den) = (0.0, 0.0);
            for rr in lo..=hi {
                let j = rr * w + col;
                let k = kernel[rr + r - row] * den_h[j];
                num += k * (avg_h[j] - reference);
                den += k;
            }
            out[i] = reference + num / den;
        }
    }
    Ok(RangeImage::from_parts_unchecked(w, h, out, mask.to_vec()))
}
