use crate::error::{Error, Result};
use crate::rangeio::RangeImage;

use super::Landmark;

/// Maximum-intensity nose localization: the interior pixel whose fully valid
/// 3x3 window has the largest depth sum. Ties go to the first window in
/// row-major order.
///
/// A grid where every candidate window has the same sum has no maximum to
/// speak of and is reported as [`Error::NoseNotFound`].
pub fn detect_nose_tip(image: &RangeImage) -> Result<Landmark> {
    let (w, h) = (image.width(), image.height());
    let depth = image.depths();
    let mask = image.mask();

    let mut best: Option<(usize, usize, f64)> = None;
    let mut lowest = f64::INFINITY;
    let mut candidates = 0usize;
    for row in 1..h - 1 {
        let above = (row - 1) * w;
        let here = row * w;
        let below = (row + 1) * w;
        for col in 1..w - 1 {
            let mut sum = 0.0;
            let mut full = true;
            'win: for base in [above, here, below] {
                for c in col - 1..=col + 1 {
                    if !mask[base + c] {
                        full = false;
                        break 'win;
                    }
                    sum += depth[base + c];
                }
            }
            if !full {
                continue;
            }
            candidates += 1;
            lowest = lowest.min(sum);
            if best.is_none_or(|(_, _, s)| sum > s) {
                best = Some((row, col, sum));
            }
        }
    }
    match best {
        None => Err(Error::NoseNotFound(
            "no fully valid 3x3 window in the image".into(),
        )),
        Some((_, _, s)) if s == lowest && candidates > 1 => Err(Error::NoseNotFound(
            "depth is flat: every 3x3 window has the same sum".into(),
        )),
        Some((row, col, _)) => Landmark::at(image, row, col),
    }
}
