use nalgebra::Matrix6;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rangeio::RangeImage;

/// Curvatures of the depth surface at one pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Curvature {
    /// Mean curvature H, 1/mm.
    pub mean: f64,
    /// Gaussian curvature K, 1/mm².
    pub gaussian: f64,
    /// Larger principal curvature.
    pub k1: f64,
    /// Smaller principal curvature.
    pub k2: f64,
}

impl Curvature {
    /// Curvatures of the graph of z = a·u² + b·u·v + c·v² + d·u + e·v + f at
    /// the origin.
    pub fn from_quadric([a, b, c, d, e, _f]: [f64; 6]) -> Self {
        let g = 1.0 + d * d + e * e;
        let mean = ((1.0 + e * e) * 2.0 * a - 2.0 * d * e * b + (1.0 + d * d) * 2.0 * c)
            / (2.0 * g.powf(1.5));
        let gaussian = (4.0 * a * c - b * b) / (g * g);
        let disc = (mean * mean - gaussian).max(0.0).sqrt();
        Self {
            mean,
            gaussian,
            k1: mean + disc,
            k2: mean - disc,
        }
    }
}

/// Least-squares quadric fit over a square window. The design matrix only
/// depends on the window offsets, so the pseudo-inverse is computed once and
/// each pixel costs one 6 x n product.
#[derive(Debug, Clone)]
pub struct QuadricFit {
    radius: usize,
    /// Row-major 6 x n pseudo-inverse, n = (2r+1)².
    pinv: Vec<f64>,
}

impl QuadricFit {
    pub fn new(window: usize, pixel_pitch: f64) -> Result<Self> {
        if window < 5 || window % 2 == 0 {
            return Err(Error::Config(format!(
                "curvature fit window must be odd and >= 5, got {window}"
            )));
        }
        if !(pixel_pitch.is_finite() && pixel_pitch > 0.0) {
            return Err(Error::Config(format!(
                "pixel pitch must be > 0, got {pixel_pitch}"
            )));
        }
        let radius = window / 2;
        let r = radius as isize;
        let rows: Vec<[f64; 6]> = (-r..=r)
            .flat_map(|dr| (-r..=r).map(move |dc| (dr, dc)))
            .map(|(dr, dc)| {
                let u = dc as f64 * pixel_pitch;
                let v = dr as f64 * pixel_pitch;
                [u * u, u * v, v * v, u, v, 1.0]
            })
            .collect();
        let mut normal = Matrix6::<f64>::zeros();
        for t in &rows {
            for i in 0..6 {
                for j in 0..6 {
                    normal[(i, j)] += t[i] * t[j];
                }
            }
        }
        let inverse = normal
            .try_inverse()
            .ok_or_else(|| Error::Config("quadric fit is rank deficient".into()))?;
        let mut pinv = Vec::with_capacity(6 * rows.len());
        for k in 0..6 {
            pinv.extend(
                rows.iter()
                    .map(|t| (0..6).map(|j| inverse[(k, j)] * t[j]).sum::<f64>()),
            );
        }
        Ok(Self { radius, pinv })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Quadric coefficients `[a, b, c, d, e, f]` for window samples in
    /// row-major order.
    pub fn coefficients(&self, samples: &[f64]) -> [f64; 6] {
        let n = samples.len();
        debug_assert_eq!(n * 6, self.pinv.len());
        let mut out = [0.0; 6];
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.pinv[k * n..(k + 1) * n]
                .iter()
                .zip(samples)
                .map(|(p, z)| p * z)
                .sum();
        }
        out
    }
}

/// Per-pixel curvatures of a range image.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureMap {
    width: usize,
    height: usize,
    values: Vec<Option<Curvature>>,
}

impl CurvatureMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Curvature at a pixel where the fit was possible.
    pub fn at(&self, row: usize, col: usize) -> Option<Curvature> {
        if row < self.height && col < self.width {
            self.values[row * self.width + col]
        } else {
            None
        }
    }

    pub fn is_defined(&self, row: usize, col: usize) -> bool {
        self.at(row, col).is_some()
    }

    pub fn defined_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    /// `(row, col, curvature)` for every defined pixel, row-major.
    pub fn iter_defined(&self) -> impl Iterator<Item = (usize, usize, Curvature)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter_map(move |(i, v)| v.map(|k| (i / self.width, i % self.width, k)))
    }
}

/// Fits a quadric over the `fit_window` x `fit_window` neighborhood of every
/// pixel whose whole window is inside the image and valid. Other pixels are
/// left undefined. `pixel_pitch` converts pixel offsets to millimeters.
pub fn curvature_map(
    image: &RangeImage,
    fit_window: usize,
    pixel_pitch: f64,
) -> Result<CurvatureMap> {
    let fit = QuadricFit::new(fit_window, pixel_pitch)?;
    let (w, h) = (image.width(), image.height());
    let r = fit.radius();
    let depth = image.depths();
    let full = full_windows(image, r);

    let values: Vec<Option<Curvature>> = (0..h)
        .into_par_iter()
        .flat_map_iter(|row| {
            let fit = &fit;
            let full = &full;
            let mut samples = vec![0.0; (2 * r + 1) * (2 * r + 1)];
            (0..w)
                .map(move |col| {
                    if !full[row * w + col] {
                        return None;
                    }
                    let center = depth[row * w + col];
                    let mut i = 0;
                    for rr in row - r..=row + r {
                        for cc in col - r..=col + r {
                            samples[i] = depth[rr * w + cc] - center;
                            i += 1;
                        }
                    }
                    Some(Curvature::from_quadric(fit.coefficients(&samples)))
                })
                .collect::<Vec<_>>()
        })
        .collect();

    Ok(CurvatureMap {
        width: w,
        height: h,
        values,
    })
}

/// Marks pixels whose (2r+1)² window lies inside the image with every pixel
/// valid, via a summed-area table of the invalid mask.
fn full_windows(image: &RangeImage, r: usize) -> Vec<bool> {
    let (w, h) = (image.width(), image.height());
    let mask = image.mask();
    let mut sat = vec![0u32; (w + 1) * (h + 1)];
    for row in 0..h {
        let mut run = 0;
        for col in 0..w {
            run += u32::from(!mask[row * w + col]);
            sat[(row + 1) * (w + 1) + col + 1] = sat[row * (w + 1) + col + 1] + run;
        }
    }
    let mut out = vec![false; w * h];
    if w <= 2 * r || h <= 2 * r {
        return out;
    }
    for row in r..h - r {
        for col in r..w - r {
            let (r0, r1, c0, c1) = (row - r, row + r + 1, col - r, col + r + 1);
            let bad = sat[r1 * (w + 1) + c1] + sat[r0 * (w + 1) + c0]
                - sat[r0 * (w + 1) + c1]
                - sat[r1 * (w + 1) + c0];
            out[row * w + col] = bad == 0;
        }
    }
    out
}
