//! Parametric synthetic faces with known landmarks.
//!
//! A face is an ellipsoidal dome with a Gaussian nose bump and two Gaussian
//! eye pits, sampled on a lattice finer than the output grid. Faces are
//! rotated rigidly about a pivot behind the nose tip and rendered
//! orthographically, with an optional flat backdrop that stays fixed in the
//! sensor frame. Every landmark has a closed-form position, so rendered
//! samples carry exact ground truth.

use std::fmt;

use nalgebra::{Rotation3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rangeio::{project_to_range, GridSpec, Point3, PointCloud, RangeImage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomeSpec {
    /// Horizontal semi-axis, mm.
    pub semi_x: f64,
    /// Vertical semi-axis, mm.
    pub semi_y: f64,
    /// Height of the dome apex above its rim, mm.
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoseSpec {
    pub amplitude: f64,
    /// Gaussian standard deviation, mm.
    pub width: f64,
    pub center: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EyeSpec {
    pub depth: f64,
    pub width: f64,
    pub centers: [(f64, f64); 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticFaceSpec {
    pub grid: GridSpec,
    pub dome: DomeSpec,
    pub nose: NoseSpec,
    pub eyes: EyeSpec,
    /// Standard deviation of Gaussian depth noise, mm.
    pub noise_sigma: f64,
    pub seed: u64,
    /// Lattice samples per grid pixel along each axis (odd).
    pub samples_per_pixel: usize,
    /// Distance of the rotation pivot behind the nose tip, mm.
    pub pivot_depth: f64,
    /// Depth of a flat backdrop behind the face, fixed in the sensor frame.
    pub backdrop: Option<f64>,
}

impl Default for SyntheticFaceSpec {
    fn default() -> Self {
        Self {
            grid: GridSpec {
                width: 100,
                height: 100,
                x_min: -50.5,
                x_max: 49.5,
                y_min: -50.5,
                y_max: 49.5,
            },
            dome: DomeSpec {
                semi_x: 42.0,
                semi_y: 55.0,
                height: 30.0,
            },
            nose: NoseSpec {
                amplitude: 22.0,
                width: 7.0,
                center: (0.0, 0.0),
            },
            eyes: EyeSpec {
                depth: 7.0,
                width: 4.0,
                centers: [(-19.0, -22.0), (19.0, -22.0)],
            },
            noise_sigma: 0.0,
            seed: 0,
            samples_per_pixel: 3,
            pivot_depth: 50.0,
            backdrop: Some(-80.0),
        }
    }
}

impl SyntheticFaceSpec {
    /// A subject of a synthetic population: the default face, jittered.
    pub fn subject(index: usize, seed: u64) -> Self {
        Self::default().jittered(index, seed)
    }

    /// This face with its shape parameters jittered deterministically from
    /// `(seed, index)`.
    pub fn jittered(&self, index: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, index as u64));
        let mut jitter = |value: f64, rel: f64| {
            let u = Uniform::new_inclusive(-rel, rel).expect("valid range");
            value * (1.0 + u.sample(&mut rng))
        };
        let base = *self;
        let eye_dx = jitter(base.eyes.centers[1].0, 0.06);
        let eye_y = jitter(base.eyes.centers[1].1, 0.05);
        Self {
            dome: DomeSpec {
                semi_x: jitter(base.dome.semi_x, 0.05),
                semi_y: jitter(base.dome.semi_y, 0.05),
                height: jitter(base.dome.height, 0.08),
            },
            nose: NoseSpec {
                amplitude: jitter(base.nose.amplitude, 0.08),
                width: jitter(base.nose.width, 0.06),
                center: base.nose.center,
            },
            eyes: EyeSpec {
                depth: jitter(base.eyes.depth, 0.15),
                width: jitter(base.eyes.width, 0.1),
                centers: [(-eye_dx, eye_y), (eye_dx, eye_y)],
            },
            seed: mix_seed(seed ^ 0x5eed, index as u64),
            ..base
        }
    }

    pub fn with_noise(mut self, sigma: f64) -> Self {
        self.noise_sigma = sigma;
        self
    }

    /// Noise-free height of the face at `(x, y)`, `None` outside the dome.
    pub fn surface_z(&self, x: f64, y: f64) -> Option<f64> {
        let q = (x / self.dome.semi_x).powi(2) + (y / self.dome.semi_y).powi(2);
        if q >= 1.0 {
            return None;
        }
        let gauss = |(cx, cy): (f64, f64), w: f64| {
            let d2 = (x - cx).powi(2) + (y - cy).powi(2);
            (-d2 / (2.0 * w * w)).exp()
        };
        let mut z = self.dome.height * (1.0 - q).sqrt();
        z += self.nose.amplitude * gauss(self.nose.center, self.nose.width);
        for c in self.eyes.centers {
            z -= self.eyes.depth * gauss(c, self.eyes.width);
        }
        Some(z)
    }

    /// Top of the face minus the dome rim: the span of face depths.
    pub fn depth_range(&self) -> f64 {
        self.nose_point().z
    }

    pub fn nose_point(&self) -> Point3 {
        let (x, y) = self.nose.center;
        Point3::new(x, y, self.surface_z(x, y).unwrap_or(0.0))
    }

    pub fn eye_points(&self) -> [Point3; 2] {
        self.eyes
            .centers
            .map(|(x, y)| Point3::new(x, y, self.surface_z(x, y).unwrap_or(0.0)))
    }

    /// Rotation center: on the viewing axis through the nose, `pivot_depth`
    /// behind the tip.
    pub fn pivot(&self) -> Point3 {
        let nose = self.nose_point();
        Point3::new(nose.x, nose.y, nose.z - self.pivot_depth)
    }

    fn lattice_steps(&self) -> (f64, f64) {
        let n = self.samples_per_pixel as f64;
        (self.grid.pitch_x() / n, self.grid.pitch_y() / n)
    }

    /// Lattice points centered on the nose, covering the dome.
    fn lattice(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (sx, sy) = self.lattice_steps();
        let (nx, ny) = self.nose.center;
        let ix = ((self.dome.semi_x + nx.abs()) / sx).ceil() as i64;
        let iy = ((self.dome.semi_y + ny.abs()) / sy).ceil() as i64;
        (-iy..=iy)
            .flat_map(move |j| (-ix..=ix).map(move |i| (nx + i as f64 * sx, ny + j as f64 * sy)))
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let positive = |v: f64| v.is_finite() && v > 0.0;
        let checks = [
            (
                positive(self.dome.semi_x) && positive(self.dome.semi_y),
                "dome semi-axes must be > 0",
            ),
            (
                self.dome.height.is_finite() && self.dome.height >= 0.0,
                "dome height must be >= 0",
            ),
            (positive(self.nose.amplitude), "nose amplitude must be > 0"),
            (positive(self.nose.width), "nose width must be > 0"),
            (positive(self.eyes.depth), "eye pit depth must be > 0"),
            (positive(self.eyes.width), "eye pit width must be > 0"),
            (
                self.eyes
                    .centers
                    .iter()
                    .all(|&(_, y)| y < self.nose.center.1),
                "eye centers must lie above the nose (smaller y)",
            ),
            (
                self.noise_sigma.is_finite() && self.noise_sigma >= 0.0,
                "noise sigma must be >= 0",
            ),
            (
                self.samples_per_pixel % 2 == 1,
                "samples per pixel must be odd",
            ),
            (self.pivot_depth.is_finite(), "pivot depth must be finite"),
        ];
        if let Some((_, msg)) = checks.iter().find(|(ok, _)| !ok) {
            return Err(Error::FaceSpec((*msg).to_string()));
        }
        let (nx, ny) = self.nose.center;
        let Some(top) = self.surface_z(nx, ny) else {
            return Err(Error::FaceSpec("nose center lies outside the dome".into()));
        };
        if let Some(b) = self.backdrop {
            if !(b.is_finite() && b < 0.0) {
                return Err(Error::FaceSpec(
                    "backdrop must lie behind the dome rim (depth < 0)".into(),
                ));
            }
        }
        if let Some((x, y)) = self
            .lattice()
            .find(|&(x, y)| (x, y) != (nx, ny) && self.surface_z(x, y).is_some_and(|z| z >= top))
        {
            return Err(Error::FaceSpec(format!(
                "face features overlap: ({x:.2}, {y:.2}) is at least as high as the nose center"
            )));
        }
        Ok(())
    }
}

/// Samples the face surface on a lattice `samples_per_pixel` times finer than
/// the grid, with optional Gaussian depth noise. Deterministic in `spec.seed`.
pub fn generate_face(spec: &SyntheticFaceSpec) -> Result<PointCloud> {
    spec.validate()?;
    Ok(sample_face(spec, spec.seed))
}

/// Samples the face lattice without validating `spec`, drawing depth noise
/// from `noise_seed`.
pub fn sample_face(spec: &SyntheticFaceSpec, noise_seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    let noise = (spec.noise_sigma > 0.0)
        .then(|| Normal::new(0.0, spec.noise_sigma).expect("sigma validated"));
    let points = spec
        .lattice()
        .filter_map(|(x, y)| {
            spec.surface_z(x, y).map(|z| {
                let dz = noise.map_or(0.0, |n| n.sample(&mut rng));
                Point3::new(x, y, z + dz)
            })
        })
        .collect();
    PointCloud::from_points_unchecked(points)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "X",
            Axis::Y => "Y",
            Axis::Z => "Z",
        })
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            other => Err(Error::Config(format!("unknown axis {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationSpec {
    pub axis: Axis,
    /// Degrees.
    pub angle: f64,
}

impl RotationSpec {
    pub const fn new(axis: Axis, angle: f64) -> Self {
        Self { axis, angle }
    }

    pub fn matrix(&self) -> Rotation3<f64> {
        let axis = match self.axis {
            Axis::X => Vector3::x_axis(),
            Axis::Y => Vector3::y_axis(),
            Axis::Z => Vector3::z_axis(),
        };
        Rotation3::from_axis_angle(&axis, self.angle.to_radians())
    }
}

/// Angles of the compact default sweep, in the order the accuracy tables list
/// them.
pub const DEFAULT_ANGLES: [f64; 8] = [5.0, -5.0, 10.0, -10.0, 18.0, -18.0, 40.0, -40.0];

/// Every angle that appears in the reference tables.
pub const FULL_ANGLES: [f64; 10] = [
    5.0, -5.0, 10.0, -10.0, 18.0, -18.0, 38.0, -38.0, 40.0, -40.0,
];

/// Axis-major sweep over `angles` about each of `axes`.
pub fn sweep(axes: &[Axis], angles: &[f64]) -> Vec<RotationSpec> {
    axes.iter()
        .flat_map(|&axis| {
            angles
                .iter()
                .map(move |&angle| RotationSpec::new(axis, angle))
        })
        .collect()
}

pub fn default_sweep() -> Vec<RotationSpec> {
    sweep(&[Axis::X, Axis::Y, Axis::Z], &DEFAULT_ANGLES)
}

/// Maps every point `p` to `R·(p − pivot) + pivot`.
pub fn rotate_cloud(cloud: &PointCloud, rot: &RotationSpec, pivot: &Point3) -> PointCloud {
    if rot.angle == 0.0 {
        return cloud.clone();
    }
    let points = cloud
        .points()
        .iter()
        .map(|p| rotate_point(p, rot, pivot))
        .collect();
    PointCloud::from_points_unchecked(points)
}

pub fn rotate_point(p: &Point3, rot: &RotationSpec, pivot: &Point3) -> Point3 {
    if rot.angle == 0.0 {
        return *p;
    }
    let v = rot.matrix() * Vector3::new(p.x - pivot.x, p.y - pivot.y, p.z - pivot.z);
    Point3::new(v.x + pivot.x, v.y + pivot.y, v.z + pivot.z)
}

/// Orthographic render of a face cloud, with the face's backdrop filling every
/// cell where the face is absent or behind it.
pub fn render(cloud: &PointCloud, spec: &SyntheticFaceSpec) -> Result<RangeImage> {
    let face = project_to_range(cloud, &spec.grid)?;
    let Some(wall) = spec.backdrop else {
        return Ok(face);
    };
    let (w, h) = (face.width(), face.height());
    RangeImage::from_fn(w, h, |r, c| {
        Some(face.depth(r, c).map_or(wall, |z| z.max(wall)))
    })
}

/// Grid cell of a landmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridPoint {
    pub row: usize,
    pub col: usize,
}

/// Projected ground-truth landmark cells for one render.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrueLandmarks {
    pub nose: GridPoint,
    pub eyes: [GridPoint; 2],
}

impl TrueLandmarks {
    /// Projects the noise-free 3D landmarks of `spec` after `rot`. `None` if
    /// any of them falls off the grid.
    pub fn project(spec: &SyntheticFaceSpec, rot: &RotationSpec) -> Option<Self> {
        let pivot = spec.pivot();
        let cell = |p: Point3| {
            let q = rotate_point(&p, rot, &pivot);
            spec.grid
                .cell_of(q.x, q.y)
                .map(|(row, col)| GridPoint { row, col })
        };
        let [e0, e1] = spec.eye_points();
        Some(Self {
            nose: cell(spec.nose_point())?,
            eyes: [cell(e0)?, cell(e1)?],
        })
    }
}

/// A frontal/rotated pair with exact ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub subject: usize,
    pub frontal: RangeImage,
    /// `None` when the rotated face left the grid; such samples are kept and
    /// flagged rather than dropped.
    pub rotated: Option<RangeImage>,
    pub truth: RotationSpec,
    pub frontal_landmarks: TrueLandmarks,
    pub rotated_landmarks: Option<TrueLandmarks>,
}

impl LabeledSample {
    pub fn is_usable(&self) -> bool {
        self.rotated.is_some() && self.rotated_landmarks.is_some()
    }
}

/// One sample per `(spec, rotation)`, ordered face-major. Frontal renders use
/// the face's own seed; each rotated render draws fresh noise from a seed
/// derived from it.
pub fn make_dataset(
    specs: &[SyntheticFaceSpec],
    rotations: &[RotationSpec],
) -> Result<Vec<LabeledSample>> {
    if specs.is_empty() || rotations.is_empty() {
        return Err(Error::Config(
            "dataset needs at least one face and one rotation".into(),
        ));
    }
    for spec in specs {
        spec.validate()?;
    }
    let frontal_rot = RotationSpec::new(Axis::X, 0.0);
    let frontals: Vec<(RangeImage, TrueLandmarks)> = specs
        .par_iter()
        .map(|spec| {
            let image = render(&sample_face(spec, spec.seed), spec)?;
            let marks = TrueLandmarks::project(spec, &frontal_rot)
                .ok_or_else(|| Error::FaceSpec("frontal landmarks fall off the grid".into()))?;
            Ok((image, marks))
        })
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize)> = (0..specs.len())
        .flat_map(|s| (0..rotations.len()).map(move |r| (s, r)))
        .collect();
    Ok(jobs
        .par_iter()
        .map(|&(s, r)| {
            let spec = &specs[s];
            let rot = rotations[r];
            let cloud = sample_face(spec, mix_seed(spec.seed, r as u64 + 1));
            let rotated = render(&rotate_cloud(&cloud, &rot, &spec.pivot()), spec).ok();
            LabeledSample {
                subject: s,
                frontal: frontals[s].0.clone(),
                rotated,
                truth: rot,
                frontal_landmarks: frontals[s].1,
                rotated_landmarks: TrueLandmarks::project(spec, &rot),
            }
        })
        .collect())
}

/// SplitMix64 finalizer over a seed/stream pair.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
