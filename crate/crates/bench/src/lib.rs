//! Inputs shared by the benchmarks.

use facepose_core::synthface::{render, rotate_cloud, sample_face};
use facepose_core::{EyeRoiSpec, RangeImage, RotationSpec, RunConfig, SyntheticFaceSpec};

/// The default synthetic face on an `n` x `n` grid spanning the same 100 mm.
pub fn face_spec(n: usize) -> SyntheticFaceSpec {
    let mut spec = SyntheticFaceSpec::default();
    let pitch = 100.0 / n as f64;
    spec.grid.width = n;
    spec.grid.height = n;
    spec.grid.x_min = -50.0 - pitch / 2.0;
    spec.grid.x_max = 50.0 - pitch / 2.0;
    spec.grid.y_min = spec.grid.x_min;
    spec.grid.y_max = spec.grid.x_max;
    spec
}

pub fn face(n: usize, rot: Option<RotationSpec>) -> RangeImage {
    let spec = face_spec(n);
    let cloud = sample_face(&spec, spec.seed);
    let cloud = match rot {
        Some(r) => rotate_cloud(&cloud, &r, &spec.pivot()),
        None => cloud,
    };
    render(&cloud, &spec).expect("face renders")
}

/// Run configuration with pixel-based parameters scaled to an `n`-pixel grid.
pub fn config_for(n: usize) -> RunConfig {
    let scale = n as f64 / 100.0;
    let defaults = EyeRoiSpec::default();
    RunConfig {
        crop: None,
        pixel_pitch: 1.0 / scale,
        eyes: EyeRoiSpec {
            min_rows_above: (defaults.min_rows_above as f64 * scale).round() as usize,
            max_rows_above: (defaults.max_rows_above as f64 * scale).round() as usize,
            suppression_radius: defaults.suppression_radius * scale,
            ..defaults
        },
        ..RunConfig::default()
    }
}
