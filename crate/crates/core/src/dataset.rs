//! On-disk layout of a labeled dataset: one directory per sample holding the
//! frontal and rotated depth grids, plus `manifest.json` at the top level.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rangeio::{load_depth_grid, save_depth_grid, DepthFormat};
use crate::synthface::{LabeledSample, RotationSpec, TrueLandmarks};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    pub format: DepthFormat,
    /// Free-form generator parameters, recorded for provenance of the data.
    pub generator: serde_json::Value,
    pub samples: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    pub subject: usize,
    pub truth: RotationSpec,
    pub frontal: String,
    /// Absent when the rotated face left the grid.
    pub rotated: Option<String>,
    pub frontal_landmarks: TrueLandmarks,
    pub rotated_landmarks: Option<TrueLandmarks>,
}

pub fn sample_id(index: usize) -> String {
    format!("sample-{index:04}")
}

/// Writes every sample and the manifest under `dir`, creating it if needed.
pub fn write_dataset(
    dir: &Path,
    samples: &[LabeledSample],
    format: DepthFormat,
    generator: serde_json::Value,
) -> Result<Manifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let ext = format.extension();
    let mut entries = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        let id = sample_id(i);
        let sub = dir.join(&id);
        std::fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
        let frontal = format!("{id}/frontal.{ext}");
        save_depth_grid(&s.frontal, &dir.join(&frontal), format)?;
        let rotated = match &s.rotated {
            Some(img) => {
                let rel = format!("{id}/rotated.{ext}");
                save_depth_grid(img, &dir.join(&rel), format)?;
                Some(rel)
            }
            None => None,
        };
        entries.push(ManifestEntry {
            id,
            subject: s.subject,
            truth: s.truth,
            frontal,
            rotated,
            frontal_landmarks: s.frontal_landmarks,
            rotated_landmarks: s.rotated_landmarks,
        });
    }
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        format,
        generator,
        samples: entries,
    };
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
    if manifest.version != MANIFEST_VERSION {
        return Err(Error::Manifest(format!(
            "unsupported manifest version {}",
            manifest.version
        )));
    }
    if manifest.samples.is_empty() {
        return Err(Error::Manifest("manifest lists no samples".into()));
    }
    for (i, e) in manifest.samples.iter().enumerate() {
        let bad = |why: &str| Error::Manifest(format!("entry {i} ({}): {why}", e.id));
        if !e.truth.angle.is_finite() {
            return Err(bad("angle is not finite"));
        }
        for rel in std::iter::once(&e.frontal).chain(e.rotated.as_ref()) {
            if Path::new(rel).is_absolute() || rel.split('/').any(|c| c == "..") {
                return Err(bad(&format!("path {rel:?} escapes the dataset directory")));
            }
        }
        if e.rotated.is_some() != e.rotated_landmarks.is_some() {
            return Err(bad(
                "rotated image and rotated landmarks must be present together",
            ));
        }
    }
    Ok(manifest)
}

/// Loads the manifest and every depth grid it references.
pub fn read_dataset(dir: &Path) -> Result<(Manifest, Vec<LabeledSample>)> {
    let manifest = read_manifest(dir)?;
    let resolve = |rel: &str| -> PathBuf { dir.join(rel) };
    let samples = manifest
        .samples
        .iter()
        .map(|e| {
            Ok(LabeledSample {
                subject: e.subject,
                frontal: load_depth_grid(&resolve(&e.frontal), manifest.format)?,
                rotated: match &e.rotated {
                    Some(rel) => Some(load_depth_grid(&resolve(rel), manifest.format)?),
                    None => None,
                },
                truth: e.truth,
                frontal_landmarks: e.frontal_landmarks,
                rotated_landmarks: e.rotated_landmarks,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((manifest, samples))
}
