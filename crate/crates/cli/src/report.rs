//! Text, csv and JSON renderings of command results.

use std::fmt::Write as _;

use facepose_core::evalharness::{AccuracyTable, SampleOutcome};
use facepose_core::{Corner, Detection, FaceLandmarks, Landmark};
use serde::Serialize;
use serde_json::json;

use crate::OutputFormat;

#[derive(Serialize)]
struct Point {
    row: usize,
    col: usize,
    depth: f64,
}

#[derive(Serialize)]
struct CornerOut {
    row: usize,
    col: usize,
    curvature: f64,
}

#[derive(Serialize)]
struct FaceOut {
    nose: Point,
    eye_corners: [CornerOut; 2],
    otsu_threshold: f64,
}

fn face(f: &FaceLandmarks) -> FaceOut {
    let point = |lm: &Landmark| Point {
        row: lm.row,
        col: lm.col,
        depth: lm.depth,
    };
    let corner = |c: &Corner| CornerOut {
        row: c.landmark.row,
        col: c.landmark.col,
        curvature: c.curvature,
    };
    FaceOut {
        nose: point(&f.nose),
        eye_corners: [corner(&f.eyes.first), corner(&f.eyes.second)],
        otsu_threshold: f.otsu_threshold,
    }
}

fn corner_table(out: &mut String, f: &FaceOut) {
    writeln!(out, "Row Col Curvature").unwrap();
    for c in &f.eye_corners {
        writeln!(out, "{} {} {:.6}", c.row, c.col, c.curvature).unwrap();
    }
}

pub fn landmarks(marks: &FaceLandmarks, format: OutputFormat) -> String {
    let f = face(marks);
    let mut out = String::new();
    match format {
        OutputFormat::Text => {
            writeln!(
                out,
                "nose tip: row {} col {} depth {:.6}",
                f.nose.row, f.nose.col, f.nose.depth
            )
            .unwrap();
            writeln!(out, "eye corners:").unwrap();
            corner_table(&mut out, &f);
        }
        OutputFormat::Csv => {
            writeln!(out, "landmark,row,col,value").unwrap();
            writeln!(
                out,
                "nose,{},{},{:.6}",
                f.nose.row, f.nose.col, f.nose.depth
            )
            .unwrap();
            for (i, c) in f.eye_corners.iter().enumerate() {
                writeln!(out, "eye{},{},{},{:.6}", i + 1, c.row, c.col, c.curvature).unwrap();
            }
        }
        OutputFormat::Structured => {
            out = serde_json::to_string_pretty(&f).expect("landmarks serialize");
            out.push('\n');
        }
    }
    out
}

pub fn detection(d: &Detection, format: OutputFormat) -> String {
    let (fr, ro) = (face(&d.frontal), face(&d.rotated));
    let r = &d.report;
    let mut out = String::new();
    match format {
        OutputFormat::Text => {
            writeln!(out, "pose: {}", r.pose).unwrap();
            writeln!(
                out,
                "eye-line diff: {} px (epsilon {})",
                r.eye_line_diff, r.epsilon
            )
            .unwrap();
            writeln!(
                out,
                "nose displacement: dcol {} drow {}",
                r.nose_dcol, r.nose_drow
            )
            .unwrap();
            for (name, f) in [("frontal", &fr), ("rotated", &ro)] {
                writeln!(
                    out,
                    "{name} nose tip: row {} col {} depth {:.6}",
                    f.nose.row, f.nose.col, f.nose.depth
                )
                .unwrap();
                writeln!(out, "{name} eye corners:").unwrap();
                corner_table(&mut out, f);
            }
            writeln!(out, "trace:").unwrap();
            for line in &r.trace {
                writeln!(out, "  {line}").unwrap();
            }
        }
        OutputFormat::Csv => {
            writeln!(
                out,
                "pose,eye_line_diff,nose_dcol,nose_drow,epsilon,\
                 frontal_nose_row,frontal_nose_col,rotated_nose_row,rotated_nose_col,\
                 eye1_row,eye1_col,eye1_curvature,eye2_row,eye2_col,eye2_curvature"
            )
            .unwrap();
            let [e1, e2] = &ro.eye_corners;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{:.6},{},{},{:.6}",
                r.pose,
                r.eye_line_diff,
                r.nose_dcol,
                r.nose_drow,
                r.epsilon,
                fr.nose.row,
                fr.nose.col,
                ro.nose.row,
                ro.nose.col,
                e1.row,
                e1.col,
                e1.curvature,
                e2.row,
                e2.col,
                e2.curvature
            )
            .unwrap();
        }
        OutputFormat::Structured => {
            let v = json!({
                "pose": r.pose,
                "eye_line_diff": r.eye_line_diff,
                "nose_dcol": r.nose_dcol,
                "nose_drow": r.nose_drow,
                "epsilon": r.epsilon,
                "trace": r.trace,
                "frontal": fr,
                "rotated": ro,
            });
            out = serde_json::to_string_pretty(&v).expect("report serializes");
            out.push('\n');
        }
    }
    out
}

/// Counts, rate, per-row table and the failure appendix as JSON.
pub fn summary(table: &AccuracyTable, failures: &[SampleOutcome]) -> String {
    let failures: Vec<_> = failures
        .iter()
        .map(|o| {
            json!({
                "sample": o.index,
                "subject": o.subject,
                "truth": o.truth,
                "reason": o.failure,
            })
        })
        .collect();
    let v = json!({
        "total": table.overall_total,
        "correct": table.overall_correct,
        "rate": (table.overall_rate * 100.0).round() / 100.0,
        "rows": table.rows,
        "failures": failures,
    });
    let mut s = serde_json::to_string_pretty(&v).expect("summary serializes");
    s.push('\n');
    s
}
