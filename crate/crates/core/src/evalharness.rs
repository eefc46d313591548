//! Accuracy evaluation over labeled samples and the per-axis accuracy tables.
//!
//! Tables list, per rotation axis, the rotation angle (column A), the number
//! of images (B) and the number classified correctly (C), plus a per-row rate.

use std::cmp::Ordering;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landmarks::{Corner, EyeCorners, Landmark};
use crate::pipeline::{detect_pose, RunConfig};
use crate::poseclassify::{classify_pose, PoseClass, PoseInput};
use crate::rangeio::RangeImage;
use crate::synthface::{Axis, GridPoint, LabeledSample, RotationSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub axis: Axis,
    pub angle: f64,
    pub total: usize,
    pub correct: usize,
}

impl EvalRow {
    pub fn rate(&self) -> f64 {
        percent(self.correct, self.total)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyTable {
    pub rows: Vec<EvalRow>,
    pub overall_total: usize,
    pub overall_correct: usize,
    pub overall_rate: f64,
}

impl AccuracyTable {
    pub fn from_rows(rows: Vec<EvalRow>) -> Result<Self> {
        if let Some(r) = rows.iter().find(|r| r.correct > r.total) {
            return Err(Error::Config(format!(
                "row {} {}: correct {} exceeds total {}",
                r.axis,
                format_angle(r.angle),
                r.correct,
                r.total
            )));
        }
        let total = rows.iter().map(|r| r.total).sum();
        let correct = rows.iter().map(|r| r.correct).sum();
        Ok(Self::with_totals(rows, total, correct))
    }

    /// Table carrying only overall counts, e.g. a published summary figure.
    pub fn from_counts(total: usize, correct: usize) -> Result<Self> {
        if correct > total {
            return Err(Error::Config(format!(
                "correct {correct} exceeds total {total}"
            )));
        }
        Ok(Self::with_totals(Vec::new(), total, correct))
    }

    fn with_totals(rows: Vec<EvalRow>, total: usize, correct: usize) -> Self {
        Self {
            rows,
            overall_total: total,
            overall_correct: correct,
            overall_rate: percent(correct, total),
        }
    }
}

pub fn percent(correct: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * correct as f64 / total as f64
    }
}

/// Canonical row order: axis, then |angle|, positive before negative.
pub fn row_order(a: &(Axis, f64), b: &(Axis, f64)) -> Ordering {
    a.0.cmp(&b.0)
        .then(a.1.abs().total_cmp(&b.1.abs()))
        .then(b.1.total_cmp(&a.1))
}

/// How landmarks are obtained for classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMode {
    /// Full preprocessing and landmark detection on both renders.
    #[default]
    Pipeline,
    /// Feed the generator's true landmark cells straight to the classifier.
    TruthLandmarks,
}

pub fn expected_pose(truth: &RotationSpec) -> PoseClass {
    if truth.angle == 0.0 {
        return PoseClass::Frontal;
    }
    match truth.axis {
        Axis::X => PoseClass::RotatedX,
        Axis::Y => PoseClass::RotatedY,
        Axis::Z => PoseClass::RotatedZ,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub index: usize,
    pub subject: usize,
    pub truth: RotationSpec,
    pub predicted: Option<PoseClass>,
    pub correct: bool,
    /// Why the sample produced no verdict.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub table: AccuracyTable,
    pub outcomes: Vec<SampleOutcome>,
}

impl Evaluation {
    pub fn failures(&self) -> impl Iterator<Item = &SampleOutcome> {
        self.outcomes.iter().filter(|o| o.failure.is_some())
    }
}

/// Classifies every sample and tallies the results by `(axis, angle)`.
/// Samples that fail to produce a verdict count as incorrect and are listed
/// among the failures.
pub fn evaluate(
    dataset: &[LabeledSample],
    config: &RunConfig,
    mode: EvalMode,
) -> Result<Evaluation> {
    if dataset.is_empty() {
        return Err(Error::Config("dataset is empty".into()));
    }
    config.validate()?;
    let outcomes: Vec<SampleOutcome> = dataset
        .par_iter()
        .enumerate()
        .map(|(index, sample)| {
            let verdict = classify_sample(sample, config, mode);
            let (predicted, failure) = match verdict {
                Ok(p) => (Some(p), None),
                Err(e) => (None, Some(e.to_string())),
            };
            SampleOutcome {
                index,
                subject: sample.subject,
                truth: sample.truth,
                predicted,
                correct: predicted == Some(expected_pose(&sample.truth)),
                failure,
            }
        })
        .collect();

    let mut order: Vec<usize> = (0..outcomes.len()).collect();
    order.sort_by(|&a, &b| {
        let (ta, tb) = (&outcomes[a].truth, &outcomes[b].truth);
        row_order(&(ta.axis, ta.angle), &(tb.axis, tb.angle))
    });
    let mut rows: Vec<EvalRow> = Vec::new();
    for i in order {
        let o = &outcomes[i];
        match rows.last_mut() {
            Some(r) if r.axis == o.truth.axis && r.angle == o.truth.angle => {
                r.total += 1;
                r.correct += usize::from(o.correct);
            }
            _ => rows.push(EvalRow {
                axis: o.truth.axis,
                angle: o.truth.angle,
                total: 1,
                correct: usize::from(o.correct),
            }),
        }
    }
    Ok(Evaluation {
        table: AccuracyTable::from_rows(rows)?,
        outcomes,
    })
}

fn classify_sample(
    sample: &LabeledSample,
    config: &RunConfig,
    mode: EvalMode,
) -> Result<PoseClass> {
    let rotated = sample
        .rotated
        .as_ref()
        .ok_or_else(|| Error::InvalidImage("rotated face fell off the grid".into()))?;
    match mode {
        EvalMode::Pipeline => Ok(detect_pose(&sample.frontal, rotated, config)?.report.pose),
        EvalMode::TruthLandmarks => {
            let truth = sample
                .rotated_landmarks
                .ok_or_else(|| Error::InvalidImage("rotated landmarks fell off the grid".into()))?;
            let at = |img: &RangeImage, p: GridPoint| Landmark {
                row: p.row,
                col: p.col,
                depth: img.depth(p.row, p.col).unwrap_or(f64::NAN),
            };
            let corner = |p: GridPoint| Corner {
                landmark: at(rotated, p),
                curvature: 0.0,
            };
            let input = PoseInput {
                frontal_nose: at(&sample.frontal, sample.frontal_landmarks.nose),
                rotated_nose: at(rotated, truth.nose),
                rotated_eyes: EyeCorners::new(corner(truth.eyes[0]), corner(truth.eyes[1])),
                frontal_eyes: None,
            };
            Ok(classify_pose(&input, &config.classifier()).pose)
        }
    }
}

/// `+5`, `-18`, `0`, or `+2.5` for fractional angles.
pub fn format_angle(angle: f64) -> String {
    if angle == 0.0 {
        "0".to_string()
    } else if angle.fract() == 0.0 {
        format!("{:+}", angle as i64)
    } else {
        format!("{angle:+}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Text,
}

pub const CSV_HEADER: &str = "axis,angle,total,correct,rate";

pub fn render_table(table: &AccuracyTable, format: TableFormat) -> String {
    match format {
        TableFormat::Csv => render_csv(table),
        TableFormat::Text => render_text(table),
    }
}

fn render_csv(table: &AccuracyTable) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &table.rows {
        writeln!(
            out,
            "{},{},{},{},{:.2}",
            r.axis,
            format_angle(r.angle),
            r.total,
            r.correct,
            r.rate()
        )
        .unwrap();
    }
    out
}

const ROMAN: [&str; 3] = ["I", "II", "III"];

fn render_text(table: &AccuracyTable) -> String {
    let mut out = String::new();
    let mut axes: Vec<Axis> = table.rows.iter().map(|r| r.axis).collect();
    axes.dedup();
    for (i, axis) in axes.iter().enumerate() {
        let numeral = ROMAN.get(i).copied().unwrap_or("");
        writeln!(
            out,
            "TABLE {numeral}. Detection of Pose Alignment across {axis} axes"
        )
        .unwrap();
        writeln!(
            out,
            "{:>3}  {:>6}  {:>6}  {:>6}  {:>7}",
            "", "A", "B", "C", "rate"
        )
        .unwrap();
        for (n, r) in table.rows.iter().filter(|r| r.axis == *axis).enumerate() {
            writeln!(
                out,
                "{:>3}  {:>6}  {:>6}  {:>6}  {:>6.2}%",
                n + 1,
                format_angle(r.angle),
                r.total,
                r.correct,
                r.rate()
            )
            .unwrap();
        }
        writeln!(out, "A: angle of rotation about the {axis} axis (degrees)").unwrap();
        writeln!(out, "B: number of 3D images rotated about the {axis} axis").unwrap();
        writeln!(out, "C: number of orientations detected correctly").unwrap();
        out.push('\n');
    }
    writeln!(
        out,
        "Overall: {} of {} poses detected correctly ({:.2}%)",
        table.overall_correct, table.overall_total, table.overall_rate
    )
    .unwrap();
    out
}

/// Parses either a rendered table (`axis,angle,total,correct,rate`) or a bare
/// count file (`total,correct` header and one data line).
pub fn parse_table_csv(text: &str) -> Result<AccuracyTable> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let Some((_, header)) = lines.next() else {
        return Err(Error::parse_line(1, "empty table file"));
    };
    let header: Vec<&str> = header.split(',').map(str::trim).collect();
    let num = |line: usize, s: &str, what: &str| -> Result<usize> {
        s.trim()
            .parse()
            .map_err(|_| Error::parse_line(line, format!("bad {what} {s:?}")))
    };
    match header.as_slice() {
        ["total", "correct"] => {
            let (line, data) = lines
                .next()
                .ok_or_else(|| Error::parse_line(2, "missing count line"))?;
            let f: Vec<&str> = data.split(',').collect();
            if f.len() != 2 {
                return Err(Error::parse_line(line, "expected total,correct"));
            }
            if let Some((extra, _)) = lines.next() {
                return Err(Error::parse_line(extra, "unexpected extra line"));
            }
            AccuracyTable::from_counts(num(line, f[0], "total")?, num(line, f[1], "correct")?)
        }
        ["axis", "angle", "total", "correct", "rate"] => {
            let mut rows = Vec::new();
            for (line, data) in lines {
                let f: Vec<&str> = data.split(',').map(str::trim).collect();
                if f.len() != 5 {
                    return Err(Error::parse_line(
                        line,
                        format!("expected 5 fields, found {}", f.len()),
                    ));
                }
                let axis: Axis = f[0]
                    .parse()
                    .map_err(|_| Error::parse_line(line, format!("bad axis {:?}", f[0])))?;
                let angle: f64 = f[1]
                    .parse()
                    .map_err(|_| Error::parse_line(line, format!("bad angle {:?}", f[1])))?;
                rows.push(EvalRow {
                    axis,
                    angle,
                    total: num(line, f[2], "total")?,
                    correct: num(line, f[3], "correct")?,
                });
            }
            AccuracyTable::from_rows(rows)
        }
        _ => Err(Error::parse_line(
            1,
            format!("unrecognized header, expected {CSV_HEADER:?} or \"total,correct\""),
        )),
    }
}
