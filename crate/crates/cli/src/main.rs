use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use facepose_core::dataset::{read_dataset, write_dataset};
use facepose_core::evalharness::{parse_table_csv, percent, render_table, TableFormat};
use facepose_core::rangeio::{load_depth_grid_with, DepthConvention};
use facepose_core::synthface::{make_dataset, sweep, DEFAULT_ANGLES};
use facepose_core::{
    detect_pose, evaluate, process_image, Axis, CropSpec, DepthFormat, Error, EvalMode, RangeImage,
    Result, RunConfig, ScoreMode, SyntheticFaceSpec,
};

mod report;

const EXIT_INPUT: u8 = 2;
const EXIT_PIPELINE: u8 = 3;

/// Pose-orientation detection for 3D face range images.
#[derive(Debug, Parser)]
#[command(name = "facepose", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify the rotation axis of ROTATED relative to FRONTAL.
    Detect {
        frontal: PathBuf,
        rotated: PathBuf,
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
    /// Report the nose tip and inner eye corners of one range image.
    Landmarks {
        input: PathBuf,
        #[command(flatten)]
        input_args: InputArgs,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
    /// Generate a labeled synthetic dataset.
    Synth {
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
        /// Number of synthetic subjects.
        #[arg(long, default_value_t = 10)]
        subjects: usize,
        /// Rotation angles in degrees.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = DEFAULT_ANGLES.to_vec())]
        angles: Vec<f64>,
        /// Rotation axes to sweep.
        #[arg(long, value_delimiter = ',', default_values_t = vec![Axis::X, Axis::Y, Axis::Z])]
        axes: Vec<Axis>,
        /// Depth noise sigma as a fraction of each face's depth range.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Depth grid file format.
        #[arg(long, value_enum, default_value_t = GridFormat::Pgm16)]
        grid_format: GridFormat,
    },
    /// Score the pipeline over a dataset, or summarize a prebuilt report.
    Eval {
        /// Dataset directory holding manifest.json.
        #[arg(required_unless_present = "counts", conflicts_with = "counts")]
        dataset: Option<PathBuf>,
        /// Prebuilt report: a `total,correct` count file or an accuracy csv.
        #[arg(long)]
        counts: Option<PathBuf>,
        /// Directory for accuracy.csv, accuracy.txt and summary.json.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Classify from the generator's true landmarks instead of detecting them.
        #[arg(long)]
        truth_landmarks: bool,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Text,
    Csv,
    Structured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GridFormat {
    Csv,
    Pgm16,
}

impl From<GridFormat> for DepthFormat {
    fn from(f: GridFormat) -> Self {
        match f {
            GridFormat::Csv => DepthFormat::Csv,
            GridFormat::Pgm16 => DepthFormat::Pgm16,
        }
    }
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Depth file format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    input_format: Option<GridFormat>,
    /// Stored values are distances from the sensor rather than heights.
    #[arg(long)]
    distance: bool,
}

/// Flat overrides of the run configuration, applied on top of `--config`.
#[derive(Debug, Args)]
struct ConfigArgs {
    /// JSON file with (a subset of) the run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Crop window as ROW_START,ROW_END,COL_START,COL_END (half-open).
    #[arg(long, value_delimiter = ',', num_args = 4, conflicts_with = "no_crop")]
    crop: Option<Vec<usize>>,
    /// Process the whole image.
    #[arg(long)]
    no_crop: bool,
    /// Gaussian smoothing sigma in pixels.
    #[arg(long)]
    sigma: Option<f64>,
    /// Smoothing kernel half-width in pixels.
    #[arg(long)]
    smooth_radius: Option<usize>,
    /// Eye-row difference above which the pose is a Z rotation.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Odd side length of the curvature fit window.
    #[arg(long)]
    fit_window: Option<usize>,
    /// Grid spacing used by the curvature fit.
    #[arg(long)]
    pixel_pitch: Option<f64>,
    /// Nearest eye search row, counted upward from the nose.
    #[arg(long)]
    eye_min_rows: Option<usize>,
    /// Farthest eye search row, counted upward from the nose.
    #[arg(long)]
    eye_max_rows: Option<usize>,
    /// Minimum pixel distance between the two eye corners.
    #[arg(long)]
    suppression_radius: Option<f64>,
    /// Curvature score ranking eye corner candidates.
    #[arg(long)]
    score: Option<ScoreMode>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
            }
            None => RunConfig::default(),
        };
        if let Some(c) = &self.crop {
            cfg.crop = Some(CropSpec::new((c[0], c[1]), (c[2], c[3])));
        }
        if self.no_crop {
            cfg.crop = None;
        }
        set(&mut cfg.smooth.sigma, self.sigma);
        set(&mut cfg.smooth.radius, self.smooth_radius);
        set(&mut cfg.epsilon, self.epsilon);
        set(&mut cfg.fit_window, self.fit_window);
        set(&mut cfg.pixel_pitch, self.pixel_pitch);
        set(&mut cfg.eyes.min_rows_above, self.eye_min_rows);
        set(&mut cfg.eyes.max_rows_above, self.eye_max_rows);
        set(&mut cfg.eyes.suppression_radius, self.suppression_radius);
        set(&mut cfg.eyes.score, self.score);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn load(path: &Path, args: &InputArgs) -> Result<RangeImage> {
    let format = match args.input_format {
        Some(f) => f.into(),
        None => DepthFormat::from_path(path).ok_or_else(|| {
            Error::Config(format!(
                "cannot infer the format of {}; pass --input-format",
                path.display()
            ))
        })?,
    };
    let convention = if args.distance {
        DepthConvention::DistanceFromSensor
    } else {
        DepthConvention::CloserIsLarger
    };
    load_depth_grid_with(path, format, convention)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Detect {
            frontal,
            rotated,
            input,
            config,
            format,
        } => {
            let cfg = config.resolve()?;
            let f = load(&frontal, &input)?;
            let r = load(&rotated, &input)?;
            let detection = detect_pose(&f, &r, &cfg)?;
            print!("{}", report::detection(&detection, format));
        }
        Command::Landmarks {
            input,
            input_args,
            config,
            format,
        } => {
            let cfg = config.resolve()?;
            let image = load(&input, &input_args)?;
            let marks = process_image(&image, &cfg)?;
            print!("{}", report::landmarks(&marks, format));
        }
        Command::Synth {
            out,
            subjects,
            angles,
            axes,
            noise,
            seed,
            grid_format,
        } => {
            if subjects == 0 || angles.is_empty() || axes.is_empty() {
                return Err(Error::Config(
                    "need at least one subject, angle and axis".into(),
                ));
            }
            if !(noise.is_finite() && noise >= 0.0) {
                return Err(Error::Config(format!("noise must be >= 0, got {noise}")));
            }
            let specs: Vec<SyntheticFaceSpec> = (0..subjects)
                .map(|i| {
                    let s = SyntheticFaceSpec::subject(i, seed);
                    let sigma = s.depth_range() * noise;
                    s.with_noise(sigma)
                })
                .collect();
            let samples = make_dataset(&specs, &sweep(&axes, &angles))?;
            let generator = serde_json::json!({
                "subjects": subjects,
                "seed": seed,
                "angles": angles,
                "axes": axes,
                "noise_fraction": noise,
            });
            let manifest = write_dataset(&out, &samples, grid_format.into(), generator)?;
            let unusable = manifest
                .samples
                .iter()
                .filter(|e| e.rotated.is_none())
                .count();
            println!(
                "wrote {} samples to {}",
                manifest.samples.len(),
                out.display()
            );
            if unusable > 0 {
                println!("{unusable} samples left the grid and are flagged unusable");
            }
        }
        Command::Eval {
            dataset,
            counts,
            report: report_dir,
            truth_landmarks,
            config,
        } => {
            let (table, summary) = match (dataset, counts) {
                (_, Some(path)) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                    let table = parse_table_csv(&text)?;
                    let summary = report::summary(&table, &[]);
                    (table, summary)
                }
                (Some(dir), None) => {
                    let cfg = config.resolve()?;
                    let (_, samples) = read_dataset(&dir)?;
                    let mode = if truth_landmarks {
                        EvalMode::TruthLandmarks
                    } else {
                        EvalMode::Pipeline
                    };
                    let eval = evaluate(&samples, &cfg, mode)?;
                    let failures: Vec<_> = eval.failures().cloned().collect();
                    let summary = report::summary(&eval.table, &failures);
                    (eval.table, summary)
                }
                (None, None) => unreachable!("clap requires a dataset or --counts"),
            };
            if let Some(dir) = report_dir {
                std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
                let write = |name: &str, body: &str| {
                    let path = dir.join(name);
                    std::fs::write(&path, body).map_err(|e| Error::io(&path, e))
                };
                write("accuracy.csv", &render_table(&table, TableFormat::Csv))?;
                write("accuracy.txt", &render_table(&table, TableFormat::Text))?;
                write("summary.json", &summary)?;
            }
            if !table.rows.is_empty() {
                print!("{}", render_table(&table, TableFormat::Text));
            }
            println!(
                "overall rate: {:.2}% ({} of {})",
                percent(table.overall_correct, table.overall_total),
                table.overall_correct,
                table.overall_total
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_pipeline_failure() {
                EXIT_PIPELINE
            } else {
                EXIT_INPUT
            })
        }
    }
}
