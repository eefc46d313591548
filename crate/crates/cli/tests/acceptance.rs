//! Acceptance suite: every criterion runs in sequence and prints one PASS/FAIL
//! line; the test fails if any criterion does.

use std::io::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use facepose_core::evalharness::{
    evaluate, parse_table_csv, render_table, EvalMode, Evaluation, TableFormat,
};
use facepose_core::landmarks::{curvature_map, detect_nose_tip};
use facepose_core::poseclassify::decide;
use facepose_core::preprocess::{bin_of, otsu_threshold, OTSU_BINS};
use facepose_core::synthface::{default_sweep, make_dataset, render, sample_face};
use facepose_core::{
    classify_pose, process_image, Axis, ClassifierConfig, Corner, EyeCorners, EyeRoiSpec, Landmark,
    PoseClass, PoseInput, RangeImage, RunConfig, SyntheticFaceSpec,
};
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    check(
        elapsed < limit,
        format!("{what} took {elapsed:.2?}, limit {limit:?}"),
    )
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
}

fn facepose(args: &[&str], threads: Option<usize>) -> std::process::Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_facepose"));
    cmd.args(args);
    if let Some(n) = threads {
        cmd.env("RAYON_NUM_THREADS", n.to_string());
    }
    cmd.output().expect("run facepose")
}

// 1. Published counts reproduce at the format level.
fn published_format() -> Outcome {
    let start = Instant::now();
    let counts = std::fs::read_to_string(fixture("abstract_counts.csv")).unwrap();
    let t = parse_table_csv(&counts).map_err(|e| e.to_string())?;
    check(
        format!("{:.2}", t.overall_rate) == "66.75",
        format!("rate {}", t.overall_rate),
    )?;
    let out = facepose(
        &[
            "eval",
            "--counts",
            fixture("abstract_counts.csv").to_str().unwrap(),
        ],
        None,
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    check(
        out.status.success() && stdout.contains("66.75%"),
        format!("cli printed {stdout:?}"),
    )?;

    let tables = std::fs::read_to_string(fixture("published_tables.csv")).unwrap();
    let t = parse_table_csv(&tables).map_err(|e| e.to_string())?;
    check(
        render_table(&t, TableFormat::Csv) == tables,
        "published table csv does not round-trip",
    )?;
    check(
        t.rows[0].total == 70 && t.rows[0].correct == 48,
        "first published row",
    )?;
    check(
        format!("{:.2}", t.rows[0].rate()) == "68.57",
        "first row rate",
    )?;
    let text = render_table(&t, TableFormat::Text);
    for needle in ["TABLE I.", "TABLE II.", "TABLE III.", "A       B       C"] {
        check(
            text.contains(needle),
            format!("text layout lacks {needle:?}"),
        )?;
    }
    within(start.elapsed(), Duration::from_secs(1), "count-file report")?;
    Ok(format!(
        "848/566 -> 66.75%, published tables {} rows ({:.2?})",
        t.rows.len(),
        start.elapsed()
    ))
}

/// Exact between-class variance comparison in integers: bins `0..=t` versus
/// the rest, ties to the lowest `t`.
fn otsu_oracle(counts: &[u64; OTSU_BINS]) -> Option<usize> {
    let n: u128 = counts.iter().map(|&c| c as u128).sum();
    let s: u128 = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| i as u128 * c as u128)
        .sum();
    let mut best: Option<(usize, u128, u128)> = None; // (t, numerator, denominator)
    let (mut n0, mut s0) = (0u128, 0u128);
    for (t, &c) in counts.iter().enumerate() {
        n0 += c as u128;
        s0 += t as u128 * c as u128;
        let n1 = n - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        // sigma_b^2 * n^2 = (n*s0 - n0*s)^2 / (n0*n1)
        let diff = (n * s0).abs_diff(n0 * s);
        let (num, den) = (diff * diff, n0 * n1);
        let better = match best {
            None => true,
            Some((_, bn, bd)) => num * bd > bn * den,
        };
        if better {
            best = Some((t, num, den));
        }
    }
    best.map(|b| b.0)
}

// 2. Otsu matches the exhaustive search.
fn otsu_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..100 {
        let (w, h) = (rng.random_range(20..60), rng.random_range(20..60));
        let peaks: Vec<(f64, f64)> = (0..rng.random_range(1..4))
            .map(|_| (rng.random_range(0.0..256.0), rng.random_range(2.0..40.0)))
            .collect();
        // Depth b + 0.5 lands in bin b once the range is pinned to [0, 256].
        let mut depth: Vec<f64> = (0..w * h)
            .map(|_| {
                let (mu, sd) = peaks[rng.random_range(0..peaks.len())];
                let b = (mu + sd * (rng.random::<f64>() - 0.5) * 3.4)
                    .clamp(0.0, 255.0)
                    .floor();
                b + 0.5
            })
            .collect();
        depth[0] = 0.0;
        depth[1] = 256.0;
        let img = RangeImage::from_depths(w, h, depth.clone()).unwrap();
        let mut counts = [0u64; OTSU_BINS];
        for &z in &depth {
            counts[bin_of(z, 0.0, 256.0)] += 1;
        }
        let expected = otsu_oracle(&counts);
        let got = otsu_threshold(&img).map_err(|e| e.to_string())?;
        check(
            got.bin == expected,
            format!("case {case}: bin {:?}, oracle {expected:?}", got.bin),
        )?;
        let t = expected.unwrap();
        for (i, &z) in depth.iter().enumerate() {
            let kept = got.masked.mask()[i];
            check(
                kept == (bin_of(z, 0.0, 256.0) > t),
                format!("case {case}: pixel {i} misclassified"),
            )?;
            check(
                kept == (z > got.threshold),
                format!("case {case}: threshold disagrees with mask"),
            )?;
        }
    }
    within(start.elapsed(), Duration::from_secs(5), "otsu oracle")?;
    Ok(format!(
        "100/100 histograms match ({:.2?})",
        start.elapsed()
    ))
}

// 3. Nose tip matches brute-force enumeration of 3x3 window sums.
fn nose_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..50 {
        let img = RangeImage::from_fn(60, 60, |_, _| Some(rng.random_range(0.0..100.0))).unwrap();
        let mut best: Option<(f64, usize, usize)> = None;
        for r in 1..59 {
            for c in 1..59 {
                let mut s = 0.0;
                for dr in 0..3 {
                    for dc in 0..3 {
                        s += img.depth(r + dr - 1, c + dc - 1).unwrap();
                    }
                }
                if best.is_none_or(|b| s > b.0) {
                    best = Some((s, r, c));
                }
            }
        }
        let (_, r, c) = best.unwrap();
        let nose = detect_nose_tip(&img).map_err(|e| e.to_string())?;
        check(
            (nose.row, nose.col) == (r, c),
            format!(
                "case {case}: ({}, {}) vs oracle ({r}, {c})",
                nose.row, nose.col
            ),
        )?;
    }
    within(start.elapsed(), Duration::from_secs(5), "nose oracle")?;
    Ok(format!("50/50 grids match ({:.2?})", start.elapsed()))
}

// 4. Curvature on analytic surfaces.
fn curvature_fixtures() -> Outcome {
    let start = Instant::now();
    let grid = |n: usize, pitch: f64, f: &dyn Fn(f64, f64) -> Option<f64>| {
        let mid = (n / 2) as f64;
        RangeImage::from_fn(n, n, |r, c| {
            f((c as f64 - mid) * pitch, (r as f64 - mid) * pitch)
        })
        .unwrap()
    };

    let plane = grid(31, 1.0, &|u, v| Some(0.3 * u + 0.1 * v));
    let map = curvature_map(&plane, 7, 1.0).map_err(|e| e.to_string())?;
    let worst_plane = map
        .iter_defined()
        .map(|(_, _, k)| k.mean.abs().max(k.gaussian.abs()))
        .fold(0.0, f64::max);
    check(
        map.defined_count() > 0 && worst_plane <= 1e-9,
        format!("plane curvature {worst_plane:e}"),
    )?;

    let pitch = 0.05;
    let para = grid(21, pitch, &|u, v| Some(0.5 * (u * u + v * v)));
    let k = curvature_map(&para, 7, pitch)
        .map_err(|e| e.to_string())?
        .at(10, 10)
        .ok_or("apex undefined")?;
    check(
        (k.mean.abs() - 1.0).abs() <= 0.01,
        format!("paraboloid H {}", k.mean),
    )?;
    check(
        (k.gaussian - 1.0).abs() <= 0.01,
        format!("paraboloid K {}", k.gaussian),
    )?;

    let (radius, pitch) = (10.0, 0.1);
    let cap = 0.8 * radius;
    let n = (2.0 * cap / pitch) as usize + 3;
    let sphere = grid(n, pitch, &|u, v| {
        (u * u + v * v < cap * cap).then(|| (radius * radius - u * u - v * v).sqrt())
    });
    let map = curvature_map(&sphere, 7, pitch).map_err(|e| e.to_string())?;
    let target = 1.0 / (radius * radius);
    let worst = map
        .iter_defined()
        .map(|(_, _, k)| (k.gaussian - target).abs() / target)
        .fold(0.0, f64::max);
    check(worst <= 0.02, format!("sphere K relative error {worst}"))?;
    within(
        start.elapsed(),
        Duration::from_secs(10),
        "curvature fixtures",
    )?;
    Ok(format!(
        "plane {worst_plane:.1e}, paraboloid H {:.4} K {:.4}, sphere worst {:.3}% over {} px ({:.2?})",
        k.mean.abs(),
        k.gaussian,
        worst * 100.0,
        map.defined_count(),
        start.elapsed()
    ))
}

fn sweep(noise_fraction: f64) -> Evaluation {
    let specs: Vec<_> = (0..10)
        .map(|i| {
            let s = SyntheticFaceSpec::subject(i, 0);
            let sigma = s.depth_range() * noise_fraction;
            s.with_noise(sigma)
        })
        .collect();
    let data = make_dataset(&specs, &default_sweep()).unwrap();
    evaluate(&data, &RunConfig::default(), EvalMode::Pipeline).unwrap()
}

// 5. End-to-end synthetic sweep, noiseless and noisy.
fn synthetic_sweep() -> Outcome {
    let start = Instant::now();
    let clean = sweep(0.0);
    let noisy = sweep(0.01);
    let elapsed = start.elapsed();

    let mut degradation = String::from("axis,noiseless_rate,noisy_rate,delta\n");
    for axis in [Axis::X, Axis::Y, Axis::Z] {
        let rate = |e: &Evaluation| {
            let rows = e.table.rows.iter().filter(|r| r.axis == axis);
            let (t, c) = rows.fold((0, 0), |(t, c), r| (t + r.total, c + r.correct));
            100.0 * c as f64 / t as f64
        };
        let (a, b) = (rate(&clean), rate(&noisy));
        degradation.push_str(&format!("{axis},{a:.2},{b:.2},{:.2}\n", b - a));
    }

    let dir = repo_root().join("results");
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(
        dir.join("sweep_noiseless.csv"),
        render_table(&clean.table, TableFormat::Csv),
    )
    .unwrap();
    std::fs::write(
        dir.join("sweep_noise_1pct.csv"),
        render_table(&noisy.table, TableFormat::Csv),
    )
    .unwrap();
    std::fs::write(dir.join("sweep_degradation.csv"), &degradation).unwrap();
    let summary = format!(
        "10 subjects (seed 0) x axes X,Y,Z x angles +-5,+-10,+-18,+-40 = {} samples per run\n\
         noiseless: {} of {} correct ({:.2}%), threshold 90%\n\
         noise sigma = 1% of depth range: {} of {} correct ({:.2}%), threshold 70%\n\n\
         per-axis degradation:\n{degradation}\n\
         noiseless tables:\n{}\nnoisy tables:\n{}",
        clean.table.overall_total,
        clean.table.overall_correct,
        clean.table.overall_total,
        clean.table.overall_rate,
        noisy.table.overall_correct,
        noisy.table.overall_total,
        noisy.table.overall_rate,
        render_table(&clean.table, TableFormat::Text),
        render_table(&noisy.table, TableFormat::Text),
    );
    std::fs::write(dir.join("synthetic_sweep.txt"), &summary).unwrap();

    check(
        clean.table.overall_total == 240,
        format!("{} samples", clean.table.overall_total),
    )?;
    check(
        clean.table.overall_rate >= 90.0,
        format!("noiseless {:.2}% < 90%", clean.table.overall_rate),
    )?;
    check(
        noisy.table.overall_rate >= 70.0,
        format!("noisy {:.2}% < 70%", noisy.table.overall_rate),
    )?;
    within(elapsed, Duration::from_secs(120), "synthetic sweep")?;
    Ok(format!(
        "noiseless {:.2}%, 1% noise {:.2}% (per-axis deltas in results/sweep_degradation.csv) ({elapsed:.2?})",
        clean.table.overall_rate, noisy.table.overall_rate
    ))
}

fn run<T: std::fmt::Debug>(name: &str, r: Result<(), TestError<T>>) -> Result<(), String> {
    r.map_err(|e| format!("{name}: {e}"))
}

fn pose_input(p: &[usize; 8]) -> PoseInput {
    let lm = |row, col| Landmark {
        row,
        col,
        depth: 0.0,
    };
    let corner = |row, col| Corner {
        landmark: lm(row, col),
        curvature: 0.0,
    };
    PoseInput {
        frontal_nose: lm(p[0], p[1]),
        rotated_nose: lm(p[2], p[3]),
        rotated_eyes: EyeCorners::new(corner(p[4], p[5]), corner(p[6], p[7])),
        frontal_eyes: None,
    }
}

// 6. Classifier properties over randomized landmark configurations.
fn classifier_properties() -> Outcome {
    let start = Instant::now();
    let cases = 1000;
    let runner = || {
        TestRunner::new_with_rng(
            PropConfig {
                cases,
                failure_persistence: None,
                ..PropConfig::default()
            },
            proptest::test_runner::TestRng::deterministic_rng(
                proptest::test_runner::RngAlgorithm::ChaCha,
            ),
        )
    };
    // Small coordinate range so ties and zero displacements occur often.
    let coords = || prop::array::uniform8(0usize..24);
    let eps = || 0.0f64..6.0;

    run(
        "exhaustive and exclusive",
        runner().run(&(coords(), eps()), |(p, e)| {
            let r = classify_pose(&pose_input(&p), &ClassifierConfig::new(e).unwrap());
            let z = r.eye_line_diff as f64 > e;
            let moved = r.nose_dcol + r.nose_drow > 0;
            let holds = [
                (PoseClass::RotatedZ, z),
                (
                    PoseClass::RotatedY,
                    !z && moved && r.nose_dcol >= r.nose_drow,
                ),
                (PoseClass::RotatedX, !z && r.nose_drow > r.nose_dcol),
                (PoseClass::Frontal, !z && !moved),
            ];
            let which: Vec<_> = holds.iter().filter(|h| h.1).map(|h| h.0).collect();
            prop_assert_eq!(which, vec![r.pose]);
            Ok(())
        }),
    )?;

    run(
        "epsilon monotone",
        runner().run(&(coords(), eps(), eps()), |(p, a, b)| {
            let (lo, hi) = (a.min(b), a.max(b));
            let x = classify_pose(&pose_input(&p), &ClassifierConfig::new(lo).unwrap()).pose;
            let y = classify_pose(&pose_input(&p), &ClassifierConfig::new(hi).unwrap()).pose;
            prop_assert!(y != PoseClass::RotatedZ || x == PoseClass::RotatedZ);
            prop_assert!(x == PoseClass::RotatedZ || x == y);
            Ok(())
        }),
    )?;

    run(
        "translation invariant",
        runner().run(
            &(coords(), 0usize..1000, 0usize..1000, eps()),
            |(p, dr, dc, e)| {
                let mut q = p;
                for (i, v) in q.iter_mut().enumerate() {
                    *v += if i % 2 == 0 { dr } else { dc };
                }
                let cfg = ClassifierConfig::new(e).unwrap();
                prop_assert_eq!(
                    classify_pose(&pose_input(&p), &cfg).pose,
                    classify_pose(&pose_input(&q), &cfg).pose
                );
                Ok(())
            },
        ),
    )?;

    run(
        "eye swap symmetric",
        runner().run(&(coords(), eps()), |(p, e)| {
            let q = [p[0], p[1], p[2], p[3], p[6], p[7], p[4], p[5]];
            let cfg = ClassifierConfig::new(e).unwrap();
            prop_assert_eq!(
                classify_pose(&pose_input(&p), &cfg),
                classify_pose(&pose_input(&q), &cfg)
            );
            Ok(())
        }),
    )?;

    run(
        "dcol = drow is Y",
        runner().run(&(1usize..100, 0usize..3, 2.0f64..6.0), |(d, diff, e)| {
            prop_assert_eq!(decide(diff, d, d, e), PoseClass::RotatedY);
            Ok(())
        }),
    )?;

    within(
        start.elapsed(),
        Duration::from_secs(10),
        "classifier properties",
    )?;
    Ok(format!(
        "5 properties x {cases} cases ({:.2?})",
        start.elapsed()
    ))
}

fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((
                    p.strip_prefix(dir).unwrap().to_path_buf(),
                    std::fs::read(&p).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}

// 7. Byte-identical synth and eval outputs.
fn determinism() -> Outcome {
    let start = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let p = |name: &str| tmp.path().join(name).to_str().unwrap().to_string();
    for name in ["a", "b"] {
        let out = facepose(
            &[
                "synth",
                "--out",
                &p(name),
                "--subjects",
                "10",
                "--seed",
                "42",
                "--noise",
                "0.01",
            ],
            None,
        );
        check(
            out.status.success(),
            String::from_utf8_lossy(&out.stderr).to_string(),
        )?;
    }
    let (a, b) = (tree(&tmp.path().join("a")), tree(&tmp.path().join("b")));
    check(a.len() == 481, format!("{} files in dataset", a.len()))?;
    check(a == b, "synth outputs differ")?;

    let mut reports = Vec::new();
    for (name, threads) in [("r1", 1), ("r4", 4), ("r4b", 4)] {
        let out = facepose(&["eval", &p("a"), "--report", &p(name)], Some(threads));
        check(
            out.status.success(),
            String::from_utf8_lossy(&out.stderr).to_string(),
        )?;
        reports.push((tree(&tmp.path().join(name)), out.stdout));
    }
    check(
        reports.windows(2).all(|w| w[0] == w[1]),
        "eval reports differ across runs or thread counts",
    )?;
    Ok(format!(
        "{} dataset files and 3 report runs identical ({:.2?})",
        a.len(),
        start.elapsed()
    ))
}

fn median_time(image: &RangeImage, cfg: &RunConfig) -> Result<Duration, String> {
    let mut times = Vec::new();
    for _ in 0..7 {
        let t = Instant::now();
        process_image(image, cfg).map_err(|e| e.to_string())?;
        times.push(t.elapsed());
    }
    times.sort();
    Ok(times[times.len() / 2])
}

// 8. Single-image pipeline runtime and growth.
fn complexity() -> Outcome {
    let face = |n: usize| {
        let mut spec = SyntheticFaceSpec::default();
        let half = 50.0;
        let pitch = 2.0 * half / n as f64;
        spec.grid.width = n;
        spec.grid.height = n;
        spec.grid.x_min = -half - pitch / 2.0;
        spec.grid.x_max = half - pitch / 2.0;
        spec.grid.y_min = spec.grid.x_min;
        spec.grid.y_max = spec.grid.x_max;
        render(&sample_face(&spec, spec.seed), &spec).unwrap()
    };
    let small_cfg = RunConfig::default();
    let large_cfg = RunConfig {
        crop: None,
        pixel_pitch: 0.5,
        eyes: EyeRoiSpec {
            min_rows_above: 10,
            max_rows_above: 70,
            suppression_radius: 16.0,
            ..EyeRoiSpec::default()
        },
        ..RunConfig::default()
    };
    let small_full = RunConfig {
        crop: None,
        ..small_cfg
    };
    let (small, large) = (face(100), face(200));
    let t_default = median_time(&small, &small_cfg)?;
    let t100 = median_time(&small, &small_full)?;
    let t200 = median_time(&large, &large_cfg)?;
    let ratio = t200.as_secs_f64() / t100.as_secs_f64();
    check(
        t_default < Duration::from_millis(100),
        format!("100x100 pipeline {t_default:.2?}"),
    )?;
    check(
        t100 < Duration::from_millis(100),
        format!("uncropped 100x100 pipeline {t100:.2?}"),
    )?;
    check(
        ratio <= 8.0,
        format!("200x200 / 100x100 runtime ratio {ratio:.2}"),
    )?;
    Ok(format!(
        "100x100 {t_default:.2?} (uncropped {t100:.2?}), 200x200 {t200:.2?}, ratio {ratio:.2}"
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

#[test]
fn acceptance() {
    let criteria: [Criterion; 8] = [
        ("1 published counts and table format", published_format),
        ("2 otsu oracle equivalence", otsu_equivalence),
        ("3 nose-tip oracle equivalence", nose_equivalence),
        ("4 curvature fixtures", curvature_fixtures),
        ("5 synthetic sweep accuracy", synthetic_sweep),
        ("6 classifier property suite", classifier_properties),
        ("7 determinism", determinism),
        ("8 complexity smoke check", complexity),
    ];
    let mut lines = Vec::new();
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or(p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        let line = match outcome {
            Ok(detail) => format!("PASS  criterion {name}: {detail}"),
            Err(why) => {
                failed += 1;
                format!("FAIL  criterion {name}: {why}")
            }
        };
        // Written to the raw handle so the line shows even under output capture.
        writeln!(std::io::stderr(), "{line}").unwrap();
        lines.push(line);
    }
    let dir = repo_root().join("results");
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("acceptance.txt"), lines.join("\n") + "\n").unwrap();
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
