//! Runs the default synthetic sweep, noiseless and with depth noise at 1% of
//! each face's depth range, and prints the accuracy tables.
//!
//! cargo run --release -p facepose-core --example sweep -- [seed]

use facepose_core::evalharness::{evaluate, render_table, EvalMode, TableFormat};
use facepose_core::synthface::{default_sweep, make_dataset, SyntheticFaceSpec};
use facepose_core::RunConfig;

fn main() -> facepose_core::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .map_or(0, |s| s.parse().expect("seed must be an integer"));
    for noise in [0.0, 0.01] {
        let specs: Vec<_> = (0..10)
            .map(|i| {
                let s = SyntheticFaceSpec::subject(i, seed);
                let sigma = s.depth_range() * noise;
                s.with_noise(sigma)
            })
            .collect();
        let data = make_dataset(&specs, &default_sweep())?;
        let eval = evaluate(&data, &RunConfig::default(), EvalMode::Pipeline)?;
        println!("noise {:.0}% of depth range", noise * 100.0);
        print!("{}", render_table(&eval.table, TableFormat::Text));
        for o in eval.outcomes.iter().filter(|o| !o.correct) {
            let got = o.predicted.map_or("none", |p| p.as_str());
            println!(
                "  miss: subject {} {} {:+} -> {got}",
                o.subject, o.truth.axis, o.truth.angle
            );
        }
        println!();
    }
    Ok(())
}
