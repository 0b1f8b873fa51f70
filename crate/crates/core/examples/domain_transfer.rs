//! Sweeps the real:sim training ratio for one real robot and writes the full
//! report (CSV tables, confusion matrices, SVG curve) to a directory.
//!
//! Run with `cargo run --release --example domain_transfer [OUT_DIR]`.

use surgeme_kit::experiments::{emit_report, run_experiment, ExperimentConfig, Scenario};
use surgeme_kit::learners::{ForestParams, LearnerSpec};
use surgeme_kit::synthgen::{generate_benchmark, BenchmarkSpec};

fn main() -> surgeme_kit::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("surgeme-kit-transfer"));
    let mut spec = BenchmarkSpec::desk_synth_v1();
    spec.profiles.retain(|p| p.robot == "taurus-sim" || p.robot == "yumi");
    let ds = generate_benchmark(&spec)?;

    let cfg = ExperimentConfig {
        scenario: Scenario::DomainTransfer,
        ratio_grid: vec![0.0, 0.1, 0.28, 1.0],
        seeds: vec![0, 1],
        learner: LearnerSpec::RandomForest(ForestParams {
            trees: 30,
            ..Default::default()
        }),
        ..Default::default()
    };
    let report = run_experiment(&ds, &cfg)?;
    for row in &report.summary {
        let ratio = row.ratio.map_or("-".to_string(), |r| format!("{r:.2}"));
        println!("{:<5} {:<9} ratio {:>5}  {:.3} +- {:.3}", row.robot, row.series.as_str(), ratio, row.mean, row.std);
    }
    let files = emit_report(&report, &out)?;
    println!("wrote {} files to {}", files.len(), out.display());
    Ok(())
}
