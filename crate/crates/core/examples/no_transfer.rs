//! Grouped cross-validation on each robot of a reduced benchmark, in both
//! sequence-wise (spectral) and frame-wise (raw) modes.
//!
//! Run with `cargo run --release --example no_transfer`.

use surgeme_kit::experiments::{run_experiment, ExperimentConfig, FeatureKind, Mode};
use surgeme_kit::learners::{ForestParams, LearnerSpec};
use surgeme_kit::synthgen::{generate_benchmark, BenchmarkSpec};

fn main() -> surgeme_kit::Result<()> {
    let spec = BenchmarkSpec {
        trials_per_profile: 4,
        ..BenchmarkSpec::desk_synth_v1()
    };
    let ds = generate_benchmark(&spec)?;
    let learner = LearnerSpec::RandomForest(ForestParams {
        trees: 30,
        ..Default::default()
    });

    for (mode, feature_kind) in [(Mode::SequenceWise, FeatureKind::Spectral), (Mode::FrameWise, FeatureKind::Raw)] {
        let cfg = ExperimentConfig {
            mode,
            feature_kind,
            folds: 4,
            seeds: vec![0, 1],
            learner: learner.clone(),
            ..Default::default()
        };
        let report = run_experiment(&ds, &cfg)?;
        println!("# {}", mode.as_str());
        print!("{}", report.table_csv());
    }
    Ok(())
}
