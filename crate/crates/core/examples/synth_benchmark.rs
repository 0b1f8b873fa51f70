//! Writes the default synthetic peg-transfer benchmark to disk in the ingest
//! layout and prints per-robot class counts.
//!
//! Run with `cargo run --release --example synth_benchmark [OUT_DIR]`.

use surgeme_kit::ingest::load_dataset;
use surgeme_kit::model::{builtin_profiles, SurgemeClass, NUM_CLASSES};
use surgeme_kit::synthgen::{write_benchmark, BenchmarkSpec};

fn main() -> surgeme_kit::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("surgeme-kit-desk-synth-v1"));
    let spec = BenchmarkSpec::desk_synth_v1();
    let profiles = builtin_profiles();
    let manifest = write_benchmark(&spec, &profiles, &out)?;
    let (ds, report) = load_dataset(&manifest, &profiles)?;
    println!("{}: {} trials, {} segments in {}", spec.name, report.trials, ds.segments.len(), out.display());

    for bp in &spec.profiles {
        let robot = ds.filtered(|s| s.robot == bp.robot);
        let counts = robot.class_counts();
        let cells: Vec<String> = (0..NUM_CLASSES)
            .map(|c| format!("{}={}", SurgemeClass::from_id(c).unwrap().name(), counts[c]))
            .collect();
        println!("  {:<10} {:<4} {}", bp.robot, bp.domain, cells.join(" "));
    }
    Ok(())
}
