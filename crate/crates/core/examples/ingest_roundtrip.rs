//! Writes one dVRK trial as raw kinematics and annotation CSVs, then loads it
//! back through a manifest and checks the dataset invariants.
//!
//! Run with `cargo run --example ingest_roundtrip`.

use std::path::PathBuf;

use surgeme_kit::ingest::{load_dataset, write_annotations, write_kinematics, write_manifest, TrialManifestEntry};
use surgeme_kit::model::{builtin_profiles, validate_dataset, Domain};
use surgeme_kit::preprocess::project_common_features;
use surgeme_kit::synthgen::{generate_trial, EmbodimentParams};

fn main() -> surgeme_kit::Result<()> {
    let dir = std::env::temp_dir().join("surgeme-kit-ingest-roundtrip");
    std::fs::create_dir_all(&dir).map_err(|e| surgeme_kit::Error::io(&dir, e))?;
    let profiles = builtin_profiles();
    let dvrk = &profiles["dvrk"];

    let params = EmbodimentParams {
        joints_per_arm: dvrk.joints_per_arm(),
        objects: 2,
        ..Default::default()
    };
    let trial = generate_trial(&params, 11)?;
    let raw = trial.raw_frames(dvrk);
    println!("{} raw columns: {}", dvrk.name, dvrk.column_names().join(","));

    let common = project_common_features(&raw[0], dvrk)?;
    println!("first frame, common features {:.3?}", common.channels());

    write_kinematics(&dir.join("kin.csv"), &raw, dvrk)?;
    write_annotations(&dir.join("ann.csv"), &trial.annotations)?;
    let manifest = dir.join("manifest.csv");
    write_manifest(
        &manifest,
        &[TrialManifestEntry {
            trial_id: "dvrk-demo".into(),
            robot: "dvrk".into(),
            domain: Domain::Real,
            kinematics_path: PathBuf::from("kin.csv"),
            annotations_path: PathBuf::from("ann.csv"),
        }],
    )?;

    let (ds, report) = load_dataset(&manifest, &profiles)?;
    println!(
        "loaded {} frames into {} segments, {} annotations dropped",
        report.frames,
        ds.segments.len(),
        report.dropped.len()
    );
    for s in &ds.segments {
        println!("  {:<16} {:>3} frames  {}", s.label.display_name(), s.frames.len(), s.outcome.as_str());
    }
    let violations = validate_dataset(&ds);
    println!("violations: {}", violations.len());
    for v in violations {
        println!("  {v}");
    }
    Ok(())
}
