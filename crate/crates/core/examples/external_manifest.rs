//! Runs the configured no-transfer evaluation on recordings listed in a
//! manifest, such as an export of the real DESK peg-transfer data.
//!
//! Run with `cargo run --release --example external_manifest -- MANIFEST [CONFIG_TOML]`.
//! The optional config adds `[[profiles]]` for custom layouts and sets the learner.

use std::path::Path;

use surgeme_kit::config::CliConfig;
use surgeme_kit::experiments::{run_experiment, Scenario};
use surgeme_kit::ingest::load_dataset;
use surgeme_kit::model::validate_dataset;
use surgeme_kit::Error;

fn main() -> surgeme_kit::Result<()> {
    let mut args = std::env::args().skip(1);
    let Some(manifest) = args.next() else {
        eprintln!("usage: external_manifest MANIFEST [CONFIG_TOML]");
        std::process::exit(2);
    };
    let mut cfg = match args.next() {
        Some(path) => CliConfig::load(Path::new(&path))?,
        None => CliConfig::default(),
    };
    cfg.experiment.scenario = Scenario::NoTransfer;

    let (ds, report) = load_dataset(Path::new(&manifest), &cfg.profiles()?)?;
    println!("{} trials, {} segments, {} annotations dropped", report.trials, ds.segments.len(), report.dropped.len());
    let violations = validate_dataset(&ds);
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("{v}");
        }
        return Err(Error::Config(format!("{} dataset violations", violations.len())));
    }
    let report = run_experiment(&ds, &cfg.experiment)?;
    print!("{}", report.table_csv());
    Ok(())
}
