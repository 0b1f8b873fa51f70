//! Resamples one synthetic surgeme onto 40 frames and computes its spectral
//! feature vector. Shifting or scaling a channel leaves the features unchanged.
//!
//! Run with `cargo run --example spectral_features`.

use surgeme_kit::features::{build_sequence_vector, spectral_features, SpectralTransform};
use surgeme_kit::model::Domain;
use surgeme_kit::preprocess::{resample_segment, FRAMES};
use surgeme_kit::synthgen::{generate_trial, EmbodimentParams};

fn main() -> surgeme_kit::Result<()> {
    let trial = generate_trial(&EmbodimentParams::default(), 7)?;
    let segment = &trial.segments("taurus-sim", Domain::Sim, "demo-000")[0];
    println!("{} with {} raw frames", segment.label, segment.frames.len());

    let resampled = resample_segment(segment, FRAMES)?;
    let sequence = build_sequence_vector(&resampled);
    let spectral = spectral_features(&sequence);
    println!(
        "sequence vector {} values, spectral vector {} values ({} bins per channel)",
        sequence.values.len(),
        spectral.values.len(),
        spectral.bins
    );

    let transform = SpectralTransform::new(FRAMES);
    let block = sequence.block(0);
    let moved: Vec<f64> = block.iter().map(|v| 3.0 * v + 0.25).collect();
    let a = transform.block_features(block);
    let b = transform.block_features(&moved);
    let diff = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    println!("left x channel, first bins {:.4?}", &a[..4]);
    println!("after x -> 3x + 0.25, max |diff| {diff:.1e}");
    Ok(())
}
