//! Trains the random forest, SVM and MLP on spectral features of a small
//! synthetic set, then saves and reloads the forest.
//!
//! Run with `cargo run --release --example train_classifiers`.

use surgeme_kit::features::{build_sequence_vector, spectral_features};
use surgeme_kit::learners::{
    load_model, save_model, train_mlp, train_random_forest, train_svm, Classifier, ClassifierModel, ForestParams,
    LabeledMatrix, MlpParams, SvmParams,
};
use surgeme_kit::model::{Domain, SurgemeSegment};
use surgeme_kit::preprocess::{resample_segment, FRAMES};
use surgeme_kit::synthgen::{generate_trial, Direction, EmbodimentParams};

fn matrix(segments: &[SurgemeSegment]) -> surgeme_kit::Result<LabeledMatrix> {
    let mut rows = Vec::new();
    for s in segments {
        let f = spectral_features(&build_sequence_vector(&resample_segment(s, FRAMES)?));
        rows.push((f.values, s.label.id()));
    }
    LabeledMatrix::from_rows(rows)
}

fn accuracy(model: &ClassifierModel, data: &LabeledMatrix) -> surgeme_kit::Result<f64> {
    let mut correct = 0;
    for i in 0..data.len() {
        if model.predict(data.row(i))? == data.label(i) {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

fn main() -> surgeme_kit::Result<()> {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for t in 0..8u64 {
        let params = EmbodimentParams {
            direction: if t % 2 == 0 { Direction::LeftToRight } else { Direction::RightToLeft },
            ..Default::default()
        };
        let segs = generate_trial(&params, 100 + t)?.segments("taurus-sim", Domain::Sim, &format!("t{t}"));
        if t < 6 { train.extend(segs) } else { test.extend(segs) }
    }
    let (train, test) = (matrix(&train)?, matrix(&test)?);
    println!("{} training rows, {} test rows, dim {}", train.len(), test.len(), train.dim());

    let forest = train_random_forest(&train, &ForestParams { trees: 50, ..Default::default() }, 1)?;
    let svm = train_svm(&train, &SvmParams::default(), 1)?;
    let mlp = train_mlp(&train, &MlpParams { epochs: 100, ..Default::default() }, 1)?;
    for model in [&forest, &svm, &mlp] {
        println!("{:<4} held-out accuracy {:.3}", model.kind().short_name(), accuracy(model, &test)?);
    }

    let path = std::env::temp_dir().join("surgeme-kit-forest.sgkm");
    save_model(&path, &forest)?;
    let reloaded = load_model(&path)?;
    println!("reloaded from {}: accuracy {:.3}", path.display(), accuracy(&reloaded, &test)?);
    println!("class probabilities of the first test row {:.2?}", reloaded.predict_proba(test.row(0))?);
    Ok(())
}
