//! Native random forest, one-vs-rest SVM and MLP classifiers behind one
//! train/predict interface.
//!
//! Every learner emits a probability distribution over the seven surgeme
//! classes. Classes absent from the training data get probability zero.
//! Argmax ties resolve to the lowest class id.

mod forest;
mod matrix;
mod mlp;
mod persist;
mod scaler;
mod svm;

pub use forest::{ForestParams, RandomForest};
pub use matrix::LabeledMatrix;
pub use mlp::{MlpModel, MlpParams, Network};
pub use persist::{load_model, read_model, save_model, write_model, FORMAT_VERSION, MAGIC};
pub use svm::{Kernel, SvmModel, SvmParams};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::NUM_CLASSES;

pub type Proba = [f64; NUM_CLASSES];

/// Index of the largest probability; ties go to the lowest index.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in p.iter().enumerate() {
        if *v > p[best] {
            best = i;
        }
    }
    best
}

pub trait Classifier: Send + Sync {
    /// Input dimension the model was trained on.
    fn dim(&self) -> usize;

    /// Probability of each class; non-negative and summing to one.
    fn predict_proba(&self, x: &[f64]) -> Result<Proba>;

    fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.predict_proba(x)?))
    }
}

pub(crate) fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimMismatch {
            expected,
            got: x.len(),
        });
    }
    Ok(())
}

/// Anything that can fit a classifier from labeled data and a seed.
pub trait Learner: Sync {
    fn name(&self) -> String;
    fn fit(&self, data: &LabeledMatrix, seed: u64) -> Result<Box<dyn Classifier>>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearnerKind {
    RandomForest,
    Svm,
    Mlp,
}

impl LearnerKind {
    pub fn short_name(self) -> &'static str {
        match self {
            LearnerKind::RandomForest => "rf",
            LearnerKind::Svm => "svm",
            LearnerKind::Mlp => "mlp",
        }
    }
}

/// A learner kind together with its hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LearnerSpec {
    RandomForest(ForestParams),
    Svm(SvmParams),
    Mlp(MlpParams),
}

impl Default for LearnerSpec {
    fn default() -> Self {
        LearnerSpec::RandomForest(ForestParams::default())
    }
}

impl LearnerSpec {
    pub fn kind(&self) -> LearnerKind {
        match self {
            LearnerSpec::RandomForest(_) => LearnerKind::RandomForest,
            LearnerSpec::Svm(_) => LearnerKind::Svm,
            LearnerSpec::Mlp(_) => LearnerKind::Mlp,
        }
    }

    pub fn train(&self, data: &LabeledMatrix, seed: u64) -> Result<ClassifierModel> {
        Ok(match self {
            LearnerSpec::RandomForest(p) => ClassifierModel::RandomForest(RandomForest::fit(data, p, seed)?),
            LearnerSpec::Svm(p) => ClassifierModel::Svm(SvmModel::fit(data, p, seed)?),
            LearnerSpec::Mlp(p) => ClassifierModel::Mlp(MlpModel::fit(data, p, seed)?),
        })
    }
}

impl Learner for LearnerSpec {
    fn name(&self) -> String {
        self.kind().short_name().to_string()
    }

    fn fit(&self, data: &LabeledMatrix, seed: u64) -> Result<Box<dyn Classifier>> {
        Ok(Box::new(self.train(data, seed)?))
    }
}

pub fn train_random_forest(data: &LabeledMatrix, params: &ForestParams, seed: u64) -> Result<ClassifierModel> {
    RandomForest::fit(data, params, seed).map(ClassifierModel::RandomForest)
}

pub fn train_svm(data: &LabeledMatrix, params: &SvmParams, seed: u64) -> Result<ClassifierModel> {
    SvmModel::fit(data, params, seed).map(ClassifierModel::Svm)
}

pub fn train_mlp(data: &LabeledMatrix, params: &MlpParams, seed: u64) -> Result<ClassifierModel> {
    MlpModel::fit(data, params, seed).map(ClassifierModel::Mlp)
}

/// A fitted model of any kind.
#[derive(Clone, Debug, PartialEq)]
pub enum ClassifierModel {
    RandomForest(RandomForest),
    Svm(SvmModel),
    Mlp(MlpModel),
}

impl ClassifierModel {
    pub fn kind(&self) -> LearnerKind {
        match self {
            ClassifierModel::RandomForest(_) => LearnerKind::RandomForest,
            ClassifierModel::Svm(_) => LearnerKind::Svm,
            ClassifierModel::Mlp(_) => LearnerKind::Mlp,
        }
    }

    pub fn spec(&self) -> LearnerSpec {
        match self {
            ClassifierModel::RandomForest(m) => LearnerSpec::RandomForest(m.params.clone()),
            ClassifierModel::Svm(m) => LearnerSpec::Svm(m.params.clone()),
            ClassifierModel::Mlp(m) => LearnerSpec::Mlp(m.params.clone()),
        }
    }
}

impl Classifier for ClassifierModel {
    fn dim(&self) -> usize {
        match self {
            ClassifierModel::RandomForest(m) => m.dim(),
            ClassifierModel::Svm(m) => m.dim(),
            ClassifierModel::Mlp(m) => m.dim(),
        }
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Proba> {
        match self {
            ClassifierModel::RandomForest(m) => m.predict_proba(x),
            ClassifierModel::Svm(m) => m.predict_proba(x),
            ClassifierModel::Mlp(m) => m.predict_proba(x),
        }
    }
}

/// Softmax restricted to `mask`; masked-out entries get zero.
pub(crate) fn masked_softmax(scores: &[f64], mask: &[bool]) -> Proba {
    let max = scores
        .iter()
        .zip(mask)
        .filter(|(_, m)| **m)
        .map(|(s, _)| *s)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut p = [0.0; NUM_CLASSES];
    let mut total = 0.0;
    for (i, (s, m)) in scores.iter().zip(mask).enumerate() {
        if *m {
            p[i] = (s - max).exp();
            total += p[i];
        }
    }
    for v in &mut p {
        *v /= total;
    }
    p
}
