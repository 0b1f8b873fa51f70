//! Evaluation protocol: trial-grouped cross-validation within one robot and
//! sim-to-real transfer with a sweep over the real:sim training ratio.

mod folds;
mod mixing;
mod report;
mod runner;

pub use folds::{grouped_folds, stratified_folds, Fold};
pub use mixing::{mix_training_data, real_count, MixedSet};
pub use report::{emit_report, read_report, render_svg, table_csv, CellResult, ExperimentReport, Series, SummaryRow};
pub use runner::{
    run_domain_transfer, run_domain_transfer_with, run_experiment, run_experiment_with, run_no_transfer,
    run_no_transfer_with, segment_instances, train_partition, fit_partition, Partition,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::LearnerSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    NoTransfer,
    DomainTransfer,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::NoTransfer => "no-transfer",
            Scenario::DomainTransfer => "domain-transfer",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    FrameWise,
    SequenceWise,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::FrameWise => "frame-wise",
            Mode::SequenceWise => "sequence-wise",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureKind {
    /// Resampled trajectories (sequence-wise) or per-frame channels (frame-wise).
    Raw,
    /// Per-channel magnitude spectra of resampled trajectories.
    Spectral,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Raw => "raw",
            FeatureKind::Spectral => "spectral",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub mode: Mode,
    pub feature_kind: FeatureKind,
    pub folds: usize,
    /// One repetition per seed; every cell derives its streams from it.
    pub seeds: Vec<u64>,
    /// Real:sim ratios swept by the transfer scenario.
    pub ratio_grid: Vec<f64>,
    /// Append joint angles to frame vectors for robots that record them.
    pub include_joints: bool,
    /// Robots to evaluate; empty means every robot in the dataset.
    pub robots: Vec<String>,
    /// Fraction of each real robot's trials held out for transfer testing.
    pub holdout_fraction: f64,
    pub learner: LearnerSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenario: Scenario::NoTransfer,
            mode: Mode::SequenceWise,
            feature_kind: FeatureKind::Spectral,
            folds: 5,
            seeds: vec![0, 1, 2],
            ratio_grid: vec![0.0, 0.05, 0.1, 0.18, 0.28, 0.5, 1.0],
            include_joints: false,
            robots: Vec::new(),
            holdout_fraction: 0.5,
            learner: LearnerSpec::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config(format!("folds must be at least 2, got {}", self.folds)));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if let Some(r) = self.ratio_grid.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            return Err(Error::Config(format!("ratio {r} must be a nonnegative number")));
        }
        if self.scenario == Scenario::DomainTransfer && self.ratio_grid.is_empty() {
            return Err(Error::Config("ratio_grid must not be empty for domain transfer".into()));
        }
        if self.mode == Mode::FrameWise && self.feature_kind == FeatureKind::Spectral {
            return Err(Error::Config(
                "spectral features need whole sequences; use feature_kind = \"raw\" with frame-wise mode".into(),
            ));
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return Err(Error::Config(format!(
                "holdout_fraction must lie in (0, 1), got {}",
                self.holdout_fraction
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariants_enforced() {
        assert!(ExperimentConfig::default().validate().is_ok());
        let one_fold = ExperimentConfig {
            folds: 1,
            ..Default::default()
        };
        assert!(matches!(one_fold.validate(), Err(Error::Config(_))));
        let frame_spectral = ExperimentConfig {
            mode: Mode::FrameWise,
            ..Default::default()
        };
        assert!(matches!(frame_spectral.validate(), Err(Error::Config(_))));
        let negative = ExperimentConfig {
            ratio_grid: vec![0.0, -0.5],
            ..Default::default()
        };
        assert!(negative.validate().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig {
            scenario: Scenario::DomainTransfer,
            ..Default::default()
        };
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(toml::from_str::<ExperimentConfig>(&text).unwrap(), cfg);
        assert!(toml::from_str::<ExperimentConfig>("foldz = 3").is_err());
    }
}
