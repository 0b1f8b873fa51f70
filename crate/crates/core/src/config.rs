//! Command-line configuration file (TOML). Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::ExperimentConfig;
use crate::model::{builtin_profiles, RobotProfile};
use crate::synthgen::BenchmarkSpec;

/// Where the dataset comes from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetSource {
    /// Generate the `[synth]` benchmark in memory.
    #[default]
    Synth,
    /// Load the trials listed in `dataset.manifest`.
    Manifest,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub source: DatasetSource,
    /// Manifest file; relative paths resolve against the config file's directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    /// Model file name inside the output directory.
    pub model_file: String,
    /// Real:sim ratio used when training a transfer model; defaults to the
    /// largest ratio of the experiment grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            model_file: "model.sgkm".into(),
            ratio: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CliConfig {
    /// Master seed. When set it replaces `synth.seed` and the experiment
    /// seeds become `seed, seed + 1, ...` (same count).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
    /// Output directory.
    pub out: PathBuf,
    pub dataset: DatasetConfig,
    /// Extra robot profiles, added to (or replacing) the built-in ones by name.
    pub profiles: Vec<RobotProfile>,
    pub synth: BenchmarkSpec,
    pub experiment: ExperimentConfig,
    pub train: TrainConfig,
}

impl Default for CliConfig {
    fn default() -> Self {
        CliConfig {
            seed: None,
            jobs: 0,
            out: PathBuf::from("surgeme-out"),
            dataset: DatasetConfig::default(),
            profiles: Vec::new(),
            synth: BenchmarkSpec::default(),
            experiment: ExperimentConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

impl CliConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().replace('\n', " ")))
    }

    /// Reads a config file; a relative manifest path is resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        if let Some(m) = &cfg.dataset.manifest {
            if m.is_relative() {
                let base = path.parent().unwrap_or(Path::new(""));
                cfg.dataset.manifest = Some(base.join(m));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Applies the master seed to the synth spec and experiment seeds.
    pub fn apply_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.synth.seed = seed;
        let n = self.experiment.seeds.len().max(1) as u64;
        self.experiment.seeds = (0..n).map(|k| seed.wrapping_add(k)).collect();
    }

    /// Built-in profiles overlaid with the configured ones.
    pub fn profiles(&self) -> Result<BTreeMap<String, RobotProfile>> {
        let mut all = builtin_profiles();
        for p in &self.profiles {
            p.validate()?;
            all.insert(p.name.clone(), p.clone());
        }
        Ok(all)
    }

    pub fn validate(&self) -> Result<()> {
        self.experiment.validate()?;
        self.synth.validate(&self.profiles()?)?;
        if self.dataset.source == DatasetSource::Manifest && self.dataset.manifest.is_none() {
            return Err(Error::Config("dataset.source = \"manifest\" needs dataset.manifest".into()));
        }
        if let Some(r) = self.train.ratio {
            if !(r.is_finite() && r >= 0.0) {
                return Err(Error::Config(format!("train.ratio {r} must be a nonnegative number")));
            }
        }
        Ok(())
    }
}

/// Annotated default configuration, as shipped in `config.reference.toml`.
pub fn reference_config() -> String {
    let defaults = CliConfig::default();
    let mut out = String::from(
        "# surgeme-kit configuration reference: every key with its default value.\n\
         # Unknown keys are rejected. Command-line flags override the matching keys:\n\
         #   --seed -> seed, --jobs -> jobs, --out -> out.\n\
         #\n\
         # seed: master seed; replaces synth.seed and makes experiment.seeds\n\
         #   seed, seed + 1, ... (same count). Unset by default.\n\
         # jobs: worker threads, 0 = every core.\n\
         # out: output directory.\n\
         # [dataset] source = \"synth\" generates [synth] in memory; \"manifest\"\n\
         #   loads dataset.manifest (relative to this file).\n\
         # [[profiles]]: extra robot profiles (name, orientation_encoding =\n\
         #   RotationMatrix9 | Quaternion4 | EulerRPY3, channels_per_arm,\n\
         #   joint_count, workspace_scale, domain_default, gripper_range, layout).\n\
         # [experiment]: scenario = no-transfer | domain-transfer,\n\
         #   mode = sequence-wise | frame-wise, feature_kind = spectral | raw\n\
         #   (frame-wise needs raw), robots = [] means all.\n\
         # [experiment.learner]: kind = random-forest | svm | mlp plus its\n\
         #   hyperparameters.\n\
         # [train]: model_file inside out; ratio (transfer only) defaults to the\n\
         #   largest experiment ratio.\n\n",
    );
    out.push_str(&defaults.to_toml());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_and_validate() {
        let cfg = CliConfig::default();
        cfg.validate().unwrap();
        assert_eq!(CliConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        assert_eq!(CliConfig::from_toml(&reference_config()).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(CliConfig::from_toml("sed = 3"), Err(Error::Config(_))));
        assert!(matches!(
            CliConfig::from_toml("[experiment]\nfolds = 3\nratios = [0.5]"),
            Err(Error::Config(_))
        ));
        assert!(CliConfig::from_toml("[experiment.learner]\nkind = \"svm\"\nc = 2.0\ncee = 1").is_err());
    }

    #[test]
    fn partial_config_fills_defaults() {
        let cfg = CliConfig::from_toml(
            "seed = 7\n[experiment]\nscenario = \"domain-transfer\"\n[experiment.learner]\nkind = \"svm\"\nc = 2.0\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.experiment.folds, 5);
        match &cfg.experiment.learner {
            crate::learners::LearnerSpec::Svm(p) => {
                assert_eq!(p.c, 2.0);
                assert_eq!(p.tol, 1e-3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reference_file_is_current() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config.reference.toml");
        if std::env::var_os("SURGEME_KIT_BLESS").is_some() {
            std::fs::write(&path, reference_config()).unwrap();
        }
        let on_disk = std::fs::read_to_string(&path).unwrap();
        assert_eq!(on_disk, reference_config(), "regenerate with SURGEME_KIT_BLESS=1");
    }

    #[test]
    fn master_seed_fans_out() {
        let mut cfg = CliConfig::default();
        cfg.apply_seed(40);
        assert_eq!(cfg.synth.seed, 40);
        assert_eq!(cfg.experiment.seeds, vec![40, 41, 42]);
    }
}
