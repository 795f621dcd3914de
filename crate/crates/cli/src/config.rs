//! Run configuration: one JSON document describing the dataset, the action
//! space, the learner and the pipeline settings.

use std::fs;
use std::path::{Path, PathBuf};

use paramtune::dataset::{generate_dataset, load_dataset, Sample, SyntheticConfig};
use paramtune::evaluation::PipelineSettings;
use paramtune::param_space::{reference_operators, ActionSpace, OperatorSpec};
use paramtune::qlearn::LearnerConfig;
use paramtune::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    /// Directory of `img_NNN.pgm` / `img_NNN_mask.pgm` pairs.
    Directory(PathBuf),
    Synthetic(SyntheticConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetSource,
    pub operators: Vec<OperatorSpec>,
    pub learner: LearnerConfig,
    pub pipeline: PipelineSettings,
    pub output_dir: PathBuf,
    /// Seeds both the synthetic generator and the learner.
    pub seed: u64,
    /// Write a per-step `trace.csv` during training.
    pub trace: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetSource::Synthetic(SyntheticConfig::default()),
            operators: reference_operators(),
            learner: LearnerConfig::default(),
            pipeline: PipelineSettings::default(),
            output_dir: PathBuf::from("out"),
            seed: 42,
            trace: false,
        }
    }
}

impl RunConfig {
    /// The 10-image, 64x64 synthetic task used to compare training against
    /// the grid-search oracle.
    pub fn reference_task(seed: u64) -> Self {
        Self {
            dataset: DatasetSource::Synthetic(SyntheticConfig::small(10, seed)),
            pipeline: PipelineSettings::small(),
            seed,
            ..Self::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file. A relative dataset directory is resolved against
    /// the file's own directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
        let mut cfg = Self::from_json(&text).map_err(|e| e.in_file(path))?;
        if let DatasetSource::Directory(dir) = &mut cfg.dataset {
            if dir.is_relative() {
                if let Some(base) = path.parent() {
                    *dir = base.join(&*dir);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.learner.validate()?;
        self.pipeline.validate()?;
        if let DatasetSource::Synthetic(s) = &self.dataset {
            s.validate()?;
        }
        ActionSpace::new(self.operators.clone())?;
        Ok(())
    }

    /// Applies a command-line seed and the command-line output directory.
    pub fn with_overrides(mut self, seed: Option<u64>, out: Option<PathBuf>) -> Self {
        if let Some(seed) = seed {
            self.seed = seed;
        }
        if let Some(out) = out {
            self.output_dir = out;
        }
        self
    }

    pub fn space(&self) -> Result<ActionSpace> {
        ActionSpace::new(self.operators.clone())
    }

    pub fn learner(&self) -> LearnerConfig {
        LearnerConfig {
            seed: self.seed,
            ..self.learner.clone()
        }
    }

    pub fn synthetic(&self) -> Option<SyntheticConfig> {
        match &self.dataset {
            DatasetSource::Synthetic(s) => Some(SyntheticConfig {
                seed: self.seed,
                ..s.clone()
            }),
            DatasetSource::Directory(_) => None,
        }
    }

    pub fn samples(&self) -> Result<Vec<Sample>> {
        match (&self.dataset, self.synthetic()) {
            (_, Some(s)) => generate_dataset(&s),
            (DatasetSource::Directory(dir), None) => load_dataset(dir),
            (DatasetSource::Synthetic(_), None) => unreachable!(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        for cfg in [RunConfig::default(), RunConfig::reference_task(3)] {
            let text = cfg.to_json();
            let back = RunConfig::from_json(&text).unwrap();
            assert_eq!(back.to_json(), text);
            assert_eq!(RunConfig::from_json(&back.to_json()).unwrap(), back);
            assert_eq!(back.synthetic(), cfg.synthetic());
        }
    }

    #[test]
    fn partial_documents_fill_defaults() {
        let cfg = RunConfig::from_json(r#"{"dataset": {"directory": "data"}, "seed": 5}"#).unwrap();
        assert_eq!(cfg.dataset, DatasetSource::Directory("data".into()));
        assert_eq!(cfg.learner(), LearnerConfig { seed: 5, ..LearnerConfig::default() });
        assert_eq!(cfg.space().unwrap().count(), 35);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in [
            r#"{"sed": 1}"#,
            r#"{"learner": {"alpha": 0.1, "beta": 2}}"#,
            r#"{"dataset": {"synthetic": {"count": 2, "colour": 1}}}"#,
            r#"{"dataset": {"url": "x"}}"#,
        ] {
            let err = RunConfig::from_json(text).unwrap_err();
            assert!(err.is_config(), "{text}: {err}");
        }
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for text in [
            r#"{"learner": {"alpha": 0}}"#,
            r#"{"pipeline": {"weights": {"w1": 1, "w2": 1, "w3": 0, "w4": 0}}}"#,
            r#"{"operators": []}"#,
            r#"{"dataset": {"synthetic": {"width": 20}}}"#,
        ] {
            let err = RunConfig::from_json(text).unwrap_err();
            assert!(err.is_config(), "{text}: {err}");
        }
    }

    #[test]
    fn seed_reaches_learner_and_generator() {
        let cfg = RunConfig::default().with_overrides(Some(9), Some("elsewhere".into()));
        assert_eq!(cfg.learner().seed, 9);
        assert_eq!(cfg.synthetic().unwrap().seed, 9);
        assert_eq!(cfg.output_dir, PathBuf::from("elsewhere"));
    }
}
