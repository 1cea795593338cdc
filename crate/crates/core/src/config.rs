//! Run configuration read from TOML.
//!
//! ```toml
//! seed = 7
//! out = "runs/demo"
//! types = ["NAH", "SR"]
//! methods = ["none", "smote", "nearmiss3", "random-under"]
//! cv_folds = 5
//! holdout_ratio = 0.2
//! final_method = "random-under"
//! grid_search = false
//!
//! [input]
//! path = "services.csv"      # or a [synth] table
//!
//! [forest]
//! n_estimators = 100
//!
//! [miner]
//! min_ir = 1.4
//! [miner.overrides.NS]
//! min_ir = 1.9
//! delta_ir = 0.5
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::forest::{ForestConfig, GridSearchSpace};
use crate::resample::ResampleMethod;
use crate::rules::MinerConfig;
use crate::schema::FailureType;
use crate::synthgen::GeneratorConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    pub path: PathBuf,
}

fn de_method<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<ResampleMethod, D::Error> {
    let s = String::deserialize(d)?;
    s.parse().map_err(serde::de::Error::custom)
}

fn ser_method<S: Serializer>(m: &ResampleMethod, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(m.name())
}

fn de_methods<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<ResampleMethod>, D::Error> {
    Vec::<String>::deserialize(d)?
        .iter()
        .map(|s| s.parse().map_err(serde::de::Error::custom))
        .collect()
}

fn ser_methods<S: Serializer>(m: &[ResampleMethod], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(m.iter().map(ResampleMethod::name))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub types: Vec<FailureType>,
    #[serde(deserialize_with = "de_methods", serialize_with = "ser_methods")]
    pub methods: Vec<ResampleMethod>,
    pub cv_folds: usize,
    /// Fraction of stops held out when fitting the final model.
    pub holdout_ratio: f64,
    #[serde(deserialize_with = "de_method", serialize_with = "ser_method")]
    pub final_method: ResampleMethod,
    /// Tune the final model over `grid` instead of using `forest` as is.
    pub grid_search: bool,
    pub input: Option<InputConfig>,
    pub synth: Option<GeneratorConfig>,
    pub forest: ForestConfig,
    pub grid: GridSearchSpace,
    pub miner: MinerConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out: PathBuf::from("out"),
            types: FailureType::STUDIED.to_vec(),
            methods: ResampleMethod::ALL.to_vec(),
            cv_folds: 5,
            holdout_ratio: 0.2,
            final_method: ResampleMethod::RandomUnder,
            grid_search: false,
            input: None,
            synth: None,
            forest: ForestConfig::default(),
            grid: GridSearchSpace::default(),
            miner: MinerConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<RunConfig> {
        let c: RunConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    /// Reads a config; a relative `input.path` is resolved against the
    /// config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut c = RunConfig::from_toml_str(&text)?;
        if let (Some(input), Some(dir)) = (c.input.as_mut(), path.parent()) {
            if input.path.is_relative() {
                input.path = dir.join(&input.path);
            }
        }
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.types.is_empty() {
            return Err(Error::InvalidConfig("at least one failure type is required".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("at least one resampling method is required".into()));
        }
        if self.cv_folds < 2 {
            return Err(Error::InvalidConfig("cv_folds must be at least 2".into()));
        }
        if !(self.holdout_ratio > 0.0 && self.holdout_ratio < 1.0) {
            return Err(Error::InvalidConfig("holdout_ratio must lie in (0, 1)".into()));
        }
        if self.input.is_some() && self.synth.is_some() {
            return Err(Error::InvalidConfig("give either [input] or [synth], not both".into()));
        }
        for m in self.methods.iter().chain([&self.final_method]) {
            m.validate()?;
        }
        self.forest.validate()?;
        self.grid.validate()?;
        self.miner.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_round_trip() {
        let c = RunConfig::from_toml_str("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.types.len(), 5);
        let text = toml::to_string(&RunConfig { synth: Some(GeneratorConfig::default()), ..c }).unwrap();
        let back = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(back.synth, Some(GeneratorConfig::default()));
        assert_eq!(back.methods, ResampleMethod::ALL.to_vec());
    }

    #[test]
    fn parses_sections() {
        let c = RunConfig::from_toml_str(
            r#"
            seed = 9
            types = ["NAH", "NS"]
            methods = ["none", "random-under"]
            final_method = "smote"
            [input]
            path = "x.csv"
            [forest]
            n_estimators = 20
            criterion = "entropy"
            [miner.overrides.NS]
            min_ir = 1.9
            "#,
        )
        .unwrap();
        assert_eq!(c.types, vec![FailureType::Nah, FailureType::Ns]);
        assert_eq!(c.final_method, ResampleMethod::SMOTE);
        assert_eq!(c.forest.n_estimators, 20);
        assert_eq!(c.miner.for_type(FailureType::Ns).min_ir, 1.9);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::from_toml_str("types = []").is_err());
        assert!(RunConfig::from_toml_str("methods = [\"bogus\"]").is_err());
        assert!(RunConfig::from_toml_str("[miner]\nmin_ir = 0.5").is_err());
        assert!(RunConfig::from_toml_str("unknown_key = 1").is_err());
        assert!(RunConfig::from_toml_str("[input]\npath = \"a\"\n[synth]\nn_stops = 5").is_err());
    }
}
