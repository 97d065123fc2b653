//! Sweep specification file.
//!
//! TOML with the sweep fields at top level and the scenario under `[base]`:
//!
//! ```toml
//! parameter = "snr_db"
//! values = [0, 10, 20, 30, 40]
//! trials = 500
//! methods = ["music-signal", "omp", "ols", "omp-imusic", "ols-imusic"]
//! order = "rank-aic"
//! evaluator = "fft"
//!
//! [order_overrides]
//! ols = "hybrid"
//!
//! [base]
//! targets = 8
//! antennas = 16
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use doalab_core::{Evaluator, Method, OrderCriterion, ScenarioConfig};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer};

use crate::error::CliError;

pub const DEFAULT_TRIALS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    SnrDb,
    Targets,
    Subcarriers,
    Antennas,
}

impl SweepParameter {
    pub fn id(self) -> &'static str {
        match self {
            SweepParameter::SnrDb => "snr_db",
            SweepParameter::Targets => "targets",
            SweepParameter::Subcarriers => "subcarriers",
            SweepParameter::Antennas => "antennas",
        }
    }

    /// `base` with this parameter set to `value`.
    pub fn apply(self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig, CliError> {
        let mut cfg = base.clone();
        let count = || {
            if value.fract() == 0.0 && value >= 0.0 && value <= u32::MAX as f64 {
                Ok(value as usize)
            } else {
                Err(CliError::Config(format!("{} needs whole numbers, got {value}", self.id())))
            }
        };
        match self {
            SweepParameter::SnrDb => cfg.snr_db = value,
            SweepParameter::Targets => cfg.targets = count()?,
            SweepParameter::Subcarriers => cfg.subcarriers = count()?,
            SweepParameter::Antennas => cfg.antennas = count()?,
        }
        cfg.validate().map_err(|e| CliError::Config(format!("{} = {value}: {e}", self.id())))?;
        Ok(cfg)
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

fn parse_one<'de, D: Deserializer<'de>, T: FromStr>(d: D) -> Result<T, D::Error>
where
    T::Err: fmt::Display,
{
    let s = String::deserialize(d)?;
    s.parse().map_err(D::Error::custom)
}

fn parse_many<'de, D: Deserializer<'de>, T: FromStr>(d: D) -> Result<Vec<T>, D::Error>
where
    T::Err: fmt::Display,
{
    Vec::<String>::deserialize(d)?
        .iter()
        .map(|s| s.parse().map_err(D::Error::custom))
        .collect()
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(deserialize_with = "parse_many")]
    pub methods: Vec<Method>,
    /// Criterion for every method not listed in `order_overrides`.
    #[serde(default)]
    pub order: OrderCriterion,
    #[serde(default)]
    pub order_overrides: BTreeMap<String, OrderCriterion>,
    #[serde(default, deserialize_with = "parse_one")]
    pub evaluator: Evaluator,
    #[serde(default)]
    pub base: ScenarioConfig,
}

impl SweepSpec {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let spec: SweepSpec = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn criterion_for(&self, method: Method) -> OrderCriterion {
        self.order_overrides.get(method.id()).copied().unwrap_or(self.order)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |msg: String| Err(CliError::Config(msg));
        if self.values.is_empty() {
            return fail("values must not be empty".into());
        }
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.methods.is_empty() {
            return fail("methods must not be empty".into());
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return fail(format!("method {m} is listed twice"));
            }
        }
        for (name, criterion) in &self.order_overrides {
            let method: Method = name.parse().map_err(|e| CliError::Config(format!("order_overrides: {e}")))?;
            if !self.methods.contains(&method) {
                return fail(format!("order_overrides names {method}, which is not in methods"));
            }
            if *criterion == OrderCriterion::Hybrid && !method.is_stepwise() {
                return fail(format!("the hybrid criterion does not apply to {method}"));
            }
        }
        if self.order == OrderCriterion::Hybrid {
            if let Some(m) = self
                .methods
                .iter()
                .find(|m| !m.is_stepwise() && !self.order_overrides.contains_key(m.id()))
            {
                return fail(format!("the hybrid criterion does not apply to {m}; override it"));
            }
        }
        for &v in &self.values {
            self.parameter.apply(&self.base, v)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
parameter = "snr_db"
values = [0, 20]
methods = ["omp", "ols-imusic"]
[base]
targets = 2
antennas = 8
"#;

    #[test]
    fn minimal_file_takes_defaults() {
        let spec = SweepSpec::from_toml(MINIMAL).unwrap();
        assert_eq!(spec.trials, DEFAULT_TRIALS);
        assert_eq!(spec.evaluator, Evaluator::Fft);
        assert_eq!(spec.order, OrderCriterion::RankAic);
        assert_eq!(spec.base.subcarriers, 512);
        assert_eq!(spec.methods, vec![Method::Omp, Method::OlsImusic]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let top = format!("colour = 3\n{MINIMAL}");
        assert!(matches!(SweepSpec::from_toml(&top), Err(CliError::Config(_))));
        let nested = MINIMAL.replace("antennas = 8", "antennas = 8\nwavelength = 1");
        assert!(matches!(SweepSpec::from_toml(&nested), Err(CliError::Config(_))));
        let method = MINIMAL.replace("\"omp\"", "\"esprit\"");
        assert!(matches!(SweepSpec::from_toml(&method), Err(CliError::Config(_))));
    }

    #[test]
    fn invalid_values_are_rejected() {
        let bad = MINIMAL.replace("parameter = \"snr_db\"", "parameter = \"targets\"").replace("[0, 20]", "[2, 8]");
        assert!(SweepSpec::from_toml(&bad).is_err());
        let frac = MINIMAL.replace("parameter = \"snr_db\"", "parameter = \"targets\"").replace("[0, 20]", "[1.5]");
        assert!(SweepSpec::from_toml(&frac).is_err());
        let empty = MINIMAL.replace("[0, 20]", "[]");
        assert!(SweepSpec::from_toml(&empty).is_err());
    }

    #[test]
    fn overrides() {
        let text = MINIMAL.replace(
            "[base]",
            "evaluator = \"direct\"\n[order_overrides]\nols-imusic = \"hybrid\"\n[base]",
        );
        let spec = SweepSpec::from_toml(&text).unwrap();
        assert_eq!(spec.evaluator, Evaluator::Direct);
        assert_eq!(spec.criterion_for(Method::OlsImusic), OrderCriterion::Hybrid);
        assert_eq!(spec.criterion_for(Method::Omp), OrderCriterion::RankAic);

        let music = MINIMAL.replace("\"omp\"", "\"music-signal\"").replace("[base]", "order = \"hybrid\"\n[base]");
        assert!(SweepSpec::from_toml(&music).is_err());
    }
}
