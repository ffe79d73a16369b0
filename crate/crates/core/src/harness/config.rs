use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    VerifyIdentities,
    PolarProperties,
    BipolarRoundtrip,
    ScalarTarget,
    Tracial,
    ScalarDomain,
    Jamiolkowski,
    ScalarCase,
    Tomography,
}

impl Scenario {
    pub const ALL: [Scenario; 9] = [
        Scenario::VerifyIdentities,
        Scenario::PolarProperties,
        Scenario::BipolarRoundtrip,
        Scenario::ScalarTarget,
        Scenario::Tracial,
        Scenario::ScalarDomain,
        Scenario::Jamiolkowski,
        Scenario::ScalarCase,
        Scenario::Tomography,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::VerifyIdentities => "verify-identities",
            Scenario::PolarProperties => "polar-properties",
            Scenario::BipolarRoundtrip => "bipolar-roundtrip",
            Scenario::ScalarTarget => "scalar-target",
            Scenario::Tracial => "tracial",
            Scenario::ScalarDomain => "scalar-domain",
            Scenario::Jamiolkowski => "jamiolkowski",
            Scenario::ScalarCase => "scalar-case",
            Scenario::Tomography => "tomography",
        }
    }

    /// Tolerances a scenario checks against unless the config overrides them.
    pub fn default_tolerances(self) -> BTreeMap<String, f64> {
        let pairs: &[(&str, f64)] = match self {
            Scenario::VerifyIdentities => &[("identity", 1e-10), ("abs_grid", 1e-4), ("abs_refined", 1e-7)],
            Scenario::PolarProperties => &[("slack", 1e-8)],
            Scenario::BipolarRoundtrip => &[("epsilon", 1e-6), ("margin", 0.01)],
            Scenario::ScalarTarget | Scenario::Tracial | Scenario::ScalarDomain | Scenario::Jamiolkowski => {
                &[("identity", 1e-11)]
            }
            Scenario::ScalarCase => &[("grid_step", 1e-4)],
            Scenario::Tomography => &[("reconstruction", 1e-9)],
        };
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Scenario::ALL.iter().map(|s| s.name()).collect();
                Error::InvalidInput(format!("unknown scenario {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub seed: u64,
    pub dims: (usize, usize),
    pub trials: usize,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub csv_path: Option<PathBuf>,
    /// Generator set for `scalar-case`.
    #[serde(default)]
    pub scalar_k: Option<Vec<f64>>,
    #[serde(default)]
    pub hull_samples: Option<usize>,
}

/// Config document as written by users: everything optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub scenario: Option<String>,
    pub seed: Option<u64>,
    pub dims: Option<(usize, usize)>,
    pub trials: Option<usize>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    pub output_path: Option<PathBuf>,
    pub csv_path: Option<PathBuf>,
    pub scalar_k: Option<Vec<f64>>,
    pub hull_samples: Option<usize>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(super::json::parse_error)
    }
}

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TRIALS: usize = 20;

impl ExperimentConfig {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            seed: DEFAULT_SEED,
            dims: (2, 2),
            trials: DEFAULT_TRIALS,
            tolerances: scenario.default_tolerances(),
            output_path: None,
            csv_path: None,
            scalar_k: None,
            hull_samples: None,
        }
    }

    /// Builds a config from a file with command-line overrides on top.
    pub fn resolve(file: ConfigFile, overrides: Overrides) -> Result<Self> {
        let name = overrides
            .scenario
            .or(file.scenario)
            .ok_or_else(|| Error::InvalidInput("no scenario given".into()))?;
        let scenario: Scenario = name.parse()?;
        let mut cfg = ExperimentConfig::new(scenario);
        cfg.tolerances.extend(file.tolerances);
        cfg.seed = overrides.seed.or(file.seed).unwrap_or(cfg.seed);
        cfg.dims = file.dims.unwrap_or(cfg.dims);
        cfg.trials = overrides.trials.or(file.trials).unwrap_or(cfg.trials);
        cfg.output_path = overrides.output_path.or(file.output_path);
        cfg.csv_path = overrides.csv_path.or(file.csv_path);
        cfg.scalar_k = file.scalar_k;
        cfg.hull_samples = file.hull_samples;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let (m, n) = self.dims;
        if !(1..=4).contains(&m) || !(1..=4).contains(&n) {
            return Err(Error::Validation(format!("dims ({m}, {n}) must lie in [1, 4]")));
        }
        if self.trials == 0 {
            return Err(Error::Validation("trials must be at least 1".into()));
        }
        if let Some((name, v)) = self.tolerances.iter().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Validation(format!("tolerance {name} = {v} is not a nonnegative number")));
        }
        if let Some(k) = &self.scalar_k {
            if k.is_empty() || k.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(Error::Validation("scalar_k must be a nonempty list of nonnegative numbers".into()));
            }
        }
        Ok(())
    }

    pub fn tolerance(&self, name: &str) -> f64 {
        self.tolerances
            .get(name)
            .copied()
            .or_else(|| self.scenario.default_tolerances().get(name).copied())
            .unwrap_or(0.0)
    }
}

/// Values given on the command line; they win over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub scenario: Option<String>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub output_path: Option<PathBuf>,
    pub csv_path: Option<PathBuf>,
}
