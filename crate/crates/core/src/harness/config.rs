use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ecology::EcologyParams;
use crate::gateway::GatewayConfig;
use crate::policies::{BehaviourKind, PolicyParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    #[default]
    Procedural,
    Generative,
    NaiveEgta,
    ExpertEgta,
    Centralized,
}

impl Pipeline {
    pub const ALL: [Pipeline; 5] = [
        Pipeline::Procedural,
        Pipeline::Generative,
        Pipeline::NaiveEgta,
        Pipeline::ExpertEgta,
        Pipeline::Centralized,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Pipeline::Procedural => "procedural",
            Pipeline::Generative => "generative",
            Pipeline::NaiveEgta => "naive-egta",
            Pipeline::ExpertEgta => "expert-egta",
            Pipeline::Centralized => "centralized",
        }
    }

    /// Whether the pipeline talks to the language-model gateway.
    pub fn uses_gateway(self) -> bool {
        matches!(self, Pipeline::Generative | Pipeline::NaiveEgta)
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pipeline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_lowercase().replace('_', "-");
        Pipeline::ALL.into_iter().find(|p| p.as_str() == key).ok_or_else(|| {
            let names: Vec<&str> = Pipeline::ALL.iter().map(|p| p.as_str()).collect();
            Error::config(format!("unknown pipeline '{s}'; valid pipelines: {}", names.join(", ")))
        })
    }
}

/// Where yearly river inflows come from.
///
/// A CSV with columns `year,month,inflow` is used when `csv` names an existing
/// file; otherwise a seeded seasonal series is generated: a cosine peaking at
/// `peak_month` scaled by `seasonal_amplitude` around `mean_annual / 12`, times
/// mean-one lognormal noise with log-sd `noise_sigma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InflowConfig {
    pub csv: Option<PathBuf>,
    pub mean_annual: f64,
    pub seasonal_amplitude: f64,
    pub peak_month: u32,
    pub noise_sigma: f64,
}

impl Default for InflowConfig {
    fn default() -> Self {
        Self {
            csv: None,
            mean_annual: 1000.0,
            seasonal_amplitude: 0.9,
            peak_month: 7,
            noise_sigma: 0.15,
        }
    }
}

impl InflowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mean_annual >= 0.0) || !self.mean_annual.is_finite() {
            return Err(Error::config("inflow.mean_annual must be a finite value >= 0"));
        }
        if !(0.0..=1.0).contains(&self.seasonal_amplitude) {
            return Err(Error::config("inflow.seasonal_amplitude must lie in [0, 1]"));
        }
        if !(1..=12).contains(&self.peak_month) {
            return Err(Error::config("inflow.peak_month must lie in 1..=12"));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::config("inflow.noise_sigma must be a finite value >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub pipeline: Pipeline,
    pub horizon: u32,
    pub n_households: usize,
    pub max_fields: u32,
    pub tau: f64,
    pub profile: BehaviourKind,
    pub seed: u64,
    pub initial_budget: f64,
    /// Starting abundance of every fish age class.
    pub initial_fish: f64,
    /// Directory with prompt overrides; built-in prompts otherwise.
    pub prompts_dir: Option<PathBuf>,
    pub ecology: EcologyParams,
    pub policy: PolicyParams,
    pub gateway: GatewayConfig,
    pub inflow: InflowConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            pipeline: Pipeline::Procedural,
            horizon: 100,
            n_households: 9,
            max_fields: 10,
            tau: 0.0,
            profile: BehaviourKind::Rational,
            seed: 42,
            initial_budget: 200.0,
            initial_fish: 100.0,
            prompts_dir: None,
            ecology: EcologyParams::default(),
            policy: PolicyParams::default(),
            gateway: GatewayConfig::default(),
            inflow: InflowConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parses TOML text; relative paths are resolved against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.resolve_paths(base_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        fix(&mut self.prompts_dir);
        fix(&mut self.gateway.fixture);
        fix(&mut self.inflow.csv);
    }

    /// Policy parameters with the run-level field bound applied.
    pub fn policy_params(&self) -> PolicyParams {
        PolicyParams {
            max_fields: self.max_fields,
            ..self.policy.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::config("horizon must be >= 1"));
        }
        if self.n_households < 1 {
            return Err(Error::config("n_households must be >= 1"));
        }
        if !(self.tau >= 0.0) || !self.tau.is_finite() {
            return Err(Error::config(format!("tau must be a finite value >= 0, got {}", self.tau)));
        }
        if !self.initial_budget.is_finite() {
            return Err(Error::config("initial_budget must be finite"));
        }
        if !(self.initial_fish >= 0.0) || !self.initial_fish.is_finite() {
            return Err(Error::config("initial_fish must be a finite value >= 0"));
        }
        if self.pipeline == Pipeline::ExpertEgta && self.n_households < 2 {
            return Err(Error::config("expert-egta needs n_households >= 2"));
        }
        self.ecology.validate()?;
        self.policy.validate()?;
        self.inflow.validate()?;
        if self.pipeline.uses_gateway() {
            self.gateway.validate()?;
        }
        Ok(())
    }
}

/// Reads, defaults and validates a TOML run configuration.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    RunConfig::from_toml_str(&text, base).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
