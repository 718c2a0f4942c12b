use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::Refit;
use crate::io::Transform;
use crate::model::{ErrorFamily, ModelSpec, ParamState};
use crate::priors::PriorConfig;
use crate::sampler::McmcConfig;
use crate::selection::Estimator;
use crate::simulate::{StudyConfig, DEFAULT_BURN_IN};
use crate::surface::log_grid;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Fit,
    Simulate,
    Study,
    Compare,
    Forecast,
    Surface,
}

impl CommandKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandKind::Fit => "fit",
            CommandKind::Simulate => "simulate",
            CommandKind::Study => "study",
            CommandKind::Compare => "compare",
            CommandKind::Forecast => "forecast",
            CommandKind::Surface => "surface",
        }
    }
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CommandKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fit" => CommandKind::Fit,
            "simulate" => CommandKind::Simulate,
            "study" => CommandKind::Study,
            "compare" => CommandKind::Compare,
            "forecast" => CommandKind::Forecast,
            "surface" => CommandKind::Surface,
            other => return Err(Error::Config(format!("unknown command '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateSettings {
    pub n: usize,
    pub burn_in: usize,
    /// Generating parameters; the study values when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamState>,
}

impl Default for SimulateSettings {
    fn default() -> Self {
        SimulateSettings { n: 500, burn_in: DEFAULT_BURN_IN, params: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForecastSettings {
    /// First predicted index; 20 points before the end when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<usize>,
    pub window: usize,
    pub refit: Refit,
    pub damping: f64,
}

impl Default for ForecastSettings {
    fn default() -> Self {
        ForecastSettings { split: None, window: 5, refit: Refit::Full, damping: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurfaceSettings {
    pub gamma: Vec<f64>,
    pub nu: Vec<f64>,
    /// Values of the parameters held fixed; the study values when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base: Option<ParamState>,
}

impl Default for SurfaceSettings {
    fn default() -> Self {
        SurfaceSettings { gamma: log_grid(0.1, 100.0, 31), nu: log_grid(2.1, 200.0, 41), base: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompareSettings {
    /// Summary files of model 1 and model 2.
    pub model1: String,
    pub model2: String,
    pub estimator: Estimator,
    /// Model 1 is chosen when `B12` exceeds this.
    pub threshold: f64,
}

impl Default for CompareSettings {
    fn default() -> Self {
        CompareSettings {
            model1: String::new(),
            model2: String::new(),
            estimator: Estimator::NewtonRaftery,
            threshold: 3.0,
        }
    }
}

/// Everything a command needs, fully resolved. Written next to every output
/// and accepted back through `--config`, which reproduces the outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: CommandKind,
    /// Overrides `mcmc.seed` and `study.seed`.
    pub seed: u64,
    pub output: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
    #[serde(default)]
    pub transform: Transform,
    /// Newton-Raftery damping used in summaries.
    pub damping: f64,
    pub spec: ModelSpec,
    pub prior: PriorConfig,
    pub mcmc: McmcConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study: Option<StudyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forecast: Option<ForecastSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface: Option<SurfaceSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareSettings>,
}

impl RunManifest {
    /// Built-in defaults of a command.
    pub fn defaults(command: CommandKind) -> Self {
        let mut m = RunManifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            command,
            seed: McmcConfig::default().seed,
            output: "out".into(),
            input: None,
            column: None,
            transform: Transform::None,
            damping: 0.01,
            spec: ModelSpec::study(ErrorFamily::StudentT),
            prior: PriorConfig::default(),
            mcmc: McmcConfig::default(),
            simulate: None,
            study: None,
            forecast: None,
            surface: None,
            compare: None,
        };
        match command {
            CommandKind::Fit => {}
            CommandKind::Simulate => m.simulate = Some(SimulateSettings::default()),
            CommandKind::Study => {
                let s = StudyConfig::default();
                m.seed = s.seed;
                m.prior = PriorConfig::study();
                m.study = Some(s);
            }
            CommandKind::Compare => m.compare = Some(CompareSettings::default()),
            CommandKind::Forecast => m.forecast = Some(ForecastSettings::default()),
            CommandKind::Surface => m.surface = Some(SurfaceSettings::default()),
        }
        m.sync_seed();
        m
    }

    /// Defaults of `command`, overlaid with the keys present in `config`
    /// (TOML; dotted keys such as `mcmc.iterations = 2000` work) and then
    /// with each `key = value` line of `sets`.
    pub fn resolve(command: CommandKind, config: Option<&str>, sets: &[String]) -> Result<Self> {
        let mut value = toml::Value::try_from(RunManifest::defaults(command))
            .map_err(|e| Error::Config(e.to_string()))?;
        let mut overlays = Vec::new();
        if let Some(text) = config {
            overlays.push(parse_toml(text)?);
        }
        for s in sets {
            overlays.push(parse_toml(s).map_err(|e| Error::Config(format!("--set '{s}': {e}")))?);
        }
        for mut o in overlays {
            if let Some(t) = o.as_table_mut() {
                // The subcommand decides the command, not the file.
                t.remove("command");
            }
            merge(&mut value, o);
        }
        let mut m: RunManifest = value.try_into().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        m.command = command;
        m.sync_seed();
        Ok(m)
    }

    /// Copies the top-level seed into the nested configurations.
    pub fn sync_seed(&mut self) {
        self.mcmc.seed = self.seed;
        if let Some(s) = &mut self.study {
            s.seed = self.seed;
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(Error::Config(format!("unsupported manifest schema {}", self.schema_version)));
        }
        self.spec.validate()?;
        self.prior.validate()?;
        self.mcmc.validate()?;
        if let Some(s) = &self.study {
            s.validate()?;
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::Config(format!("damping must lie in (0, 1), got {}", self.damping)));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        let v = toml::Value::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        toml::to_string(&v).map_err(|e| Error::Config(e.to_string()))
    }

    /// Single-line JSON, for CSV comment headers and JSON outputs.
    pub fn to_json(&self) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(self)?)
    }
}

fn parse_toml(text: &str) -> Result<toml::Value> {
    text.parse::<toml::Table>()
        .map(toml::Value::Table)
        .map_err(|e| Error::Config(e.message().to_string()))
}

/// Recursive table merge; non-table values in `over` replace those in `base`.
fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_for_every_command() {
        for c in [
            CommandKind::Fit,
            CommandKind::Simulate,
            CommandKind::Study,
            CommandKind::Compare,
            CommandKind::Forecast,
            CommandKind::Surface,
        ] {
            let m = RunManifest::defaults(c);
            let text = m.to_toml().unwrap();
            let back = RunManifest::resolve(c, Some(&text), &[]).unwrap();
            assert_eq!(back, m, "{c}");
        }
    }

    #[test]
    fn dotted_keys_and_sets() {
        let cfg = "seed = 9\nmcmc.iterations = 300\nmcmc.burn_in = 100\nspec.p = 2\nprior.gamma0 = 2.5\n";
        let m = RunManifest::resolve(CommandKind::Fit, Some(cfg), &["mcmc.thin = 3".into()]).unwrap();
        assert_eq!((m.seed, m.mcmc.seed, m.mcmc.iterations, m.mcmc.thin), (9, 9, 300, 3));
        assert_eq!((m.spec.p, m.prior.gamma0), (2, 2.5));
        assert_eq!(m.mcmc.burn_in, 100);
        assert!(RunManifest::resolve(CommandKind::Fit, Some("mcmc.iterations = 'x'"), &[]).is_err());
    }

    #[test]
    fn gaussian_base_state_survives_json() {
        let mut m = RunManifest::defaults(CommandKind::Surface);
        let spec = ModelSpec::study(ErrorFamily::Gaussian);
        m.surface.as_mut().unwrap().base = Some(ParamState::study_truth(&spec, None));
        let json = m.to_json().unwrap();
        let back: RunManifest = serde_json::from_value(json).unwrap();
        assert_eq!(back, m);
        let back = RunManifest::resolve(CommandKind::Surface, Some(&m.to_toml().unwrap()), &[]).unwrap();
        assert_eq!(back, m);
    }
}
