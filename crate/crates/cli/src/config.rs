//! Run configuration: a flat JSON object of dotted keys (`"detector.k_max": 1e16`),
//! nested objects, and `key=value` overrides all resolve to the same [`RunConfig`].

use std::path::Path;
use std::str::FromStr;

use homodyne_core::{
    CoherentField, DetectorModel, HomodyneSetup, NoiseWidth, Protocol, RegimeThresholds,
};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMode {
    Constant,
    ShotScaled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub k_max: f64,
    pub n_sat: f64,
    /// Electron-count noise width. Defaults to `sqrt(0.01 k_max)`.
    pub sigma: Option<f64>,
    pub sigma_mode: SigmaMode,
    pub tau_w: f64,
    pub theta_lin: f64,
    pub theta_over: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        let thresholds = RegimeThresholds::default();
        Self {
            k_max: 1e16,
            n_sat: 1e17,
            sigma: None,
            sigma_mode: SigmaMode::Constant,
            tau_w: 1e-4,
            theta_lin: thresholds.linear,
            theta_over: thresholds.oversaturated,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpticsConfig {
    pub alpha_sq: f64,
    pub beta_sq: f64,
    pub chi: f64,
    pub phi: f64,
}

impl Default for OpticsConfig {
    fn default() -> Self {
        Self {
            alpha_sq: 1e16,
            beta_sq: 1e15,
            chi: 0.01,
            phi: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    AlphaSq,
    Shots,
}

impl SweepVariable {
    pub fn column(&self) -> &'static str {
        match self {
            SweepVariable::AlphaSq => "alpha_sq",
            SweepVariable::Shots => "shots",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepScale {
    Log,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub variable: SweepVariable,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub scale: SweepScale,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            variable: SweepVariable::AlphaSq,
            min: 1e14,
            max: 1e19,
            points: 60,
            scale: SweepScale::Log,
        }
    }
}

impl SweepConfig {
    pub fn values(&self) -> Vec<f64> {
        let steps = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let t = i as f64 / steps;
                match self.scale {
                    SweepScale::Log => self.min * (self.max / self.min).powf(t),
                    SweepScale::Linear => self.min + (self.max - self.min) * t,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloConfig {
    /// Shots averaged into one estimate.
    pub shots: u64,
    /// Independent ensembles (blocks) of `shots` shots.
    pub blocks: u64,
    pub seed: u64,
    pub protocol: Protocol,
    /// Add the Monte Carlo column to `precision`.
    pub empirical: bool,
    /// Permit Gaussian-approximated photon sampling (mean >= 1e6).
    pub allow_gaussian_approx: bool,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            shots: 10_000,
            blocks: 1,
            seed: 0,
            protocol: Protocol::Nonlinear,
            empirical: false,
            allow_gaussian_approx: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format `{other}` (expected csv|json)")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Standard output when absent.
    pub path: Option<String>,
    /// Command-specific default when absent.
    pub format: Option<OutputFormat>,
}

/// Fully resolved configuration. Defaults reproduce the Fig.-2 family:
/// `chi = 0.01`, `N_sat = 1e17`, `k_max / N_sat = 0.1`, `|beta|^2 = 1e15`,
/// `tau_w = 0.1 ms`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub detector: DetectorConfig,
    pub optics: OpticsConfig,
    pub sweep: SweepConfig,
    pub mc: MonteCarloConfig,
    pub output: OutputConfig,
}

fn set_dotted(root: &mut Map<String, Value>, key: &str, value: Value) -> Result<()> {
    let mut parts = key.split('.').peekable();
    let mut node = root;
    while let Some(part) = parts.next() {
        if part.is_empty() {
            return Err(CliError::config(format!("malformed key `{key}`")));
        }
        if parts.peek().is_none() {
            node.insert(part.to_string(), value);
            return Ok(());
        }
        let child = node
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
        node = child
            .as_object_mut()
            .ok_or_else(|| CliError::config(format!("key `{key}` descends into a scalar")))?;
    }
    Ok(())
}

fn flatten_into(prefix: &str, value: &Value, out: &mut Vec<(String, Value)>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten_into(&key, v, out);
            }
        }
        other => out.push((prefix.to_string(), other.clone())),
    }
}

/// Dotted `key -> value` pairs, in key order.
pub fn flatten(value: &Value) -> Vec<(String, Value)> {
    let mut out = Vec::new();
    flatten_into("", value, &mut out);
    out
}

/// Parses `key=value`; the value is read as JSON when possible, else as a string.
pub fn parse_override(raw: &str) -> Result<(String, Value)> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| CliError::config(format!("override `{raw}` is not of the form key=value")))?;
    let key = key.trim();
    let value = value.trim();
    let parsed = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
    Ok((key.to_string(), parsed))
}

impl RunConfig {
    /// Builds a configuration from an optional JSON document and overrides,
    /// applied in order.
    pub fn from_sources(
        document: Option<&str>,
        overrides: &[(String, Value)],
    ) -> Result<Self> {
        let mut root = Map::new();
        if let Some(text) = document {
            let parsed: Value = serde_json::from_str(text)
                .map_err(|e| CliError::config(format!("config is not valid JSON: {e}")))?;
            if !parsed.is_object() {
                return Err(CliError::config("config must be a JSON object"));
            }
            for (key, value) in flatten(&parsed) {
                set_dotted(&mut root, &key, value)?;
            }
        }
        for (key, value) in overrides {
            set_dotted(&mut root, key, value.clone())?;
        }
        let mut config: RunConfig = serde_json::from_value(Value::Object(root))
            .map_err(|e| CliError::config(e.to_string()))?;
        config.resolve();
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: Option<&Path>, overrides: &[(String, Value)]) -> Result<Self> {
        let text = match path {
            Some(p) => Some(std::fs::read_to_string(p).map_err(|source| CliError::Io {
                path: p.display().to_string(),
                source,
            })?),
            None => None,
        };
        Self::from_sources(text.as_deref(), overrides)
    }

    fn resolve(&mut self) {
        if self.detector.sigma.is_none() {
            self.detector.sigma = Some(NoiseWidth::default_for(self.detector.k_max).value());
        }
    }

    pub fn sigma(&self) -> f64 {
        self.detector
            .sigma
            .unwrap_or_else(|| NoiseWidth::default_for(self.detector.k_max).value())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(CliError::config(format!("{name} must be finite and > 0, got {v}")))
            }
        };
        let d = &self.detector;
        positive("detector.k_max", d.k_max)?;
        positive("detector.n_sat", d.n_sat)?;
        positive("detector.tau_w", d.tau_w)?;
        let sigma = self.sigma();
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(CliError::config(format!("detector.sigma must be >= 0, got {sigma}")));
        }
        let o = &self.optics;
        if !(o.alpha_sq.is_finite() && o.alpha_sq >= 0.0) {
            return Err(CliError::config("optics.alpha_sq must be finite and >= 0"));
        }
        positive("optics.beta_sq", o.beta_sq)?;
        if !(o.chi.is_finite() && o.phi.is_finite()) {
            return Err(CliError::config("optics.chi and optics.phi must be finite"));
        }
        let s = &self.sweep;
        if !(s.min.is_finite() && s.max.is_finite() && s.min < s.max) {
            return Err(CliError::config(format!(
                "sweep.min must be below sweep.max (got {} .. {})",
                s.min, s.max
            )));
        }
        if s.points < 2 {
            return Err(CliError::config("sweep.points must be >= 2"));
        }
        if s.scale == SweepScale::Log && s.min <= 0.0 {
            return Err(CliError::config("log sweeps need sweep.min > 0"));
        }
        if self.mc.shots == 0 || self.mc.blocks == 0 {
            return Err(CliError::config("mc.shots and mc.blocks must be >= 1"));
        }
        self.detector_model()?;
        Ok(())
    }

    pub fn noise(&self) -> NoiseWidth {
        match self.detector.sigma_mode {
            SigmaMode::Constant => NoiseWidth::Constant(self.sigma()),
            SigmaMode::ShotScaled => NoiseWidth::ShotScaled(self.sigma()),
        }
    }

    pub fn detector_model(&self) -> Result<DetectorModel> {
        let d = &self.detector;
        let det = DetectorModel::new(d.k_max, d.n_sat, self.noise(), d.tau_w)?
            .with_thresholds(RegimeThresholds {
                linear: d.theta_lin,
                oversaturated: d.theta_over,
            })?;
        Ok(det)
    }

    /// Setup with the configured optics, or with `alpha_sq` replaced.
    pub fn setup_with_signal(&self, alpha_sq: f64) -> Result<HomodyneSetup> {
        let det = self.detector_model()?;
        let signal = CoherentField::from_photons(alpha_sq, self.optics.chi)?;
        let lo = CoherentField::from_photons(self.optics.beta_sq, self.optics.phi)?;
        Ok(HomodyneSetup::symmetric(signal, lo, det)?)
    }

    pub fn setup(&self) -> Result<HomodyneSetup> {
        self.setup_with_signal(self.optics.alpha_sq)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
