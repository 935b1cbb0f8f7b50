//! Flat `section.key = value` configuration files.
//!
//! Every section has typed defaults; a file (or `--set` overrides) only lists the keys it
//! changes. Values are numbers, booleans, comma-separated number lists or bare strings.

use nlslab_core::acceptance::AcceptanceConfig;
use nlslab_core::pde::Splitting;
use nlslab_core::provenance::Provenance;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `section.key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown section `{0}`")]
    UnknownSection(String),
    #[error("section `{section}`: {message}")]
    Invalid { section: String, message: String },
    #[error("cannot read config {path}: {source}")]
    Read { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroundStateSection {
    pub r_max: f64,
    pub spacing: f64,
    pub tol: f64,
}

impl Default for GroundStateSection {
    fn default() -> Self {
        Self { r_max: 30.0, spacing: 0.005, tol: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InteractionsSection {
    pub norms: Vec<f64>,
    pub spacing: f64,
}

impl Default for InteractionsSection {
    fn default() -> Self {
        Self { norms: vec![8.0, 10.0, 12.0, 14.0], spacing: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    pub k: usize,
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self { k: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnsatzSection {
    pub lambda: f64,
    pub z: f64,
    pub gamma: f64,
    pub beta: f64,
    pub b: f64,
    pub n: usize,
    /// Half-width of the rescaled box; zero picks one from the separation.
    pub half_width: f64,
    pub heatmaps: bool,
}

impl Default for AnsatzSection {
    fn default() -> Self {
        Self { lambda: 1.0, z: 8.0, gamma: 0.0, beta: 0.0, b: 1e-3, n: 256, half_width: 0.0, heatmaps: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReducedOdeSection {
    pub s_in: f64,
    pub s0: f64,
    pub tol: f64,
}

impl Default for ReducedOdeSection {
    fn default() -> Self {
        Self { s_in: 1e6, s0: 1e3, tol: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdeSection {
    /// `soliton` or `gaussian`.
    pub initial: String,
    pub amplitude: f64,
    pub width: f64,
    pub n: usize,
    pub half_width: f64,
    pub dt: f64,
    pub t_end: f64,
    pub stride: usize,
}

impl Default for PdeSection {
    fn default() -> Self {
        Self {
            initial: "soliton".into(),
            amplitude: 1.5,
            width: 1.0,
            n: 256,
            half_width: 20.0,
            dt: 1e-3,
            t_end: 1.0,
            stride: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackSection {
    pub s_in: f64,
    /// Shooting target used to select the final data when `zeta_sharp` is not set.
    pub s0: f64,
    pub zeta_sharp: Option<f64>,
    pub n: usize,
    pub half_width: f64,
    pub dt: f64,
    pub duration: f64,
    pub cadence: usize,
    pub tol: f64,
    pub closeness: f64,
    pub splitting: Splitting,
}

impl Default for TrackSection {
    fn default() -> Self {
        Self {
            s_in: 100.0,
            s0: 20.0,
            zeta_sharp: None,
            n: 256,
            half_width: 8.0,
            dt: 2.5e-4,
            duration: 2.0,
            cadence: 800,
            tol: 1e-10,
            closeness: nlslab_core::modulation_fit::DEFAULT_CLOSENESS,
            splitting: Splitting::Fourth,
        }
    }
}

/// The resolved configuration of one invocation.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub groundstate: GroundStateSection,
    pub interactions: InteractionsSection,
    pub geometry: GeometrySection,
    pub ansatz: AnsatzSection,
    pub reduced_ode: ReducedOdeSection,
    pub pde: PdeSection,
    pub track: TrackSection,
    pub acceptance: AcceptanceConfig,
}

fn parse_value(raw: &str) -> Value {
    let raw = raw.trim();
    if let Ok(v) = raw.parse::<i64>() {
        return Value::from(v);
    }
    if let Ok(v) = raw.parse::<f64>() {
        return Value::from(v);
    }
    match raw {
        "true" => return Value::Bool(true),
        "false" => return Value::Bool(false),
        _ => {}
    }
    if raw.contains(',') {
        let parts: Option<Vec<Value>> = raw.split(',').map(|p| p.trim().parse::<f64>().ok().map(Value::from)).collect();
        if let Some(list) = parts {
            return Value::Array(list);
        }
    }
    Value::String(raw.trim_matches('"').to_string())
}

impl ExperimentConfig {
    /// Parses `section.key = value` lines. Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let syntax = || ConfigError::Syntax { line: i + 1, text: line.to_string() };
            let (key, value) = line.split_once('=').ok_or_else(syntax)?;
            let (section, field) = key.trim().split_once('.').ok_or_else(syntax)?;
            entries.push((section.trim().to_string(), field.trim().to_string(), value.trim().to_string()));
        }
        cfg.apply(&entries)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    /// Applies `section.key=value` overrides.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<(), ConfigError> {
        let text = overrides.join("\n");
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let syntax = || ConfigError::Syntax { line: i + 1, text: line.to_string() };
            let (key, value) = line.split_once('=').ok_or_else(syntax)?;
            let (section, field) = key.trim().split_once('.').ok_or_else(syntax)?;
            entries.push((section.trim().to_string(), field.trim().to_string(), value.trim().to_string()));
        }
        self.apply(&entries)
    }

    fn apply(&mut self, entries: &[(String, String, String)]) -> Result<(), ConfigError> {
        let mut root = serde_json::to_value(&*self).expect("config serializes");
        let sections = root.as_object_mut().expect("config is an object");
        for (section, field, value) in entries {
            let obj: &mut Map<String, Value> = sections
                .get_mut(section)
                .and_then(Value::as_object_mut)
                .ok_or_else(|| ConfigError::UnknownSection(section.clone()))?;
            let mut parsed = parse_value(value);
            // single-element lists are written without a comma
            if matches!(obj.get(field), Some(Value::Array(_))) && !parsed.is_array() {
                parsed = Value::Array(vec![parsed]);
            }
            obj.insert(field.clone(), parsed);
        }
        for (name, section) in sections.iter() {
            let check: Result<(), serde_json::Error> = match name.as_str() {
                "groundstate" => serde_json::from_value::<GroundStateSection>(section.clone()).map(drop),
                "interactions" => serde_json::from_value::<InteractionsSection>(section.clone()).map(drop),
                "geometry" => serde_json::from_value::<GeometrySection>(section.clone()).map(drop),
                "ansatz" => serde_json::from_value::<AnsatzSection>(section.clone()).map(drop),
                "reduced_ode" => serde_json::from_value::<ReducedOdeSection>(section.clone()).map(drop),
                "pde" => serde_json::from_value::<PdeSection>(section.clone()).map(drop),
                "track" => serde_json::from_value::<TrackSection>(section.clone()).map(drop),
                _ => serde_json::from_value::<AcceptanceConfig>(section.clone()).map(drop),
            };
            check.map_err(|e| ConfigError::Invalid { section: name.clone(), message: e.to_string() })?;
        }
        *self = serde_json::from_value(root).map_err(|e| ConfigError::Invalid { section: "config".into(), message: e.to_string() })?;
        self.validate()
    }

    /// Rejects geometries with fewer than two bubbles and non-positive tolerances.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |section: &str, message: &str| Err(ConfigError::Invalid { section: section.into(), message: message.into() });
        if self.geometry.k < 2 {
            return bad("geometry", "k must be at least 2");
        }
        let tolerances = [
            ("groundstate", self.groundstate.tol),
            ("groundstate", self.groundstate.spacing),
            ("interactions", self.interactions.spacing),
            ("reduced_ode", self.reduced_ode.tol),
            ("track", self.track.tol),
            ("track", self.track.closeness),
            ("acceptance", self.acceptance.shooting_tol),
            ("acceptance", self.acceptance.shoot_tol),
        ];
        for (section, tol) in tolerances {
            if tol.is_nan() || tol <= 0.0 {
                return bad(section, "every tolerance and spacing must be positive");
            }
        }
        if !matches!(self.pde.initial.as_str(), "soliton" | "gaussian") {
            return bad("pde", "initial must be `soliton` or `gaussian`");
        }
        Ok(())
    }

    /// Canonical text whose hash stamps every artifact.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn provenance(&self) -> Provenance {
        Provenance::for_config(&self.canonical())
    }
}
