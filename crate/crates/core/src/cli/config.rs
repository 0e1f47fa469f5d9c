//! Run configuration: TOML or JSON files with dotted sections, plus
//! `key=value` overrides. Every key may be written fully qualified
//! (`lattice.gamma`) or bare (`gamma`).

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::experiments::{default_ratio_grid, fig4_preset, Model, FIG2_G_VALUES, FIG3_DELTA_VALUES};
use crate::lattice::LatticeParams;
use crate::ode::{IntegratorConfig, Method};

/// Rings smaller than this get a wrap-around warning.
pub const SMALL_RING_WARNING: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

fn section_error(section: &str, e: crate::Error) -> ConfigError {
    match e {
        crate::Error::InvalidParameter { name, reason } => err(format!("{section}.{name}: {reason}")),
        other => err(format!("{section}: {other}")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Custom,
}

impl FromStr for Scenario {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fig2" => Ok(Scenario::Fig2),
            "fig3" => Ok(Scenario::Fig3),
            "fig4" => Ok(Scenario::Fig4),
            "fig5" => Ok(Scenario::Fig5),
            "custom" => Ok(Scenario::Custom),
            other => Err(err(format!("scenario: unknown scenario `{other}` (fig2|fig3|fig4|fig5|custom)"))),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Fig2 => "fig2",
            Scenario::Fig3 => "fig3",
            Scenario::Fig4 => "fig4",
            Scenario::Fig5 => "fig5",
            Scenario::Custom => "custom",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl FromStr for Format {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(err(format!("formats: unknown format `{other}` (csv|json|svg)"))),
        }
    }
}

pub fn parse_formats(s: &str) -> Result<Vec<Format>, ConfigError> {
    let mut out = s.split(',').filter(|x| !x.trim().is_empty()).map(Format::from_str).collect::<Result<Vec<_>, _>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub g_values: Vec<f64>,
    pub delta_values: Vec<f64>,
    pub ratios: Vec<f64>,
    pub models: Vec<Model>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSettings {
    pub formats: Vec<Format>,
}

/// Fully resolved configuration; this is what `config.resolved.json` holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub lattice: LatticeParams,
    pub integrator: IntegratorConfig,
    pub sweep: SweepSettings,
    pub output: OutputSettings,
}

impl RunConfig {
    pub fn defaults(scenario: Scenario) -> Self {
        let lattice = match scenario {
            Scenario::Fig4 => fig4_preset(),
            _ => LatticeParams::default(),
        };
        let (g_values, models) = match scenario {
            Scenario::Fig5 => (vec![4.0, 0.5], vec![Model::FullGpe, Model::RateSelfconsistent]),
            Scenario::Fig4 => (vec![0.0], vec![Model::FullGpe, Model::RateSelfconsistent]),
            Scenario::Custom => (
                vec![lattice.g],
                vec![Model::FullGpe, Model::RateSelfconsistent, Model::Analytic, Model::IncoherentFormula],
            ),
            _ => (FIG2_G_VALUES.to_vec(), vec![Model::FullGpe, Model::IncoherentFormula]),
        };
        Self {
            scenario,
            lattice,
            integrator: IntegratorConfig::default(),
            sweep: SweepSettings {
                g_values,
                delta_values: FIG3_DELTA_VALUES.to_vec(),
                ratios: default_ratio_grid(),
                models,
            },
            output: OutputSettings { formats: vec![Format::Csv] },
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.lattice.validate().map_err(|e| section_error("lattice", e))?;
        self.integrator.validate().map_err(|e| section_error("integrator", e))?;
        if let Some(r) = self.sweep.ratios.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(err(format!("sweep.ratios: ratio {r} outside [0, 1]")));
        }
        if self.sweep.ratios.is_empty() {
            return Err(err("sweep.ratios: must not be empty"));
        }
        if self.sweep.models.is_empty() {
            return Err(err("sweep.models: must not be empty"));
        }
        if self.sweep.g_values.iter().any(|g| !g.is_finite()) {
            return Err(err("sweep.g_values: values must be finite"));
        }
        if self.sweep.delta_values.iter().any(|d| !d.is_finite()) {
            return Err(err("sweep.delta_values: values must be finite"));
        }
        if matches!(self.scenario, Scenario::Fig4 | Scenario::Fig5)
            && self.sweep.g_values.iter().any(|g| *g < 0.0)
        {
            return Err(err("sweep.g_values: the rate closure needs g >= 0"));
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.lattice.n_cells < SMALL_RING_WARNING {
            w.push(format!(
                "lattice.n_cells = {}: small rings wrap around before the particle decays, which distorts the displacement",
                self.lattice.n_cells
            ));
        }
        w
    }
}

const KEYS: &[&str] = &[
    "scenario",
    "lattice.v",
    "lattice.v_prime",
    "lattice.gamma",
    "lattice.g",
    "lattice.eps_a",
    "lattice.eps_b",
    "lattice.delta_offset",
    "lattice.n_cells",
    "integrator.method",
    "integrator.rel_tol",
    "integrator.abs_tol",
    "integrator.t_final",
    "integrator.max_step",
    "integrator.n_samples",
    "integrator.stop_survival",
    "sweep.g_values",
    "sweep.delta_values",
    "sweep.ratios",
    "sweep.models",
    "output.formats",
];

/// Full dotted name of `key`, which may be bare or dotted.
pub fn canonical_key(key: &str) -> Result<&'static str, ConfigError> {
    if let Some(k) = KEYS.iter().find(|k| **k == key) {
        return Ok(k);
    }
    let mut bare = KEYS.iter().filter(|k| k.rsplit('.').next() == Some(key));
    match (bare.next(), bare.next()) {
        (Some(k), None) => Ok(k),
        _ => Err(err(format!("{key}: unknown configuration key"))),
    }
}

/// Ordered list of `(key, value)` assignments.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignments(pub Vec<(String, Value)>);

impl Assignments {
    fn flatten_into(&mut self, prefix: &str, value: Value) {
        match value {
            Value::Object(map) => {
                for (k, v) in map {
                    let key = if prefix.is_empty() { k } else { format!("{prefix}.{k}") };
                    self.flatten_into(&key, v);
                }
            }
            other => self.0.push((prefix.to_string(), other)),
        }
    }

    /// Parse a config file body. JSON is recognized by a leading `{`,
    /// anything else is read as TOML.
    pub fn parse_document(text: &str) -> Result<Self, ConfigError> {
        let value: Value = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| err(format!("config: invalid JSON: {e}")))?
        } else {
            let table: toml::Table = toml::from_str(text).map_err(|e| err(format!("config: invalid TOML: {e}")))?;
            serde_json::to_value(table).map_err(|e| err(format!("config: {e}")))?
        };
        if !value.is_object() {
            return Err(err("config: top level must be a table"));
        }
        let mut out = Self::default();
        out.flatten_into("", value);
        Ok(out)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| err(format!("config: cannot read {}: {e}", path.display())))?;
        Self::parse_document(&text)
    }

    /// Parse a `key=value` override. The value is read as a TOML value,
    /// falling back to a plain string.
    pub fn parse_override(s: &str) -> Result<(String, Value), ConfigError> {
        let (key, raw) = s
            .split_once('=')
            .ok_or_else(|| err(format!("{s}: overrides must look like key=value")))?;
        let key = key.trim();
        let raw = raw.trim();
        let value = match toml::from_str::<toml::Table>(&format!("x = {raw}")) {
            Ok(mut t) => serde_json::to_value(t.remove("x").expect("key present")).map_err(|e| err(format!("{key}: {e}")))?,
            Err(_) => Value::String(raw.to_string()),
        };
        Ok((key.to_string(), value))
    }

    pub fn push(&mut self, key: impl Into<String>, value: Value) {
        self.0.push((key.into(), value));
    }

    pub fn extend(&mut self, other: Assignments) {
        self.0.extend(other.0);
    }
}

fn as_f64(key: &str, v: &Value) -> Result<f64, ConfigError> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| err(format!("{key}: not a number"))),
        Value::String(s) => s.parse().map_err(|_| err(format!("{key}: expected a number, got `{s}`"))),
        _ => Err(err(format!("{key}: expected a number"))),
    }
}

fn as_usize(key: &str, v: &Value) -> Result<usize, ConfigError> {
    let x = as_f64(key, v)?;
    if x < 0.0 || x.fract() != 0.0 || x > u32::MAX as f64 {
        return Err(err(format!("{key}: expected a nonnegative integer, got {x}")));
    }
    Ok(x as usize)
}

fn as_str<'a>(key: &str, v: &'a Value) -> Result<&'a str, ConfigError> {
    v.as_str().ok_or_else(|| err(format!("{key}: expected a string")))
}

fn as_f64_list(key: &str, v: &Value) -> Result<Vec<f64>, ConfigError> {
    match v {
        Value::Array(items) => items.iter().map(|x| as_f64(key, x)).collect(),
        Value::String(s) => s.split(',').map(|x| as_f64(key, &Value::String(x.trim().to_string()))).collect(),
        other => Ok(vec![as_f64(key, other)?]),
    }
}

fn as_str_list(key: &str, v: &Value) -> Result<Vec<String>, ConfigError> {
    match v {
        Value::Array(items) => items.iter().map(|x| as_str(key, x).map(str::to_string)).collect(),
        Value::String(s) => Ok(s
            .trim_matches(|c| c == '[' || c == ']')
            .split(',')
            .map(|x| x.trim().to_string())
            .filter(|x| !x.is_empty())
            .collect()),
        _ => Err(err(format!("{key}: expected a list of strings"))),
    }
}

fn apply(cfg: &mut RunConfig, key: &'static str, v: &Value) -> Result<(), ConfigError> {
    let l = &mut cfg.lattice;
    let i = &mut cfg.integrator;
    match key {
        "scenario" => {}
        "lattice.v" => l.v = as_f64(key, v)?,
        "lattice.v_prime" => l.v_prime = as_f64(key, v)?,
        "lattice.gamma" => l.gamma = as_f64(key, v)?,
        "lattice.g" => l.g = as_f64(key, v)?,
        "lattice.eps_a" => l.eps_a = as_f64(key, v)?,
        "lattice.eps_b" => l.eps_b = as_f64(key, v)?,
        "lattice.delta_offset" => l.delta_offset = as_f64(key, v)?,
        "lattice.n_cells" => l.n_cells = as_usize(key, v)?,
        "integrator.method" => {
            i.method = match as_str(key, v)? {
                "dopri5" => Method::Dopri5,
                "dop853" => Method::Dop853,
                other => return Err(err(format!("{key}: unknown method `{other}` (dopri5|dop853)"))),
            }
        }
        "integrator.rel_tol" => i.rel_tol = as_f64(key, v)?,
        "integrator.abs_tol" => i.abs_tol = as_f64(key, v)?,
        "integrator.t_final" => i.t_final = as_f64(key, v)?,
        "integrator.max_step" => i.max_step = as_f64(key, v)?,
        "integrator.n_samples" => i.n_samples = as_usize(key, v)?,
        "integrator.stop_survival" => {
            i.stop_survival = match v {
                Value::Null => None,
                Value::String(s) if s == "none" || s == "off" => None,
                Value::Bool(false) => None,
                other => Some(as_f64(key, other)?),
            }
        }
        "sweep.g_values" => cfg.sweep.g_values = as_f64_list(key, v)?,
        "sweep.delta_values" => cfg.sweep.delta_values = as_f64_list(key, v)?,
        "sweep.ratios" => cfg.sweep.ratios = as_f64_list(key, v)?,
        "sweep.models" => {
            cfg.sweep.models = as_str_list(key, v)?
                .iter()
                .map(|s| Model::parse(s).ok_or_else(|| err(format!("{key}: unknown model `{s}`"))))
                .collect::<Result<_, _>>()?
        }
        "output.formats" => {
            let list = as_str_list(key, v)?;
            cfg.output.formats = parse_formats(&list.join(","))?;
        }
        _ => unreachable!("key list and match arms agree"),
    }
    Ok(())
}

/// Resolve assignments (later entries win) on top of the defaults of the
/// selected scenario. `scenario_flag` overrides any `scenario` key.
pub fn resolve(assignments: &Assignments, scenario_flag: Option<Scenario>) -> Result<RunConfig, ConfigError> {
    let mut canon = Vec::with_capacity(assignments.0.len());
    for (k, v) in &assignments.0 {
        canon.push((canonical_key(k)?, v));
    }
    let mut scenario = Scenario::Custom;
    for (k, v) in &canon {
        if *k == "scenario" {
            scenario = as_str(k, v)?.parse()?;
        }
    }
    if let Some(s) = scenario_flag {
        scenario = s;
    }
    let mut cfg = RunConfig::defaults(scenario);
    for (k, v) in canon {
        apply(&mut cfg, k, v)?;
    }
    // a custom run evaluates its single point at the configured interaction
    if scenario == Scenario::Custom && !assignments.0.iter().any(|(k, _)| canonical_key(k) == Ok("sweep.g_values")) {
        cfg.sweep.g_values = vec![cfg.lattice.g];
    }
    cfg.validate()?;
    Ok(cfg)
}
