use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::read_to_string;
use crate::error::{Error, Result};
use crate::heat::{CopperProperties, ThermalEnvironment};
use crate::otdr::{BoardModel, CoiledSerpentine, FiberLayout, InstrumentConfig};
use crate::pipeline::{CalibrationPlan, Experiment, ReconstructionParams, Scenario};
use crate::raman::RamanConstants;

pub const CONFIG_SCHEMA: &str = "rdts-config/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvironmentPreset {
    /// Air at 296 K.
    #[default]
    Room,
    /// Liquid nitrogen at 77 K.
    Cryo,
}

/// Fiber routing: the generated coiled serpentine or an explicit polyline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LayoutSpec {
    CoiledSerpentine(CoiledSerpentine),
    Polyline(FiberLayout),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Output directory used when no `--out-dir` is given.
    #[serde(default)]
    pub dir: Option<String>,
}

/// One experiment document.
///
/// Sections left out take the values of the chosen environment preset.
/// `board`, `instrument`, `thermal` and `copper` may be partial: their keys
/// are merged over the preset before strict validation, so a misspelt key
/// is still rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: String,
    #[serde(default)]
    pub environment: EnvironmentPreset,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub board: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<LayoutSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instrument: Option<Value>,
    /// Hz.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raman_shift_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationPlan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reconstruction: Option<ReconstructionParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thermal: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub copper: Option<Value>,
    /// Defaults to the preset's scenarios when empty.
    #[serde(default)]
    pub scenarios: Vec<Scenario>,
    #[serde(default)]
    pub output: OutputSpec,
}

fn merge(base: &mut Value, over: &Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}

fn overlay<T>(preset: &T, over: &Option<Value>, section: &str) -> Result<T>
where
    T: Serialize + for<'de> Deserialize<'de> + Clone,
{
    let Some(over) = over else {
        return Ok(preset.clone());
    };
    if !over.is_object() {
        return Err(Error::Config(format!("`{section}` must be an object")));
    }
    let mut v = serde_json::to_value(preset)?;
    merge(&mut v, over);
    serde_json::from_value(v).map_err(|e| Error::Config(format!("`{section}`: {e}")))
}

impl ExperimentConfig {
    /// Minimal document for a preset.
    pub fn preset(environment: EnvironmentPreset) -> Self {
        Self {
            schema_version: CONFIG_SCHEMA.to_string(),
            environment,
            seed: 0,
            board: None,
            layout: None,
            instrument: None,
            raman_shift_hz: None,
            calibration: None,
            reconstruction: None,
            thermal: None,
            copper: None,
            scenarios: Vec::new(),
            output: OutputSpec::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        if cfg.schema_version != CONFIG_SCHEMA {
            return Err(Error::Config(format!(
                "unsupported config schema `{}`, expected `{CONFIG_SCHEMA}`",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_to_string(path)?).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Applies the document to its preset and validates the result.
    pub fn resolve(&self) -> Result<(Experiment, Vec<Scenario>)> {
        let (mut exp, default_scenarios) = match self.environment {
            EnvironmentPreset::Room => (Experiment::room(), vec![Scenario::r9()]),
            EnvironmentPreset::Cryo => (Experiment::cryo(), Scenario::cryo()),
        };
        exp.board = overlay::<BoardModel>(&exp.board, &self.board, "board")?.all_off();
        exp.instrument = overlay::<InstrumentConfig>(&exp.instrument, &self.instrument, "instrument")?;
        exp.environment = overlay::<ThermalEnvironment>(&exp.environment, &self.thermal, "thermal")?;
        exp.copper = overlay::<CopperProperties>(&exp.copper, &self.copper, "copper")?;
        exp.copper.validate()?;
        if let Some(hz) = self.raman_shift_hz {
            exp.raman = RamanConstants::new(hz)?;
        }
        exp.layout = match &self.layout {
            Some(LayoutSpec::Polyline(l)) => FiberLayout::new(l.lead_in, l.path.clone(), l.total_length)?,
            Some(LayoutSpec::CoiledSerpentine(p)) => FiberLayout::coiled_serpentine(&exp.board, p)?,
            None if self.board.is_some() => FiberLayout::coiled_serpentine(&exp.board, &CoiledSerpentine::default())?,
            None => exp.layout,
        };
        if let Some(c) = &self.calibration {
            exp.calibration = c.clone();
        }
        if let Some(r) = self.reconstruction {
            exp.reconstruction = r;
        }
        exp.validate()?;
        let scenarios = if self.scenarios.is_empty() {
            default_scenarios
        } else {
            self.scenarios.clone()
        };
        let mut names: Vec<&str> = Vec::new();
        for s in &scenarios {
            if s.name.is_empty()
                || !s
                    .name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                return Err(Error::Config(format!(
                    "scenario name `{}` must be non-empty ASCII letters, digits, `_` or `-`",
                    s.name
                )));
            }
            if names.contains(&s.name.as_str()) {
                return Err(Error::Config(format!("duplicate scenario `{}`", s.name)));
            }
            names.push(&s.name);
            exp.board_for(s)?;
        }
        Ok((exp, scenarios))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document_resolves_to_the_room_preset() {
        let cfg = ExperimentConfig::from_json(r#"{"schema_version": "rdts-config/1"}"#).unwrap();
        let (exp, sc) = cfg.resolve().unwrap();
        assert_eq!(exp, Experiment::room());
        assert_eq!(sc, vec![Scenario::r9()]);
    }

    #[test]
    fn partial_sections_merge_over_the_preset() {
        let cfg = ExperimentConfig::from_json(
            r#"{"schema_version": "rdts-config/1", "environment": "cryo",
                "instrument": {"integration_time": 60.0, "polarization": {"phase": 1.0}}}"#,
        )
        .unwrap();
        let (exp, sc) = cfg.resolve().unwrap();
        assert_eq!(exp.instrument.integration_time, 60.0);
        assert_eq!(exp.instrument.polarization.phase, 1.0);
        assert_eq!(exp.instrument.polarization.modulation_depth, 0.3);
        assert_eq!(exp.board.ambient, 77.0);
        assert_eq!(sc.len(), 2);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for doc in [
            r#"{"schema_version": "rdts-config/1", "colour": 1}"#,
            r#"{"schema_version": "rdts-config/1", "instrument": {"integration": 1}}"#,
            r#"{"schema_version": "rdts-config/1", "scenarios": [{"name": "a", "heaters": [{"id": "R9", "rize": 1}]}]}"#,
        ] {
            let r = ExperimentConfig::from_json(doc).and_then(|c| c.resolve());
            assert!(matches!(r, Err(Error::Config(_))), "{doc}: {r:?}");
        }
    }

    #[test]
    fn wrong_schema_and_bad_values_are_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"schema_version": "rdts-config/0"}"#).is_err());
        let long = r#"{"schema_version": "rdts-config/1",
            "layout": {"coiled_serpentine": {"total_length": 50.0}}}"#;
        let r = ExperimentConfig::from_json(long).unwrap().resolve();
        assert!(matches!(r, Err(Error::Range { .. })), "{r:?}");
        let unknown_heater = r#"{"schema_version": "rdts-config/1",
            "scenarios": [{"name": "a", "heaters": [{"id": "R99", "rise": 1}]}]}"#;
        assert!(ExperimentConfig::from_json(unknown_heater).unwrap().resolve().is_err());
    }

    #[test]
    fn document_round_trips() {
        let mut cfg = ExperimentConfig::preset(EnvironmentPreset::Cryo);
        cfg.seed = 9;
        cfg.scenarios = Scenario::cryo();
        cfg.layout = Some(LayoutSpec::CoiledSerpentine(CoiledSerpentine::default()));
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("rdts-config/1"));
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
    }
}
