//! Versioned plant configuration file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::esd::EsdParams;
use crate::fuelcell::{CalibrationLog, FuelCellParams};
use crate::plant::Plant;
use crate::policies::PolicyKind;
use crate::sim::RackConfig;

/// Version written by this build. Files with any other version are refused
/// rather than guessed at.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub fuel_cell: FuelCellParams,
    #[serde(default)]
    pub esd: EsdParams,
    #[serde(default)]
    pub rack: RackConfig,
    /// Policies this rack cannot run, e.g. centralized ones on a rack
    /// without a rack-level controller. Sizing leaves them out.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub disabled_policies: Vec<PolicyKind>,
    /// Present once the file has been through `calibrate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationLog>,
}

impl Default for PlantConfig {
    fn default() -> Self {
        PlantConfig {
            schema_version: SCHEMA_VERSION,
            fuel_cell: FuelCellParams::default(),
            esd: EsdParams::default(),
            rack: RackConfig::default(),
            disabled_policies: Vec::new(),
            calibration: None,
        }
    }
}

impl PlantConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        match value.get("schema_version").and_then(serde_json::Value::as_u64) {
            Some(v) if v == SCHEMA_VERSION as u64 => {}
            Some(v) => {
                return Err(Error::Config(format!("schema_version {v} is not supported (expected {SCHEMA_VERSION})")))
            }
            None => return Err(Error::Config("missing integer field `schema_version`".into())),
        }
        let cfg: PlantConfig = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        self.fuel_cell.validate()?;
        self.esd.validate()?;
        self.rack.validate()?;
        let peak = self.rack.peak_w();
        if peak > self.fuel_cell.rated_power_w * (1.0 + 1e-9) {
            return Err(Error::Config(format!(
                "rack peak {peak:.1} W exceeds fuel-cell rating {:.1} W",
                self.fuel_cell.rated_power_w
            )));
        }
        Ok(())
    }

    pub fn plant(&self, dt: f64) -> Result<Plant> {
        Plant::new(self.fuel_cell.clone(), self.esd.clone(), dt)
    }

    /// The requested policies in canonical order, minus disabled ones.
    pub fn enabled(&self, requested: &[PolicyKind]) -> Vec<PolicyKind> {
        PolicyKind::ALL.into_iter().filter(|p| requested.contains(p) && !self.disabled_policies.contains(p)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let cfg = PlantConfig { disabled_policies: vec![PolicyKind::CFcaWa], ..Default::default() };
        assert_eq!(PlantConfig::from_json(&cfg.to_json().unwrap()).unwrap(), cfg);
    }

    #[test]
    fn minimal_file_takes_defaults() {
        let cfg = PlantConfig::from_json(r#"{"schema_version": 1}"#).unwrap();
        assert_eq!(cfg, PlantConfig::default());
    }

    #[test]
    fn version_is_required_and_checked() {
        assert!(matches!(PlantConfig::from_json("{}"), Err(Error::Config(_))));
        assert!(matches!(PlantConfig::from_json(r#"{"schema_version": 2}"#), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_fields_rejected() {
        let err = PlantConfig::from_json(r#"{"schema_version": 1, "esd": {"capacity": 5}}"#).unwrap_err();
        assert!(err.to_string().contains("capacity"), "{err}");
    }

    #[test]
    fn disabled_policies_filtered() {
        let cfg = PlantConfig { disabled_policies: vec![PolicyKind::CFcuWu], ..Default::default() };
        assert_eq!(
            cfg.enabled(&[PolicyKind::CFcaWu, PolicyKind::CFcuWu, PolicyKind::DFcuWu]),
            vec![PolicyKind::DFcuWu, PolicyKind::CFcaWu]
        );
    }
}
