//! Scenario documents: hardware, task and optional design/sweep/simulation
//! sections in one file.
//!
//! Files are TOML; service request bodies carry the same structure as JSON.
//! Unknown fields are rejected, and every invariant is checked at parse time
//! with the dotted path of the offending field.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::authenticity::AuthCurve;
use crate::bounds::minimal_compliant_design;
use crate::model::{CostMode, DesignPoint, HardwareProfile, TaskSpec, ValidationError};
use crate::pareto::{IntRange, SweepSpec};
use crate::simulator::SimConfig;

pub const SCENARIO_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("malformed scenario at `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error(transparent)]
    Invalid(#[from] ValidationError),
    #[error("scenario has no `{0}` section")]
    MissingSection(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub cot_range: IntRange,
    pub retrieval_range: IntRange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub mode: CostMode,
    /// Input lengths at which to sample the latency-versus-length curve.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve_n: Option<Vec<u64>>,
    pub hardware: HardwareProfile,
    pub task: TaskSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<DesignPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<AuthCurve>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimConfig>,
}

impl Scenario {
    pub fn new(hardware: HardwareProfile, task: TaskSpec) -> Self {
        Self {
            version: SCENARIO_VERSION,
            name: None,
            mode: CostMode::default(),
            curve_n: None,
            hardware,
            task,
            design: None,
            curve: None,
            sweep: None,
            sim: None,
        }
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.version != SCENARIO_VERSION {
            return Err(ValidationError::new(
                "version",
                format!("unsupported schema version {} (expected {SCENARIO_VERSION})", self.version),
            ));
        }
        self.hardware.validate().map_err(|e| e.within("hardware"))?;
        self.task.validate().map_err(|e| e.within("task"))?;
        if let Some(design) = &self.design {
            design.validate().map_err(|e| e.within("design"))?;
        }
        if let Some(curve) = &self.curve {
            curve.validate().map_err(|e| e.within("curve"))?;
        }
        if let Some(sweep) = &self.sweep {
            sweep.cot_range.validate().map_err(|e| e.within("sweep.cot_range"))?;
            sweep.retrieval_range.validate().map_err(|e| e.within("sweep.retrieval_range"))?;
        }
        if let Some(sim) = &self.sim {
            sim.validate().map_err(|e| e.within("sim"))?;
        }
        Ok(())
    }

    /// The scenario's design, or the minimal compliant one when absent.
    pub fn design_or_minimal(&self) -> DesignPoint {
        self.design.clone().unwrap_or_else(|| minimal_compliant_design(&self.task))
    }

    pub fn sweep_spec(&self, mode: CostMode) -> Result<SweepSpec, ScenarioError> {
        let sweep = self.sweep.ok_or(ScenarioError::MissingSection("sweep"))?;
        let curve = self.curve.ok_or(ScenarioError::MissingSection("curve"))?;
        Ok(SweepSpec { cot_range: sweep.cot_range, retrieval_range: sweep.retrieval_range, curve, mode })
    }

    pub fn sim_config(&self) -> Result<SimConfig, ScenarioError> {
        self.sim.ok_or(ScenarioError::MissingSection("sim"))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario fields are all TOML-representable")
    }
}

fn parse_error<E: std::fmt::Display>(err: serde_path_to_error::Error<E>) -> ScenarioError {
    let path = err.path().to_string();
    ScenarioError::Parse { path, message: err.into_inner().to_string() }
}

fn checked(scenario: Scenario) -> Result<Scenario, ScenarioError> {
    scenario.validate()?;
    Ok(scenario)
}

/// Parses and validates a TOML scenario file.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let table: toml::Table =
        text.parse().map_err(|e: toml::de::Error| ScenarioError::Parse { path: ".".into(), message: e.to_string() })?;
    let scenario = serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(parse_error)?;
    checked(scenario)
}

/// Parses and validates a JSON scenario (the service request body).
pub fn parse_scenario_json(text: &str) -> Result<Scenario, ScenarioError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let scenario = serde_path_to_error::deserialize(&mut de).map_err(parse_error)?;
    de.end().map_err(|e| ScenarioError::Parse { path: ".".into(), message: e.to_string() })?;
    checked(scenario)
}
