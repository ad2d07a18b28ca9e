//! Latency and memory-traffic cost model for a single inference request.
//!
//! A request is described by three values: the [`HardwareProfile`] it runs on,
//! the [`TaskSpec`] it must satisfy, and the [`DesignPoint`] chosen to serve it
//! (how many chain-of-thought tokens to emit, how many retrieval calls to make,
//! and which tool calls to issue). From these the model derives a
//! [`BudgetBreakdown`]: a compute-side latency sum, a bandwidth-side latency,
//! and the effective latency, which is the larger of the two.
//!
//! Times are `f64` seconds. Byte quantities are `u64`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// An invariant violation on a named input field.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid `{field}`: {message}")]
pub struct ValidationError {
    /// Dotted path of the offending field, e.g. `hardware.b_max`.
    pub field: String,
    pub message: String,
}

impl ValidationError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }

    /// Prefixes the field path with `section.`.
    pub fn within(mut self, section: &str) -> Self {
        self.field = format!("{section}.{}", self.field);
        self
    }
}

pub(crate) fn positive(field: &str, value: f64) -> Result<(), ValidationError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ValidationError::new(field, format!("must be a finite value > 0, got {value}")))
    }
}

pub(crate) fn non_negative(field: &str, value: f64) -> Result<(), ValidationError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(ValidationError::new(field, format!("must be a finite value >= 0, got {value}")))
    }
}

/// Byte counts are capped at `i64::MAX` so they stay exact across languages.
pub(crate) fn byte_count(field: &str, value: u64) -> Result<(), ValidationError> {
    if value == 0 {
        Err(ValidationError::new(field, "must be > 0"))
    } else if value > i64::MAX as u64 {
        Err(ValidationError::new(field, format!("must be <= {}", i64::MAX)))
    } else {
        Ok(())
    }
}

/// Hardware constants of a memory-bound serving pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardwareProfile {
    /// Seconds per generated token.
    pub tau_decode: f64,
    /// Seconds per squared prompt token.
    #[serde(default)]
    pub a_prefill: f64,
    /// Seconds per retrieval or verification call.
    pub rho_retrieval: f64,
    /// Bytes of memory traffic per generated token.
    pub mu_decode: u64,
    /// Bytes of memory traffic per retrieval call.
    pub beta_retrieval: u64,
    /// Peak memory bandwidth, bytes per second.
    pub b_max: f64,
}

impl Default for HardwareProfile {
    /// 50 ms/token decode, 40 ms per retrieval, 2 MB/token, 1 MB/retrieval, 1 GB/s.
    fn default() -> Self {
        Self {
            tau_decode: 0.05,
            a_prefill: 1e-6,
            rho_retrieval: 0.04,
            mu_decode: 2_000_000,
            beta_retrieval: 1_000_000,
            b_max: 1e9,
        }
    }
}

impl HardwareProfile {
    pub fn validate(&self) -> Result<(), ValidationError> {
        positive("tau_decode", self.tau_decode)?;
        non_negative("a_prefill", self.a_prefill)?;
        positive("rho_retrieval", self.rho_retrieval)?;
        byte_count("mu_decode", self.mu_decode)?;
        byte_count("beta_retrieval", self.beta_retrieval)?;
        positive("b_max", self.b_max)
    }
}

/// What a request has to achieve: its input length, the latency budget, and
/// the tolerances that translate into token and retrieval requirements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    /// Input length in tokens.
    pub n: u64,
    /// Latency budget in seconds.
    pub budget_t: f64,
    /// Reasoning tolerance. Only its existence matters; `c1` carries the cost.
    pub epsilon_r: f64,
    /// Authenticity tolerance in nats.
    pub epsilon_h: f64,
    /// Retrieval calls needed to meet the authenticity tolerance.
    pub k_required: u64,
    /// Chain-of-thought tokens required per input token.
    pub c1: f64,
}

impl TaskSpec {
    pub fn validate(&self) -> Result<(), ValidationError> {
        positive("budget_t", self.budget_t)?;
        positive("epsilon_r", self.epsilon_r)?;
        positive("epsilon_h", self.epsilon_h)?;
        positive("c1", self.c1)
    }
}

/// A concrete way of serving a request.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignPoint {
    /// Chain-of-thought tokens emitted.
    pub cot_tokens: u64,
    /// Retrieval or verification calls issued.
    pub retrieval_calls: u64,
    /// Latency of each tool call, in seconds.
    #[serde(default)]
    pub tool_latencies: Vec<f64>,
}

impl DesignPoint {
    pub fn new(cot_tokens: u64, retrieval_calls: u64) -> Self {
        Self { cot_tokens, retrieval_calls, tool_latencies: Vec::new() }
    }

    pub fn with_tools(mut self, tool_latencies: Vec<f64>) -> Self {
        self.tool_latencies = tool_latencies;
        self
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        for (i, &latency) in self.tool_latencies.iter().enumerate() {
            non_negative(&format!("tool_latencies[{i}]"), latency)?;
        }
        Ok(())
    }
}

/// Which terms enter the compute-side latency sum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostMode {
    /// Decode plus retrieval only. Tool and prefill time are reported but excluded.
    #[default]
    TheoremExact,
    /// Decode, retrieval, tool calls and prefill.
    Extended,
}

impl CostMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CostMode::TheoremExact => "theorem-exact",
            CostMode::Extended => "extended",
        }
    }
}

impl fmt::Display for CostMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CostMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "theorem-exact" => Ok(CostMode::TheoremExact),
            "extended" => Ok(CostMode::Extended),
            other => Err(format!("unknown cost mode `{other}` (expected theorem-exact or extended)")),
        }
    }
}

/// Whether latency is set by the compute sum or by memory traffic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    ComputeBound,
    BandwidthBound,
}

/// Per-term latency decomposition of one design point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetBreakdown {
    pub model_time: f64,
    pub retrieval_time: f64,
    pub tool_time: f64,
    pub prefill_time: f64,
    pub compute_total: f64,
    pub bandwidth_total: f64,
    /// `max(compute_total, bandwidth_total)`.
    pub effective: f64,
    pub mode: CostMode,
}

impl BudgetBreakdown {
    /// Ties count as compute-bound.
    pub fn regime(&self) -> Regime {
        if self.bandwidth_total > self.compute_total {
            Regime::BandwidthBound
        } else {
            Regime::ComputeBound
        }
    }
}

/// Prefill cost, quadratic in prompt length.
pub fn prefill_time(n: u64, hw: &HardwareProfile) -> f64 {
    let n = n as f64;
    hw.a_prefill * (n * n)
}

/// Decode cost, linear in generated tokens.
pub fn decode_time(cot_tokens: u64, hw: &HardwareProfile) -> f64 {
    hw.tau_decode * cot_tokens as f64
}

/// Seconds needed to move the design's memory traffic at peak bandwidth.
pub fn bandwidth_time(design: &DesignPoint, hw: &HardwareProfile) -> f64 {
    let bytes =
        hw.mu_decode as f64 * design.cot_tokens as f64 + hw.beta_retrieval as f64 * design.retrieval_calls as f64;
    bytes / hw.b_max
}

pub fn budget_breakdown(
    design: &DesignPoint,
    task: &TaskSpec,
    hw: &HardwareProfile,
    mode: CostMode,
) -> BudgetBreakdown {
    let model_time = decode_time(design.cot_tokens, hw);
    let retrieval_time = hw.rho_retrieval * design.retrieval_calls as f64;
    let tool_time = design.tool_latencies.iter().fold(0.0, |acc, t| acc + t);
    let prefill_time = prefill_time(task.n, hw);
    let compute_total = match mode {
        CostMode::TheoremExact => model_time + retrieval_time,
        CostMode::Extended => model_time + retrieval_time + tool_time + prefill_time,
    };
    let bandwidth_total = bandwidth_time(design, hw);
    BudgetBreakdown {
        model_time,
        retrieval_time,
        tool_time,
        prefill_time,
        compute_total,
        bandwidth_total,
        effective: compute_total.max(bandwidth_total),
        mode,
    }
}

/// End-to-end latency of a design: the larger of its compute and bandwidth terms.
pub fn effective_latency(design: &DesignPoint, task: &TaskSpec, hw: &HardwareProfile, mode: CostMode) -> f64 {
    budget_breakdown(design, task, hw, mode).effective
}
