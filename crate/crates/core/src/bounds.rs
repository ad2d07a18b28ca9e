//! Lower bounds, the critical input length `n★`, and the three-way
//! feasibility check.
//!
//! Reasoning is modelled as a threshold on chain-of-thought tokens
//! (`C >= ceil(c1 * n)`), authenticity as a threshold on retrieval calls
//! (`R >= k`), and budget as `effective_latency <= T`. Past `n★` the first two
//! thresholds alone push the compute term over `T`, so at most two of the
//! three can hold.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{effective_latency, CostMode, DesignPoint, HardwareProfile, TaskSpec};

/// Rounds `x` to the nearest integer when it is within a few ulps of it, so
/// that e.g. `0.1 * 30` counts as exactly 3 tokens.
fn snap_to_integer(x: f64) -> f64 {
    let nearest = x.round();
    let tolerance = (1e-12 * x.abs().max(1.0)).min(0.25);
    if (x - nearest).abs() <= tolerance {
        nearest
    } else {
        x
    }
}

/// `ceil(x)` as a count; non-positive and NaN inputs give 0, huge inputs saturate.
pub(crate) fn ceil_count(x: f64) -> u64 {
    if x > 0.0 {
        snap_to_integer(x).ceil() as u64
    } else {
        0
    }
}

/// Minimum chain-of-thought tokens for an input of `n` tokens: `ceil(c1 * n)`.
pub fn min_cot_tokens(n: u64, c1: f64) -> u64 {
    ceil_count(c1 * n as f64)
}

/// Seconds of decode any reasoning-compliant design spends: `c1 * tau * n`.
pub fn reasoning_budget_lb(n: u64, c1: f64, tau: f64) -> f64 {
    c1 * tau * n as f64
}

/// Seconds of retrieval any authenticity-compliant design spends: `k * rho`.
pub fn authenticity_budget_lb(k: u64, rho: f64) -> f64 {
    k as f64 * rho
}

/// `(T - k*rho) / (c1*tau)`, snapped to an integer when within rounding error.
fn threshold_ratio(task: &TaskSpec, hw: &HardwareProfile) -> f64 {
    let slack = task.budget_t - authenticity_budget_lb(task.k_required, hw.rho_retrieval);
    snap_to_integer(slack / (task.c1 * hw.tau_decode))
}

/// Critical input length: `ceil((T - k*rho) / (c1*tau))`, or 0 when
/// `T <= k*rho` (no positive length is feasible).
pub fn n_star(task: &TaskSpec, hw: &HardwareProfile) -> u64 {
    ceil_count(threshold_ratio(task, hw))
}

/// True when `n` lies strictly beyond the threshold, where the compute term of
/// the minimal compliant design already exceeds `T`.
pub fn theorem_binding(task: &TaskSpec, hw: &HardwareProfile) -> bool {
    task.n as f64 > threshold_ratio(task, hw)
}

/// The cheapest design meeting both the reasoning and authenticity thresholds.
pub fn minimal_compliant_design(task: &TaskSpec) -> DesignPoint {
    DesignPoint::new(min_cot_tokens(task.n, task.c1), task.k_required)
}

/// Smallest budget under which all three constraints can hold at this `n`.
pub fn min_feasible_budget(task: &TaskSpec, hw: &HardwareProfile) -> f64 {
    effective_latency(&minimal_compliant_design(task), task, hw, CostMode::TheoremExact)
}

/// Which of budget (B), authenticity (A) and reasoning (R) a design satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "ALL")]
    All,
    BA,
    AR,
    BR,
    B,
    A,
    R,
    #[serde(rename = "NONE")]
    None,
}

impl Label {
    pub const ALL_LABELS: [Label; 8] =
        [Label::All, Label::BA, Label::AR, Label::BR, Label::B, Label::A, Label::R, Label::None];

    pub fn from_flags(budget_ok: bool, auth_ok: bool, reasoning_ok: bool) -> Label {
        match (budget_ok, auth_ok, reasoning_ok) {
            (true, true, true) => Label::All,
            (true, true, false) => Label::BA,
            (false, true, true) => Label::AR,
            (true, false, true) => Label::BR,
            (true, false, false) => Label::B,
            (false, true, false) => Label::A,
            (false, false, true) => Label::R,
            (false, false, false) => Label::None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::All => "ALL",
            Label::BA => "BA",
            Label::AR => "AR",
            Label::BR => "BR",
            Label::B => "B",
            Label::A => "A",
            Label::R => "R",
            Label::None => "NONE",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub reasoning_ok: bool,
    pub auth_ok: bool,
    pub budget_ok: bool,
    pub required_cot_tokens: u64,
    pub n_star: u64,
    pub theorem_binding: bool,
    pub effective: f64,
    pub label: Label,
}

pub fn check_feasibility(
    task: &TaskSpec,
    design: &DesignPoint,
    hw: &HardwareProfile,
    mode: CostMode,
) -> FeasibilityReport {
    let required_cot_tokens = min_cot_tokens(task.n, task.c1);
    let effective = effective_latency(design, task, hw, mode);
    let mut report = FeasibilityReport {
        reasoning_ok: design.cot_tokens >= required_cot_tokens,
        auth_ok: design.retrieval_calls >= task.k_required,
        budget_ok: effective <= task.budget_t,
        required_cot_tokens,
        n_star: n_star(task, hw),
        theorem_binding: theorem_binding(task, hw),
        effective,
        label: Label::None,
    };
    report.label = classify_design(&report);
    report
}

pub fn classify_design(report: &FeasibilityReport) -> Label {
    Label::from_flags(report.budget_ok, report.auth_ok, report.reasoning_ok)
}
