//! Machine-readable reports shared by the command-line tool and the service.
//!
//! Both front ends build their output through these functions, so a scenario
//! produces the same report no matter which interface evaluated it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{
    authenticity_budget_lb, check_feasibility, min_feasible_budget, minimal_compliant_design, n_star,
    reasoning_budget_lb, FeasibilityReport, Label,
};
use crate::model::{budget_breakdown, BudgetBreakdown, CostMode, DesignPoint, Regime, TaskSpec};
use crate::pareto::{evaluate_grid, frontier_mask, ParetoError};
use crate::scenario::{Scenario, ScenarioError};
use crate::simulator::{simulate, trace_summary, validate_trace, SimError, SimTrace, TraceSummary, TraceValidation};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Samples in the default latency-versus-length curve.
const DEFAULT_CURVE_STEPS: u64 = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReportError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error(transparent)]
    Pareto(#[from] ParetoError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignSource {
    Scenario,
    MinimalCompliant,
}

/// Latency of the minimal compliant design at one input length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: u64,
    pub compute_total: f64,
    pub bandwidth_total: f64,
    pub effective: f64,
    pub within_budget: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub schema_version: u32,
    pub scenario: Option<String>,
    pub mode: CostMode,
    pub budget_t: f64,
    pub design: DesignPoint,
    pub design_source: DesignSource,
    pub breakdown: BudgetBreakdown,
    pub regime: Regime,
    pub feasibility: FeasibilityReport,
    pub n_star: u64,
    pub label: Label,
    pub reasoning_lb: f64,
    pub authenticity_lb: f64,
    pub min_feasible_budget: f64,
    pub curve: Vec<CurvePoint>,
}

/// `0, hi/20, 2*hi/20, ..., hi` with `hi = max(2*n★, n, 1)`, deduplicated.
fn default_curve_lengths(task: &TaskSpec, n_star: u64) -> Vec<u64> {
    let hi = n_star.saturating_mul(2).max(task.n).max(1) as u128;
    let steps = DEFAULT_CURVE_STEPS as u128;
    let mut ns: Vec<u64> = (0..=steps).map(|i| (i * hi / steps) as u64).collect();
    ns.dedup();
    ns
}

pub fn latency_curve(scenario: &Scenario, mode: CostMode, lengths: &[u64]) -> Vec<CurvePoint> {
    lengths
        .iter()
        .map(|&n| {
            let task = TaskSpec { n, ..scenario.task };
            let design = minimal_compliant_design(&task);
            let b = budget_breakdown(&design, &task, &scenario.hardware, mode);
            CurvePoint {
                n,
                compute_total: b.compute_total,
                bandwidth_total: b.bandwidth_total,
                effective: b.effective,
                within_budget: b.effective <= task.budget_t,
            }
        })
        .collect()
}

pub fn analyze(scenario: &Scenario, mode: CostMode) -> AnalyzeReport {
    let (task, hw) = (&scenario.task, &scenario.hardware);
    let design_source = if scenario.design.is_some() { DesignSource::Scenario } else { DesignSource::MinimalCompliant };
    let design = scenario.design_or_minimal();
    let breakdown = budget_breakdown(&design, task, hw, mode);
    let feasibility = check_feasibility(task, &design, hw, mode);
    let n_star = n_star(task, hw);
    let lengths = scenario.curve_n.clone().unwrap_or_else(|| default_curve_lengths(task, n_star));
    AnalyzeReport {
        schema_version: REPORT_SCHEMA_VERSION,
        scenario: scenario.name.clone(),
        mode,
        budget_t: task.budget_t,
        regime: breakdown.regime(),
        breakdown,
        label: feasibility.label,
        feasibility,
        n_star,
        reasoning_lb: reasoning_budget_lb(task.n, task.c1, hw.tau_decode),
        authenticity_lb: authenticity_budget_lb(task.k_required, hw.rho_retrieval),
        min_feasible_budget: min_feasible_budget(task, hw),
        curve: latency_curve(scenario, mode, &lengths),
        design,
        design_source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cot_tokens: u64,
    pub retrieval_calls: u64,
    pub latency_s: f64,
    pub auth_loss_nats: f64,
    pub reasoning_deficit_tokens: u64,
    pub on_frontier: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub scenario: Option<String>,
    pub mode: CostMode,
    pub cells: u64,
    pub frontier_size: u64,
    pub points: Vec<SweepRow>,
}

pub fn sweep(scenario: &Scenario, mode: CostMode) -> Result<SweepReport, ReportError> {
    let spec = scenario.sweep_spec(mode)?;
    let points = evaluate_grid(&spec, &scenario.task, &scenario.hardware);
    let mask = frontier_mask(&points)?;
    let rows: Vec<SweepRow> = points
        .iter()
        .zip(&mask)
        .map(|(p, &on_frontier)| SweepRow {
            cot_tokens: p.design.cot_tokens,
            retrieval_calls: p.design.retrieval_calls,
            latency_s: p.objectives.latency,
            auth_loss_nats: p.objectives.auth_loss,
            reasoning_deficit_tokens: p.objectives.reasoning_deficit,
            on_frontier,
        })
        .collect();
    Ok(SweepReport {
        schema_version: REPORT_SCHEMA_VERSION,
        scenario: scenario.name.clone(),
        mode,
        cells: rows.len() as u64,
        frontier_size: mask.iter().filter(|&&f| f).count() as u64,
        points: rows,
    })
}

impl SweepReport {
    /// Same rows and columns as [`crate::pareto::write_frontier_csv`].
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", crate::pareto::FRONTIER_CSV_HEADER)?;
        for r in &self.points {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.cot_tokens,
                r.retrieval_calls,
                r.latency_s,
                r.auth_loss_nats,
                r.reasoning_deficit_tokens,
                r.on_frontier
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub schema_version: u32,
    pub scenario: Option<String>,
    pub design: DesignPoint,
    pub design_source: DesignSource,
    /// `None` when the trace has zero wall time.
    pub summary: Option<TraceSummary>,
    pub validation: TraceValidation,
    pub trace: SimTrace,
}

/// Runs the scenario's simulation. `seed` overrides the scenario seed.
pub fn simulate_scenario(scenario: &Scenario, seed: Option<u64>) -> Result<SimulateReport, ReportError> {
    let mut config = scenario.sim_config()?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let design_source = if scenario.design.is_some() { DesignSource::Scenario } else { DesignSource::MinimalCompliant };
    let design = scenario.design_or_minimal();
    let trace = simulate(&scenario.task, &design, &scenario.hardware, &config);
    let summary = match trace_summary(&trace) {
        Ok(s) => Some(s),
        Err(SimError::ZeroWallTime) => None,
        Err(e) => return Err(e.into()),
    };
    let validation = validate_trace(&trace, &scenario.task, &design, &scenario.hardware)?;
    Ok(SimulateReport {
        schema_version: REPORT_SCHEMA_VERSION,
        scenario: scenario.name.clone(),
        design,
        design_source,
        summary,
        validation,
        trace,
    })
}
