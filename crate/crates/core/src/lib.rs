//! Cost model, feasibility bounds, simulator and Pareto sweeps for the
//! trade-off between latency budget, factual authenticity and reasoning depth
//! in LLM serving.
//!
//! ```
//! use bar_core::{n_star, HardwareProfile, TaskSpec};
//!
//! let hw = HardwareProfile::default(); // tau = 50 ms/token, rho = 40 ms/call
//! let task = TaskSpec { n: 100, budget_t: 10.0, epsilon_r: 0.01, epsilon_h: 0.2, k_required: 2, c1: 1.0 };
//! assert_eq!(n_star(&task, &hw), 199);
//! ```

#![forbid(unsafe_code)]
#![warn(rust_2018_idioms, missing_debug_implementations)]

pub mod authenticity;
pub mod bounds;
pub mod model;
pub mod pareto;
pub mod report;
pub mod scenario;
pub mod simulator;

pub use authenticity::{
    auth_loss, auth_response_curve, kl_divergence, min_retrievals_for, AuthCurve, AuthError, DiscreteDistribution,
};
pub use bounds::{
    authenticity_budget_lb, check_feasibility, classify_design, min_cot_tokens, min_feasible_budget,
    minimal_compliant_design, n_star, reasoning_budget_lb, theorem_binding, FeasibilityReport, Label,
};
pub use model::{
    bandwidth_time, budget_breakdown, decode_time, effective_latency, prefill_time, BudgetBreakdown, CostMode,
    DesignPoint, HardwareProfile, Regime, TaskSpec, ValidationError,
};
pub use pareto::{
    dominates, evaluate_grid, frontier_mask, pareto_front, EvaluatedPoint, IntRange, Objectives, ParetoError, SweepSpec,
};
pub use scenario::{parse_scenario, parse_scenario_json, Scenario, ScenarioError};
pub use simulator::{
    simulate, trace_summary, validate_trace, EventKind, RetrievalLatency, SimConfig, SimError, SimEvent, SimMode,
    SimTrace, TraceSummary, TraceValidation,
};
