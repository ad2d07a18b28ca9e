//! Plain-text renderings of the reports, six significant digits throughout.

use std::fmt::Write as _;

use bar_core::report::{AnalyzeReport, DesignSource, SimulateReport};
use bar_core::simulator::SimMode;
use bar_core::Regime;

/// Formats `x` with six significant digits, `%g` style.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exponent = x.abs().log10().floor() as i32;
    if (-5..6).contains(&exponent) {
        let decimals = (5 - exponent).max(0) as usize;
        let s = format!("{x:.decimals$}");
        trim_fraction(&s).to_string()
    } else {
        let s = format!("{x:.5e}");
        match s.split_once('e') {
            Some((mantissa, exp)) => format!("{}e{exp}", trim_fraction(mantissa)),
            None => s,
        }
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "VIOLATED"
    }
}

fn source(s: DesignSource) -> &'static str {
    match s {
        DesignSource::Scenario => "from scenario",
        DesignSource::MinimalCompliant => "minimal compliant",
    }
}

pub fn analyze(r: &AnalyzeReport) -> String {
    let mut out = String::new();
    let b = &r.breakdown;
    let f = &r.feasibility;
    let d = &r.design;
    let _ = writeln!(out, "scenario        {}", r.scenario.as_deref().unwrap_or("-"));
    let _ = writeln!(out, "mode            {}", r.mode);
    let _ = writeln!(
        out,
        "design          C={} R={} tools={} ({})",
        d.cot_tokens,
        d.retrieval_calls,
        d.tool_latencies.len(),
        source(r.design_source)
    );
    let _ = writeln!(out);
    let _ = writeln!(out, "budget breakdown (s)");
    for (name, value) in [
        ("model", b.model_time),
        ("retrieval", b.retrieval_time),
        ("tool", b.tool_time),
        ("prefill", b.prefill_time),
        ("compute", b.compute_total),
        ("bandwidth", b.bandwidth_total),
    ] {
        let _ = writeln!(out, "  {name:<14}{}", sig6(value));
    }
    let regime = match r.regime {
        Regime::ComputeBound => "compute-bound",
        Regime::BandwidthBound => "bandwidth-bound",
    };
    let _ = writeln!(out, "  {:<14}{} ({regime})", "effective", sig6(b.effective));
    let _ = writeln!(out);
    let _ = writeln!(out, "feasibility");
    let _ = writeln!(
        out,
        "  budget        {} (effective {} s, budget T {} s)",
        verdict(f.budget_ok),
        sig6(f.effective),
        sig6(r.budget_t)
    );
    let _ = writeln!(out, "  authenticity  {} (R={})", verdict(f.auth_ok), d.retrieval_calls);
    let _ = writeln!(
        out,
        "  reasoning     {} (C={}, required {})",
        verdict(f.reasoning_ok),
        d.cot_tokens,
        f.required_cot_tokens
    );
    let _ = writeln!(out, "  label         {}", r.label);
    let _ = writeln!(out);
    let _ = writeln!(out, "n*              {}", r.n_star);
    let _ = writeln!(out, "past n*         {}", if f.theorem_binding { "yes" } else { "no" });
    let _ = writeln!(out, "reasoning lb    {} s", sig6(r.reasoning_lb));
    let _ = writeln!(out, "retrieval lb    {} s", sig6(r.authenticity_lb));
    let _ = writeln!(out, "min budget      {} s", sig6(r.min_feasible_budget));
    let _ = writeln!(out);
    let _ = writeln!(out, "latency of minimal compliant design by input length");
    let _ = writeln!(out, "  {:>10}  {:>12}  {:>12}  {:>12}", "n", "compute", "bandwidth", "effective");
    for p in &r.curve {
        let _ = writeln!(
            out,
            "  {:>10}  {:>12}  {:>12}  {:>12}{}",
            p.n,
            sig6(p.compute_total),
            sig6(p.bandwidth_total),
            sig6(p.effective),
            if p.within_budget { "" } else { "  over budget" }
        );
    }
    out
}

pub fn simulate(r: &SimulateReport) -> String {
    let mut out = String::new();
    let h = &r.trace.header;
    let v = &r.validation;
    let mode = match h.mode {
        SimMode::Deterministic => "deterministic",
        SimMode::Stochastic => "stochastic",
    };
    let _ = writeln!(out, "scenario        {}", r.scenario.as_deref().unwrap_or("-"));
    let _ = writeln!(out, "mode            {mode} (rng {} seed {})", h.rng, h.seed);
    let _ = writeln!(
        out,
        "design          C={} R={} tools={} ({})",
        r.design.cot_tokens,
        r.design.retrieval_calls,
        r.design.tool_latencies.len(),
        source(r.design_source)
    );
    let _ = writeln!(out, "events          {}", r.trace.events.len());
    let _ = writeln!(out, "total latency   {} s", sig6(r.trace.total_latency));
    let _ = writeln!(out, "total bytes     {}", r.trace.total_bytes);
    let _ = writeln!(out);
    match &r.summary {
        Some(summary) => {
            let _ =
                writeln!(out, "  {:<14}{:>8}  {:>12}  {:>14}  {:>8}", "kind", "events", "seconds", "bytes", "share");
            for k in &summary.kinds {
                let _ = writeln!(
                    out,
                    "  {:<14}{:>8}  {:>12}  {:>14}  {:>8}",
                    k.kind.as_str(),
                    k.events,
                    sig6(k.seconds),
                    k.bytes,
                    sig6(k.share)
                );
            }
        }
        None => {
            let _ = writeln!(out, "  trace has zero wall time");
        }
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "validation");
    let _ = writeln!(
        out,
        "  total >= analytic    {} ({} s >= {} s)",
        verdict(v.total_dominates_analytic),
        sig6(v.simulated_total),
        sig6(v.analytic_effective)
    );
    let applicability = |applies: bool| if applies { "" } else { " [not applicable]" };
    let _ = writeln!(
        out,
        "  decode >= c1*tau*n   {} ({} s >= {} s){}",
        verdict(v.reasoning_bound_ok),
        sig6(v.decode_seconds),
        sig6(v.reasoning_lb),
        applicability(v.reasoning_applicable)
    );
    let _ = writeln!(
        out,
        "  retrieval >= k*rho   {} ({} s >= {} s){}",
        verdict(v.authenticity_bound_ok),
        sig6(v.retrieval_seconds),
        sig6(v.authenticity_lb),
        applicability(v.authenticity_applicable)
    );
    out
}
