//! Grid sweeps over (chain-of-thought tokens, retrieval calls) and extraction
//! of the non-dominated set.
//!
//! Every grid cell is scored on three objectives, all minimized:
//!
//! | objective | source |
//! |---|---|
//! | `latency` | [`effective_latency`] of the design |
//! | `auth_loss` | [`auth_response_curve`] at the cell's retrieval count |
//! | `reasoning_deficit` | `max(0, ceil(c1*n) - C)` tokens |

use std::cmp::Ordering;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::authenticity::{auth_response_curve, AuthCurve};
use crate::bounds::min_cot_tokens;
use crate::model::{effective_latency, CostMode, DesignPoint, HardwareProfile, TaskSpec, ValidationError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParetoError {
    #[error("no points to rank")]
    Empty,
}

/// Inclusive integer range `start, start + stride, ..., <= end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntRange {
    pub start: u64,
    pub end: u64,
    #[serde(default = "default_stride")]
    pub stride: u64,
}

fn default_stride() -> u64 {
    1
}

impl IntRange {
    pub fn new(start: u64, end: u64, stride: u64) -> Self {
        Self { start, end, stride }
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.stride == 0 {
            return Err(ValidationError::new("stride", "must be >= 1"));
        }
        if self.start > self.end {
            return Err(ValidationError::new("start", format!("must be <= end ({}), got {}", self.end, self.start)));
        }
        Ok(())
    }

    /// Number of values; 0 for an invalid range.
    pub fn len(&self) -> u64 {
        if self.stride == 0 || self.start > self.end {
            0
        } else {
            (self.end - self.start) / self.stride + 1
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn values(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.len()).map(move |i| self.start + i * self.stride)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub cot_range: IntRange,
    pub retrieval_range: IntRange,
    pub curve: AuthCurve,
    pub mode: CostMode,
}

impl SweepSpec {
    pub fn cell_count(&self) -> u128 {
        self.cot_range.len() as u128 * self.retrieval_range.len() as u128
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        self.cot_range.validate().map_err(|e| e.within("cot_range"))?;
        self.retrieval_range.validate().map_err(|e| e.within("retrieval_range"))?;
        self.curve.validate().map_err(|e| e.within("curve"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Objectives {
    pub latency: f64,
    pub auth_loss: f64,
    pub reasoning_deficit: u64,
}

impl Objectives {
    fn key(&self) -> [f64; 3] {
        [self.latency, self.auth_loss, self.reasoning_deficit as f64]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedPoint {
    pub design: DesignPoint,
    pub objectives: Objectives,
}

pub fn evaluate_point(
    design: DesignPoint,
    curve: &AuthCurve,
    mode: CostMode,
    task: &TaskSpec,
    hw: &HardwareProfile,
) -> EvaluatedPoint {
    let required = min_cot_tokens(task.n, task.c1);
    let objectives = Objectives {
        latency: effective_latency(&design, task, hw, mode),
        auth_loss: auth_response_curve(design.retrieval_calls, curve),
        reasoning_deficit: required.saturating_sub(design.cot_tokens),
    };
    EvaluatedPoint { design, objectives }
}

/// Scores every grid cell, row-major with chain-of-thought tokens as the outer
/// loop. Cells are evaluated in parallel; the output order does not depend on
/// scheduling.
pub fn evaluate_grid(sweep: &SweepSpec, task: &TaskSpec, hw: &HardwareProfile) -> Vec<EvaluatedPoint> {
    let cots: Vec<u64> = sweep.cot_range.values().collect();
    let retrievals: Vec<u64> = sweep.retrieval_range.values().collect();
    cots.par_iter()
        .flat_map_iter(|&c| {
            retrievals.iter().map(move |&r| evaluate_point(DesignPoint::new(c, r), &sweep.curve, sweep.mode, task, hw))
        })
        .collect()
}

/// `a` dominates `b`: no worse in every objective, strictly better in one.
pub fn dominates(a: &Objectives, b: &Objectives) -> bool {
    let (a, b) = (a.key(), b.key());
    a.iter().zip(&b).all(|(x, y)| x <= y) && a.iter().zip(&b).any(|(x, y)| x < y)
}

fn lexicographic(a: &[f64; 3], b: &[f64; 3]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

/// `true` for each point that no other point dominates.
///
/// Points are visited in lexicographic objective order, so any dominator of a
/// point is visited before it. Dominance is transitive, so it suffices to test
/// each point against the frontier found so far.
pub fn frontier_mask(points: &[EvaluatedPoint]) -> Result<Vec<bool>, ParetoError> {
    if points.is_empty() {
        return Err(ParetoError::Empty);
    }
    let keys: Vec<[f64; 3]> = points.iter().map(|p| p.objectives.key()).collect();
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| lexicographic(&keys[i], &keys[j]).then(i.cmp(&j)));

    let mut mask = vec![false; points.len()];
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        let dominated = kept.iter().any(|&j| dominates(&points[j].objectives, &points[i].objectives));
        if !dominated {
            mask[i] = true;
            kept.push(i);
        }
    }
    Ok(mask)
}

/// Non-dominated subset in input order. Points with identical objectives are
/// all kept.
pub fn pareto_front(points: &[EvaluatedPoint]) -> Result<Vec<EvaluatedPoint>, ParetoError> {
    let mask = frontier_mask(points)?;
    Ok(points.iter().zip(mask).filter(|(_, keep)| *keep).map(|(p, _)| p.clone()).collect())
}

pub const FRONTIER_CSV_HEADER: &str = "C,R,latency_s,auth_loss_nats,reasoning_deficit_tokens,on_frontier";

/// One CSV row per point; floats in shortest round-trip form.
pub fn write_frontier_csv<W: Write>(points: &[EvaluatedPoint], on_frontier: &[bool], mut out: W) -> io::Result<()> {
    writeln!(out, "{FRONTIER_CSV_HEADER}")?;
    for (p, flag) in points.iter().zip(on_frontier) {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            p.design.cot_tokens,
            p.design.retrieval_calls,
            p.objectives.latency,
            p.objectives.auth_loss,
            p.objectives.reasoning_deficit,
            flag
        )?;
    }
    Ok(())
}
