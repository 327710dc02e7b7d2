//! Checking competitiveness bounds and redundancy against run traces.
//!
//! Pending counts are piecewise constant: they only change at event
//! instants. A verifier splits time into pieces `[t_i, t_{i+1})` at every
//! instant of either trace. On a piece the online value is constant, so the
//! worst case on the piece is the reference's minimum there. A reference
//! built from a concrete trace is constant on pieces too. The pointwise
//! offline optimum does not increase between injections, so its minimum on a
//! piece is its limit from the left at `t_{i+1}`; on the last piece it is
//! its value at the horizon.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::model::{AdversarialPattern, TaskId, TaskSpec};
use crate::offline::{opt_search, Checkpoint, OptBudget, OptError};
use crate::time::{Rational, TimePoint};
use crate::trace::{RunTrace, TraceError};

mod bounds;
mod redundancy;

pub use bounds::{verify_burst_bounds, verify_laf_bound, verify_lis_bounds};
pub use redundancy::{absolute_executions, redundancy_audit, ClassRule, Execution, Incident};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("traces come from different patterns: {0}")]
    Mismatch(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Opt(#[from] OptError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceSource {
    /// Exact offline optimum, evaluated separately at every instant.
    BruteForce,
    /// A concrete schedule, e.g. a replayed witness or a user schedule.
    Schedule,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundReport {
    pub bound: String,
    pub holds: bool,
    pub worst_slack: Rational,
    pub violating_time: Option<TimePoint>,
    pub reference: ReferenceSource,
}

impl BoundReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Pending measures at one time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Levels {
    pub tasks: u64,
    pub cost: u64,
    pub lmax_tasks: u64,
}

/// Something online runs are compared against.
pub trait Reference {
    fn source(&self) -> ReferenceSource;

    fn tasks(&self) -> &BTreeMap<TaskId, TaskSpec>;

    /// Instants at which the reference may change.
    fn breakpoints(&self) -> Vec<TimePoint>;

    /// Smallest value of each measure on `[from, to)`, or on `[from, horizon]`
    /// when `to` is `None`. Pieces never contain a breakpoint in their interior.
    fn piece_min(&mut self, from: TimePoint, to: Option<TimePoint>, horizon: TimePoint) -> Result<Levels, AnalysisError>;
}

/// The exact offline optimum at each time, minimized separately per measure.
#[derive(Debug, Clone)]
pub struct BruteForceReference {
    pattern: AdversarialPattern,
    tasks: BTreeMap<TaskId, TaskSpec>,
    budget: OptBudget,
    cache: HashMap<(TimePoint, Checkpoint), Levels>,
}

impl BruteForceReference {
    pub fn new(pattern: &AdversarialPattern, budget: OptBudget) -> Self {
        BruteForceReference { pattern: pattern.clone(), tasks: pattern.task_table(), budget, cache: HashMap::new() }
    }

    pub fn levels(&mut self, t: TimePoint, mode: Checkpoint) -> Result<Levels, AnalysisError> {
        if let Some(hit) = self.cache.get(&(t, mode)) {
            return Ok(*hit);
        }
        let r = opt_search(&self.pattern, t, mode, &self.budget)?;
        let levels = Levels { tasks: r.min_pending_tasks, cost: r.min_pending_cost, lmax_tasks: r.min_pending_lmax };
        self.cache.insert((t, mode), levels);
        Ok(levels)
    }
}

impl Reference for BruteForceReference {
    fn source(&self) -> ReferenceSource {
        ReferenceSource::BruteForce
    }

    fn tasks(&self) -> &BTreeMap<TaskId, TaskSpec> {
        &self.tasks
    }

    fn breakpoints(&self) -> Vec<TimePoint> {
        self.tasks.values().map(|t| t.arrival).collect::<BTreeSet<_>>().into_iter().collect()
    }

    fn piece_min(&mut self, _from: TimePoint, to: Option<TimePoint>, horizon: TimePoint) -> Result<Levels, AnalysisError> {
        match to {
            Some(next) => self.levels(next, Checkpoint::Before),
            None => self.levels(horizon, Checkpoint::At),
        }
    }
}

/// A reference given by one concrete trace.
#[derive(Debug, Clone)]
pub struct TraceReference {
    tasks: BTreeMap<TaskId, TaskSpec>,
    steps: Vec<(TimePoint, Levels)>,
}

impl TraceReference {
    pub fn new(trace: &RunTrace, lmax: u64) -> Result<Self, AnalysisError> {
        Ok(TraceReference { tasks: trace.tasks.clone(), steps: recorded_levels(trace, lmax)? })
    }
}

impl Reference for TraceReference {
    fn source(&self) -> ReferenceSource {
        ReferenceSource::Schedule
    }

    fn tasks(&self) -> &BTreeMap<TaskId, TaskSpec> {
        &self.tasks
    }

    fn breakpoints(&self) -> Vec<TimePoint> {
        self.steps.iter().map(|s| s.0).collect()
    }

    fn piece_min(&mut self, from: TimePoint, _to: Option<TimePoint>, _horizon: TimePoint) -> Result<Levels, AnalysisError> {
        Ok(level_at(&self.steps, from))
    }
}

/// Per-instant levels, with counts and costs as recorded in the trace and the
/// `lmax` class size rebuilt from its inject and inform rows.
pub(crate) fn recorded_levels(trace: &RunTrace, lmax: u64) -> Result<Vec<(TimePoint, Levels)>, AnalysisError> {
    let rebuilt = trace.levels()?;
    let recorded = trace.instants();
    debug_assert_eq!(rebuilt.len(), recorded.len());
    Ok(recorded
        .into_iter()
        .zip(rebuilt)
        .map(|((time, tasks, cost), l)| {
            (time, Levels { tasks, cost, lmax_tasks: l.tasks_by_cost.get(&lmax).copied().unwrap_or(0) })
        })
        .collect())
}

fn level_at(steps: &[(TimePoint, Levels)], t: TimePoint) -> Levels {
    let idx = steps.partition_point(|s| s.0 <= t);
    if idx == 0 {
        Levels::default()
    } else {
        steps[idx - 1].1
    }
}

/// One piece of the common refinement of both step functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Piece {
    pub start: TimePoint,
    pub alg: Levels,
    pub reference: Levels,
}

pub fn pieces(alg: &RunTrace, reference: &mut dyn Reference, lmax: u64) -> Result<Vec<Piece>, AnalysisError> {
    if &alg.tasks != reference.tasks() {
        let a: BTreeSet<&TaskId> = alg.tasks.keys().collect();
        let b: BTreeSet<&TaskId> = reference.tasks().keys().collect();
        return Err(AnalysisError::Mismatch(format!(
            "online trace has {} tasks, reference has {} ({} in common or differing in spec)",
            a.len(),
            b.len(),
            a.intersection(&b).count()
        )));
    }
    let horizon = alg.horizon;
    let steps = recorded_levels(alg, lmax)?;
    let mut cuts: BTreeSet<TimePoint> = steps.iter().map(|s| s.0).collect();
    cuts.extend(reference.breakpoints());
    cuts.insert(Rational::ZERO);
    let cuts: Vec<TimePoint> = cuts.into_iter().filter(|&t| t <= horizon && !t.is_negative()).collect();
    let mut out = Vec::with_capacity(cuts.len());
    for (i, &start) in cuts.iter().enumerate() {
        let next = cuts.get(i + 1).copied();
        let reference = reference.piece_min(start, next, horizon)?;
        out.push(Piece { start, alg: level_at(&steps, start), reference });
    }
    Ok(out)
}

/// Builds a report from per-piece slacks (`bound - actual`).
pub(crate) fn report(name: &str, pieces: &[Piece], source: ReferenceSource, slack: impl Fn(&Piece) -> Rational) -> BoundReport {
    let mut worst: Option<Rational> = None;
    let mut violating_time = None;
    for piece in pieces {
        let s = slack(piece);
        if worst.is_none_or(|w| s < w) {
            worst = Some(s);
        }
        if s.is_negative() && violating_time.is_none() {
            violating_time = Some(piece.start);
        }
    }
    let worst_slack = worst.unwrap_or(Rational::ZERO);
    BoundReport {
        bound: name.to_string(),
        holds: !worst_slack.is_negative(),
        worst_slack,
        violating_time,
        reference: source,
    }
}
