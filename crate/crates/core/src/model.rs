//! Tasks, system parameters and adversarial patterns.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::time::{Rational, TimePoint};

/// Unique task identifier within a pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskId(pub u64);

/// Processor identifier in `1..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProcId(pub u32);

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for ProcId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl ProcId {
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TaskSpec {
    pub id: TaskId,
    pub arrival: TimePoint,
    pub cost: u64,
}

impl TaskSpec {
    pub fn new(id: u64, arrival: TimePoint, cost: u64) -> Self {
        TaskSpec { id: TaskId(id), arrival, cost }
    }

    /// Longest-in-system order: arrival, then cost, then id.
    pub fn lis_key(&self) -> (TimePoint, u64, TaskId) {
        (self.arrival, self.cost, self.id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemParams {
    pub n: u32,
    pub speedup: Rational,
    pub lmin: u64,
    pub lmax: u64,
    pub beta: u64,
}

impl SystemParams {
    pub fn new(n: u32, speedup: Rational, lmin: u64, lmax: u64, beta: u64) -> Self {
        SystemParams { n, speedup, lmin, lmax, beta }
    }

    /// Cost ratio `lmax / lmin`.
    pub fn rho(&self) -> Rational {
        Rational::from_u64(self.lmax) / Rational::from_u64(self.lmin)
    }

    /// Smallest integer `beta` with `beta >= lmax / lmin`.
    pub fn min_beta(&self) -> u64 {
        self.lmax.div_ceil(self.lmin)
    }

    pub fn procs(&self) -> impl Iterator<Item = ProcId> {
        (1..=self.n).map(ProcId)
    }

    fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.n == 0 {
            out.push("n must be positive".to_string());
        }
        if self.lmin == 0 {
            out.push("lmin must be positive".to_string());
        }
        if self.lmin > self.lmax {
            out.push(format!("lmin {} exceeds lmax {}", self.lmin, self.lmax));
        }
        if self.speedup < Rational::ONE {
            out.push(format!("speedup {} is below 1", self.speedup));
        }
        if self.beta == 0 {
            out.push("beta must be positive".to_string());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    Inject(TaskSpec),
    Crash(ProcId),
    Restart(ProcId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdversaryEvent {
    pub time: TimePoint,
    pub kind: EventKind,
}

impl AdversaryEvent {
    pub fn inject(time: TimePoint, id: u64, cost: u64) -> Self {
        AdversaryEvent { time, kind: EventKind::Inject(TaskSpec::new(id, time, cost)) }
    }

    pub fn crash(time: TimePoint, proc: u32) -> Self {
        AdversaryEvent { time, kind: EventKind::Crash(ProcId(proc)) }
    }

    pub fn restart(time: TimePoint, proc: u32) -> Self {
        AdversaryEvent { time, kind: EventKind::Restart(ProcId(proc)) }
    }
}

/// A timed collection of injections, crashes and restarts.
///
/// Events are kept in authoring order. A valid pattern has them sorted by
/// time; same-time events keep the order in which they were written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdversarialPattern {
    pub params: SystemParams,
    pub events: Vec<AdversaryEvent>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    InvalidParams(String),
    Unsorted { index: usize, time: TimePoint },
    DuplicateTaskId(TaskId),
    CostOutOfRange { id: TaskId, cost: u64 },
    ArrivalMismatch { id: TaskId },
    UnknownProcessor { time: TimePoint, proc: ProcId },
    CrashOfCrashed { time: TimePoint, proc: ProcId },
    RestartOfAlive { time: TimePoint, proc: ProcId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::InvalidParams(msg) => write!(f, "invalid params: {msg}"),
            Violation::Unsorted { index, time } => {
                write!(f, "event {index} at t={time} is earlier than its predecessor")
            }
            Violation::DuplicateTaskId(id) => write!(f, "duplicate task id {id}"),
            Violation::CostOutOfRange { id, cost } => {
                write!(f, "task {id} has cost {cost} outside [lmin, lmax]")
            }
            Violation::ArrivalMismatch { id } => {
                write!(f, "task {id} arrival differs from its injection time")
            }
            Violation::UnknownProcessor { time, proc } => {
                write!(f, "processor {proc} at t={time} is outside [1, n]")
            }
            Violation::CrashOfCrashed { time, proc } => {
                write!(f, "crash of already crashed processor {proc} at t={time}")
            }
            Violation::RestartOfAlive { time, proc } => {
                write!(f, "restart of alive processor {proc} at t={time}")
            }
        }
    }
}

impl AdversarialPattern {
    pub fn new(params: SystemParams, events: Vec<AdversaryEvent>) -> Self {
        AdversarialPattern { params, events }
    }

    /// Builds a pattern whose events are stably sorted by time.
    pub fn sorted(params: SystemParams, mut events: Vec<AdversaryEvent>) -> Self {
        events.sort_by_key(|a| a.time);
        AdversarialPattern { params, events }
    }

    pub fn tasks(&self) -> impl Iterator<Item = &TaskSpec> {
        self.events.iter().filter_map(|e| match &e.kind {
            EventKind::Inject(task) => Some(task),
            _ => None,
        })
    }

    pub fn task_table(&self) -> BTreeMap<TaskId, TaskSpec> {
        self.tasks().map(|t| (t.id, *t)).collect()
    }

    pub fn last_event_time(&self) -> Option<TimePoint> {
        self.events.iter().map(|e| e.time).max()
    }

    /// Distinct task costs appearing in the pattern.
    pub fn cost_alphabet(&self) -> BTreeSet<u64> {
        self.tasks().map(|t| t.cost).collect()
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate_pattern(self)
    }
}

/// Lists every invariant breach in `pattern`; an empty list means valid.
///
/// Processor liveness is checked with the engine's same-instant order:
/// all crashes of an instant before all restarts of that instant. Every
/// processor is alive at time zero.
pub fn validate_pattern(pattern: &AdversarialPattern) -> Vec<Violation> {
    let params = &pattern.params;
    let mut out: Vec<Violation> = params.problems().into_iter().map(Violation::InvalidParams).collect();

    for (index, pair) in pattern.events.windows(2).enumerate() {
        if pair[1].time < pair[0].time {
            out.push(Violation::Unsorted { index: index + 1, time: pair[1].time });
        }
    }

    let mut seen = BTreeSet::new();
    for task in pattern.tasks() {
        if !seen.insert(task.id) {
            out.push(Violation::DuplicateTaskId(task.id));
        }
        if task.cost < params.lmin || task.cost > params.lmax || task.cost == 0 {
            out.push(Violation::CostOutOfRange { id: task.id, cost: task.cost });
        }
    }
    for event in &pattern.events {
        if let EventKind::Inject(task) = &event.kind {
            if task.arrival != event.time {
                out.push(Violation::ArrivalMismatch { id: task.id });
            }
        }
    }

    let mut ordered: Vec<&AdversaryEvent> = pattern.events.iter().collect();
    ordered.sort_by_key(|a| a.time);
    let mut alive = vec![true; params.n as usize];
    let mut start = 0;
    while start < ordered.len() {
        let time = ordered[start].time;
        let end = start + ordered[start..].iter().take_while(|e| e.time == time).count();
        let instant = &ordered[start..end];
        for restart_pass in [false, true] {
            for event in instant {
                let (proc, is_restart) = match event.kind {
                    EventKind::Crash(p) => (p, false),
                    EventKind::Restart(p) => (p, true),
                    EventKind::Inject(_) => continue,
                };
                if is_restart != restart_pass {
                    continue;
                }
                if proc.0 == 0 || proc.0 > params.n {
                    out.push(Violation::UnknownProcessor { time, proc });
                    continue;
                }
                let slot = &mut alive[proc.index()];
                match (is_restart, *slot) {
                    (false, true) => *slot = false,
                    (false, false) => out.push(Violation::CrashOfCrashed { time, proc }),
                    (true, false) => *slot = true,
                    (true, true) => out.push(Violation::RestartOfAlive { time, proc }),
                }
            }
        }
        start = end;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: u32) -> SystemParams {
        SystemParams::new(n, Rational::ONE, 1, 5, 5)
    }

    #[test]
    fn empty_pattern_is_valid() {
        let pattern = AdversarialPattern::new(params(1), vec![]);
        assert!(validate_pattern(&pattern).is_empty());
    }

    #[test]
    fn duplicate_id_is_reported() {
        let pattern = AdversarialPattern::new(
            params(1),
            vec![AdversaryEvent::inject(Rational::ZERO, 7, 1), AdversaryEvent::inject(Rational::ONE, 7, 2)],
        );
        let v = validate_pattern(&pattern);
        assert_eq!(v, vec![Violation::DuplicateTaskId(TaskId(7))]);
        assert_eq!(v[0].to_string(), "duplicate task id 7");
    }

    #[test]
    fn double_crash_is_reported_at_second_time() {
        let pattern = AdversarialPattern::new(
            params(1),
            vec![AdversaryEvent::crash(Rational::int(2), 1), AdversaryEvent::crash(Rational::int(3), 1)],
        );
        assert_eq!(
            validate_pattern(&pattern),
            vec![Violation::CrashOfCrashed { time: Rational::int(3), proc: ProcId(1) }]
        );
    }

    #[test]
    fn restart_of_alive_and_unknown_processor() {
        let pattern = AdversarialPattern::new(
            params(2),
            vec![AdversaryEvent::restart(Rational::int(1), 2), AdversaryEvent::crash(Rational::int(1), 3)],
        );
        assert_eq!(
            validate_pattern(&pattern),
            vec![
                Violation::UnknownProcessor { time: Rational::int(1), proc: ProcId(3) },
                Violation::RestartOfAlive { time: Rational::int(1), proc: ProcId(2) },
            ]
        );
    }

    #[test]
    fn same_instant_crash_then_restart_is_valid_in_either_authoring_order() {
        for events in [
            vec![AdversaryEvent::crash(Rational::int(1), 1), AdversaryEvent::restart(Rational::int(1), 1)],
            vec![AdversaryEvent::restart(Rational::int(1), 1), AdversaryEvent::crash(Rational::int(1), 1)],
        ] {
            let pattern = AdversarialPattern::new(params(1), events);
            assert!(validate_pattern(&pattern).is_empty());
        }
    }

    #[test]
    fn unsorted_and_cost_range() {
        let pattern = AdversarialPattern::new(
            params(1),
            vec![AdversaryEvent::inject(Rational::int(2), 1, 1), AdversaryEvent::inject(Rational::int(1), 2, 9)],
        );
        assert_eq!(
            validate_pattern(&pattern),
            vec![
                Violation::Unsorted { index: 1, time: Rational::int(1) },
                Violation::CostOutOfRange { id: TaskId(2), cost: 9 },
            ]
        );
    }

    #[test]
    fn bad_params_are_data() {
        let pattern = AdversarialPattern::new(SystemParams::new(0, Rational::frac(1, 2), 3, 2, 1), vec![]);
        assert_eq!(validate_pattern(&pattern).len(), 3);
    }

    #[test]
    fn arrival_must_match_injection_time() {
        let mut event = AdversaryEvent::inject(Rational::int(1), 1, 1);
        if let EventKind::Inject(task) = &mut event.kind {
            task.arrival = Rational::ZERO;
        }
        let pattern = AdversarialPattern::new(params(1), vec![event]);
        assert_eq!(validate_pattern(&pattern), vec![Violation::ArrivalMismatch { id: TaskId(1) }]);
    }
}
