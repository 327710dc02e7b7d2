//! Run traces: every repository-visible event plus pending levels.
//!
//! Pending tasks and pending cost only change at event instants, so a trace
//! sampled once per instant (after the full same-instant ordering) describes
//! both measures at every time. A row's `pending_*` columns always hold the
//! values after its instant has been fully processed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

use crate::model::{ProcId, TaskId, TaskSpec};
use crate::time::TimePoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TraceEvent {
    Inform,
    Crash,
    Restart,
    Inject,
    /// A non-blocking get followed by the scheduler's choice.
    Schedule,
}

impl TraceEvent {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceEvent::Inform => "inform",
            TraceEvent::Crash => "crash",
            TraceEvent::Restart => "restart",
            TraceEvent::Inject => "inject",
            TraceEvent::Schedule => "schedule",
        }
    }
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TraceEvent {
    type Err = TraceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "inform" => TraceEvent::Inform,
            "crash" => TraceEvent::Crash,
            "restart" => TraceEvent::Restart,
            "inject" => TraceEvent::Inject,
            "schedule" => TraceEvent::Schedule,
            other => return Err(TraceError::Malformed(format!("unknown event {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRow {
    pub time: TimePoint,
    pub event: TraceEvent,
    pub proc: Option<ProcId>,
    pub task: Option<TaskId>,
    pub pending_tasks: u64,
    pub pending_cost: u64,
}

/// One inform together with the instant its execution started.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Report {
    pub time: TimePoint,
    pub proc: ProcId,
    pub task: TaskId,
    pub start: TimePoint,
}

/// Pending levels right after an instant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstantLevels {
    pub time: TimePoint,
    pub tasks: u64,
    pub cost: u64,
    pub tasks_by_cost: BTreeMap<u64, u64>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("malformed trace: {0}")]
    Malformed(String),
    #[error("malformed trace line {line}: {msg}")]
    Line { line: usize, msg: String },
}

pub const CSV_HEADER: &str = "time,event,proc,task,pending_tasks,pending_cost";

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RunTrace {
    pub horizon: TimePoint,
    pub rows: Vec<TraceRow>,
    pub reports: Vec<Report>,
    /// Every task injected during the run, by id.
    pub tasks: BTreeMap<TaskId, TaskSpec>,
    /// Offline-schedule entries that did not complete (crash or horizon).
    pub flagged: Vec<(ProcId, TaskId, TimePoint)>,
}

impl RunTrace {
    pub fn new(horizon: TimePoint) -> Self {
        RunTrace { horizon, ..Default::default() }
    }

    pub fn push(&mut self, row: TraceRow) {
        self.rows.push(row);
    }

    /// Distinct instants with their post-instant pending levels.
    pub fn instants(&self) -> Vec<(TimePoint, u64, u64)> {
        let mut out: Vec<(TimePoint, u64, u64)> = Vec::new();
        for row in &self.rows {
            match out.last_mut() {
                Some(last) if last.0 == row.time => {
                    last.1 = row.pending_tasks;
                    last.2 = row.pending_cost;
                }
                _ => out.push((row.time, row.pending_tasks, row.pending_cost)),
            }
        }
        out
    }

    /// Pending (tasks, cost) at `t`, after that instant's ordering.
    pub fn pending_at(&self, t: TimePoint) -> (u64, u64) {
        let idx = self.rows.partition_point(|r| r.time <= t);
        if idx == 0 {
            (0, 0)
        } else {
            let row = &self.rows[idx - 1];
            (row.pending_tasks, row.pending_cost)
        }
    }

    pub fn final_pending(&self) -> (u64, u64) {
        self.rows.last().map(|r| (r.pending_tasks, r.pending_cost)).unwrap_or((0, 0))
    }

    /// Per-instant levels including the per-cost class sizes, rebuilt from the
    /// inject and inform rows.
    pub fn levels(&self) -> Result<Vec<InstantLevels>, TraceError> {
        let mut pending: BTreeSet<TaskId> = BTreeSet::new();
        let mut by_cost: BTreeMap<u64, u64> = BTreeMap::new();
        let mut out: Vec<InstantLevels> = Vec::new();
        for row in &self.rows {
            match row.event {
                TraceEvent::Inject | TraceEvent::Inform => {
                    let id = row
                        .task
                        .ok_or_else(|| TraceError::Malformed(format!("{} row without task", row.event)))?;
                    let spec = self
                        .tasks
                        .get(&id)
                        .ok_or_else(|| TraceError::Malformed(format!("task {id} has no known cost")))?;
                    if row.event == TraceEvent::Inject {
                        if pending.insert(id) {
                            *by_cost.entry(spec.cost).or_default() += 1;
                        }
                    } else if pending.remove(&id) {
                        let slot = by_cost.get_mut(&spec.cost).expect("class of pending task");
                        *slot -= 1;
                        if *slot == 0 {
                            by_cost.remove(&spec.cost);
                        }
                    }
                }
                _ => {}
            }
            let cost: u64 = pending.iter().map(|id| self.tasks[id].cost).sum();
            let level = InstantLevels {
                time: row.time,
                tasks: pending.len() as u64,
                cost,
                tasks_by_cost: by_cost.clone(),
            };
            match out.last_mut() {
                Some(last) if last.time == row.time => *last = level,
                _ => out.push(level),
            }
        }
        Ok(out)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            let proc = row.proc.map(|p| p.to_string()).unwrap_or_default();
            let task = row.task.map(|t| t.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                row.time, row.event, proc, task, row.pending_tasks, row.pending_cost
            );
        }
        out
    }

    /// Parses a CSV trace. Task costs are taken from `tasks` (usually the
    /// pattern's task table); reports are rebuilt from schedule/inform pairs.
    pub fn from_csv(
        text: &str,
        horizon: TimePoint,
        tasks: BTreeMap<TaskId, TaskSpec>,
    ) -> Result<RunTrace, TraceError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim() == CSV_HEADER => {}
            _ => return Err(TraceError::Malformed("missing or wrong header".to_string())),
        }
        let mut trace = RunTrace { horizon, tasks, ..Default::default() };
        let mut running: BTreeMap<ProcId, (TaskId, TimePoint)> = BTreeMap::new();
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |msg: String| TraceError::Line { line: idx + 1, msg };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 6 {
                return Err(bad(format!("expected 6 fields, found {}", fields.len())));
            }
            let time: TimePoint = fields[0].parse().map_err(|e| bad(format!("{e}")))?;
            let event: TraceEvent = fields[1].parse().map_err(|e| bad(format!("{e}")))?;
            let opt_u64 = |s: &str| -> Result<Option<u64>, TraceError> {
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse().map(Some).map_err(|_| bad(format!("bad integer {s:?}")))
                }
            };
            let proc = opt_u64(fields[2])?.map(|p| ProcId(p as u32));
            let task = opt_u64(fields[3])?.map(TaskId);
            let pending_tasks = opt_u64(fields[4])?.ok_or_else(|| bad("missing pending_tasks".into()))?;
            let pending_cost = opt_u64(fields[5])?.ok_or_else(|| bad("missing pending_cost".into()))?;
            match (event, proc, task) {
                (TraceEvent::Schedule, Some(p), Some(t)) => {
                    running.insert(p, (t, time));
                }
                (TraceEvent::Crash, Some(p), _) => {
                    running.remove(&p);
                }
                (TraceEvent::Inform, Some(p), Some(t)) => {
                    let start = match running.remove(&p) {
                        Some((id, start)) if id == t => start,
                        _ => return Err(bad(format!("inform of {t} by {p} without a matching schedule"))),
                    };
                    trace.reports.push(Report { time, proc: p, task: t, start });
                }
                (TraceEvent::Schedule | TraceEvent::Inform | TraceEvent::Crash | TraceEvent::Restart, None, _) => {
                    return Err(bad(format!("{event} row without processor")));
                }
                _ => {}
            }
            trace.rows.push(TraceRow { time, event, proc, task, pending_tasks, pending_cost });
        }
        if trace.rows.windows(2).any(|w| w[1].time < w[0].time) {
            return Err(TraceError::Malformed("rows are not in time order".to_string()));
        }
        Ok(trace)
    }
}
