//! Duplicate work detection.
//!
//! An absolute execution is a schedule row followed by the inform of the same
//! task on the same processor with no crash of that processor in between.
//! Two absolute executions of one task form an incident when the relevant
//! class (all pending tasks, or the pending tasks of that task's cost) holds
//! at least `threshold` tasks at every instant of `[first start, last end)`.

use std::collections::BTreeMap;

use super::AnalysisError;
use crate::model::{ProcId, TaskId};
use crate::time::TimePoint;
use crate::trace::{RunTrace, TraceError, TraceEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassRule {
    /// The whole pending set is one class (LIS).
    AllPending,
    /// Tasks of equal cost form a class (Burst, LAF).
    SameCost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Execution {
    pub proc: ProcId,
    pub task: TaskId,
    pub start: TimePoint,
    pub end: TimePoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Incident {
    pub task: TaskId,
    pub first: Execution,
    pub second: Execution,
}

pub fn absolute_executions(trace: &RunTrace) -> Result<Vec<Execution>, AnalysisError> {
    let malformed = |msg: String| AnalysisError::Trace(TraceError::Malformed(msg));
    let mut running: BTreeMap<ProcId, (TaskId, TimePoint)> = BTreeMap::new();
    let mut out = Vec::new();
    for row in &trace.rows {
        match row.event {
            TraceEvent::Schedule => {
                let (proc, task) = row.proc.zip(row.task).ok_or_else(|| malformed("incomplete schedule row".into()))?;
                if running.insert(proc, (task, row.time)).is_some() {
                    return Err(malformed(format!("processor {proc} scheduled {task} while busy at {}", row.time)));
                }
            }
            TraceEvent::Crash => {
                let proc = row.proc.ok_or_else(|| malformed("crash row without processor".into()))?;
                running.remove(&proc);
            }
            TraceEvent::Inform => {
                let (proc, task) = row.proc.zip(row.task).ok_or_else(|| malformed("incomplete inform row".into()))?;
                match running.remove(&proc) {
                    Some((id, start)) if id == task => out.push(Execution { proc, task, start, end: row.time }),
                    _ => return Err(malformed(format!("inform of {task} by {proc} at {} without a schedule", row.time))),
                }
            }
            TraceEvent::Restart | TraceEvent::Inject => {}
        }
    }
    Ok(out)
}

pub fn redundancy_audit(trace: &RunTrace, threshold: u64, rule: ClassRule) -> Result<Vec<Incident>, AnalysisError> {
    let levels = trace.levels()?;
    let mut by_task: BTreeMap<TaskId, Vec<Execution>> = BTreeMap::new();
    for exec in absolute_executions(trace)? {
        by_task.entry(exec.task).or_default().push(exec);
    }
    let mut incidents = Vec::new();
    for (task, execs) in by_task {
        if execs.len() < 2 {
            continue;
        }
        let cost = trace
            .tasks
            .get(&task)
            .ok_or_else(|| AnalysisError::Trace(TraceError::Malformed(format!("task {task} has no known cost"))))?
            .cost;
        for (i, a) in execs.iter().enumerate() {
            for b in &execs[i + 1..] {
                let from = a.start.min(b.start);
                let to = a.end.max(b.end);
                let qualifies = levels.iter().filter(|l| l.time >= from && l.time < to).all(|l| {
                    let size = match rule {
                        ClassRule::AllPending => l.tasks,
                        ClassRule::SameCost => l.tasks_by_cost.get(&cost).copied().unwrap_or(0),
                    };
                    size >= threshold
                });
                if qualifies {
                    incidents.push(Incident { task, first: *a, second: *b });
                }
            }
        }
    }
    Ok(incidents)
}
