//! JSON forms of patterns, simulation configs and reduction sidecars, and
//! the CSV form of explicit schedules.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::ScheduledRun;
use crate::model::{AdversarialPattern, AdversaryEvent, EventKind, ProcId, SystemParams, TaskSpec};
use crate::time::{Rational, TimePoint};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ParamsWire {
    n: u32,
    speedup: Rational,
    lmin: u64,
    lmax: u64,
    beta: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TaskWire {
    id: u64,
    cost: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum EventWire {
    Inject { t: Rational, task: TaskWire },
    Crash { t: Rational, proc: u32 },
    Restart { t: Rational, proc: u32 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PatternWire {
    params: ParamsWire,
    events: Vec<EventWire>,
}

/// Scheduler selection as it appears in config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SchedulerSpec {
    Lis {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<u64>,
    },
    Burst,
    Laf {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<u64>,
    },
}

/// A simulation config file: a pattern plus scheduler and horizon.
#[derive(Debug, Clone)]
pub struct ConfigFile {
    pub pattern: AdversarialPattern,
    pub scheduler: SchedulerSpec,
    pub horizon: TimePoint,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ConfigWire {
    #[serde(flatten)]
    pattern: PatternWire,
    scheduler: SchedulerSpec,
    horizon: Rational,
}

/// Sidecar written next to a reduction pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointSidecar {
    pub checkpoint: Rational,
    pub omega: u64,
}

impl From<&AdversarialPattern> for PatternWire {
    fn from(pattern: &AdversarialPattern) -> Self {
        let p = &pattern.params;
        PatternWire {
            params: ParamsWire { n: p.n, speedup: p.speedup, lmin: p.lmin, lmax: p.lmax, beta: p.beta },
            events: pattern
                .events
                .iter()
                .map(|e| match &e.kind {
                    EventKind::Inject(task) => {
                        EventWire::Inject { t: e.time, task: TaskWire { id: task.id.0, cost: task.cost } }
                    }
                    EventKind::Crash(p) => EventWire::Crash { t: e.time, proc: p.0 },
                    EventKind::Restart(p) => EventWire::Restart { t: e.time, proc: p.0 },
                })
                .collect(),
        }
    }
}

impl From<PatternWire> for AdversarialPattern {
    fn from(wire: PatternWire) -> Self {
        let w = wire.params;
        let params = SystemParams::new(w.n, w.speedup, w.lmin, w.lmax, w.beta);
        let events = wire
            .events
            .into_iter()
            .map(|e| match e {
                EventWire::Inject { t, task } => {
                    AdversaryEvent { time: t, kind: EventKind::Inject(TaskSpec::new(task.id, t, task.cost)) }
                }
                EventWire::Crash { t, proc } => AdversaryEvent { time: t, kind: EventKind::Crash(ProcId(proc)) },
                EventWire::Restart { t, proc } => AdversaryEvent { time: t, kind: EventKind::Restart(ProcId(proc)) },
            })
            .collect();
        AdversarialPattern::new(params, events)
    }
}

pub fn pattern_to_json(pattern: &AdversarialPattern) -> String {
    serde_json::to_string_pretty(&PatternWire::from(pattern)).expect("pattern serializes")
}

/// Parses a pattern file. Event order is kept as written; run
/// [`crate::model::validate_pattern`] to check it.
pub fn pattern_from_json(text: &str) -> Result<AdversarialPattern, FormatError> {
    let wire: PatternWire = serde_json::from_str(text)?;
    Ok(wire.into())
}

pub fn config_from_json(text: &str) -> Result<ConfigFile, FormatError> {
    let wire: ConfigWire = serde_json::from_str(text)?;
    Ok(ConfigFile { pattern: wire.pattern.into(), scheduler: wire.scheduler, horizon: wire.horizon })
}

pub fn config_to_json(config: &ConfigFile) -> String {
    let wire = ConfigWire {
        pattern: PatternWire::from(&config.pattern),
        scheduler: config.scheduler,
        horizon: config.horizon,
    };
    serde_json::to_string_pretty(&wire).expect("config serializes")
}

pub const SCHEDULE_HEADER: &str = "proc,task,start";

pub fn schedule_to_csv(runs: &[ScheduledRun]) -> String {
    let mut out = format!("{SCHEDULE_HEADER}\n");
    for run in runs {
        out.push_str(&format!("{},{},{}\n", run.proc.0, run.task.0, run.start));
    }
    out
}

pub fn schedule_from_csv(text: &str) -> Result<Vec<ScheduledRun>, FormatError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == SCHEDULE_HEADER => {}
        _ => return Err(FormatError::Invalid(format!("schedule must start with {SCHEDULE_HEADER:?}"))),
    }
    let mut runs = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| FormatError::Invalid(format!("schedule line {}: {what}", idx + 1));
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [proc, task, start] = fields[..] else {
            return Err(bad("expected proc,task,start"));
        };
        let proc: u32 = proc.parse().map_err(|_| bad("bad processor id"))?;
        let task: u64 = task.parse().map_err(|_| bad("bad task id"))?;
        let start: TimePoint = start.parse().map_err(|_| bad("bad start time"))?;
        runs.push(ScheduledRun::new(proc, task, start));
    }
    Ok(runs)
}
