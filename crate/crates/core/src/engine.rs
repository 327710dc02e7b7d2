//! Discrete-event simulation of processor cycles.
//!
//! Every processor repeats get, compute, inform. Within one instant the
//! engine processes, in order:
//!
//! 1. informs of processors whose task finishes at the instant (by id),
//! 2. crashes (pattern order); a running task is lost,
//! 3. restarts (pattern order); the processor starts a fresh cycle with
//!    fresh scheduler memory,
//! 4. injections (pattern order),
//! 5. gets of every idle processor and of processors released from a
//!    blocked get (by id), each followed by the scheduler's choice.
//!
//! A task of cost `c` started at `t` finishes at `t + c/s` exactly.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::io::SchedulerSpec;
use crate::model::{AdversarialPattern, AdversaryEvent, EventKind, ProcId, SystemParams, TaskId, TaskSpec, Violation};
use crate::repository::{GetResult, RepositoryError, RepositoryState};
use crate::schedulers::{Burst, Laf, Lis, Scheduler, SchedulerError};
use crate::time::{Rational, TimeError, TimePoint};
use crate::trace::{Report, RunTrace, TraceEvent, TraceRow};

pub const DEFAULT_EVENT_BUDGET: u64 = 10_000_000;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid pattern: {}", join_violations(.0))]
    InvalidPattern(Vec<Violation>),
    #[error("horizon {horizon} precedes the last event at {last}")]
    HorizonBeforeEvents { horizon: TimePoint, last: TimePoint },
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error("scheduler chose task {task} for processor {proc}, which is not in its pending snapshot")]
    ChoiceNotPending { proc: ProcId, task: TaskId },
    #[error(transparent)]
    Repository(#[from] RepositoryError),
    #[error(transparent)]
    Time(#[from] TimeError),
    #[error("event budget of {0} events exceeded")]
    BudgetExceeded(u64),
    #[error("event at {time} is not after the last processed instant {now}")]
    EventInPast { time: TimePoint, now: TimePoint },
    #[error("event rejected: {0}")]
    InvalidEvent(Violation),
    #[error("schedule starts task {task} at {start}, before its arrival at {arrival}")]
    StartBeforeArrival { task: TaskId, start: TimePoint, arrival: TimePoint },
    #[error("schedule refers to task {0}, which the pattern never injects")]
    UnknownTask(TaskId),
    #[error("schedule starts task {task} on processor {proc} at {start}, when it is not alive")]
    NotAlive { proc: ProcId, task: TaskId, start: TimePoint },
    #[error("schedule starts task {task} on processor {proc} at {start}, while it is still busy")]
    Overlap { proc: ProcId, task: TaskId, start: TimePoint },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProcStatus {
    Crashed,
    /// Alive and about to issue a get at the current instant.
    Idle,
    BlockedInGet,
    Executing { task: TaskSpec, start: TimePoint, finish: TimePoint },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Processor<M> {
    pub id: ProcId,
    pub status: ProcStatus,
    pub memory: M,
}

/// A steppable simulation. Cloning gives an independent scratch copy.
#[derive(Debug, Clone)]
pub struct Simulation<S: Scheduler> {
    params: SystemParams,
    scheduler: S,
    repo: RepositoryState,
    procs: Vec<Processor<S::Memory>>,
    queue: BTreeMap<TimePoint, Vec<EventKind>>,
    now: Option<TimePoint>,
    trace: RunTrace,
    events: u64,
    budget: u64,
}

impl<S: Scheduler> Simulation<S> {
    /// All processors are alive at time zero.
    pub fn new(params: SystemParams, scheduler: S) -> Self {
        let procs = params
            .procs()
            .map(|id| Processor { id, status: ProcStatus::Idle, memory: S::Memory::default() })
            .collect();
        Simulation {
            params,
            scheduler,
            repo: RepositoryState::new(),
            procs,
            queue: BTreeMap::new(),
            now: None,
            trace: RunTrace::default(),
            events: 0,
            budget: DEFAULT_EVENT_BUDGET,
        }
    }

    /// Validates `pattern`, checks the scheduler's preconditions and queues
    /// every event.
    pub fn from_pattern(pattern: &AdversarialPattern, scheduler: S) -> Result<Self, EngineError> {
        let violations = pattern.validate();
        if !violations.is_empty() {
            return Err(EngineError::InvalidPattern(violations));
        }
        scheduler.check(&pattern.params, &pattern.cost_alphabet())?;
        let mut sim = Simulation::new(pattern.params.clone(), scheduler);
        for event in &pattern.events {
            sim.push_event(event.clone())?;
        }
        Ok(sim)
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn scheduler(&self) -> &S {
        &self.scheduler
    }

    pub fn now(&self) -> Option<TimePoint> {
        self.now
    }

    pub fn trace(&self) -> &RunTrace {
        &self.trace
    }

    pub fn repository(&self) -> &RepositoryState {
        &self.repo
    }

    pub fn processor(&self, id: ProcId) -> &Processor<S::Memory> {
        &self.procs[id.index()]
    }

    /// Queues an event strictly after the last processed instant.
    pub fn push_event(&mut self, event: AdversaryEvent) -> Result<(), EngineError> {
        match self.now {
            Some(now) if event.time <= now => return Err(EngineError::EventInPast { time: event.time, now }),
            None if event.time.is_negative() => {
                return Err(EngineError::EventInPast { time: event.time, now: Rational::ZERO })
            }
            _ => {}
        }
        if let EventKind::Inject(task) = &event.kind {
            self.trace.tasks.insert(task.id, *task);
        }
        self.queue.entry(event.time).or_default().push(event.kind);
        Ok(())
    }

    pub fn next_instant(&self) -> Option<TimePoint> {
        if self.now.is_none() {
            return Some(Rational::ZERO);
        }
        let next_event = self.queue.keys().next().copied();
        let next_finish = self
            .procs
            .iter()
            .filter_map(|p| match p.status {
                ProcStatus::Executing { finish, .. } => Some(finish),
                _ => None,
            })
            .min();
        match (next_event, next_finish) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    /// Processes every instant up to and including `t`.
    pub fn run_until(&mut self, t: TimePoint) -> Result<(), EngineError> {
        while let Some(next) = self.next_instant() {
            if next > t {
                break;
            }
            self.step()?;
        }
        Ok(())
    }

    /// Processes the next instant and returns it, or `None` when nothing is
    /// left to happen.
    pub fn step(&mut self) -> Result<Option<TimePoint>, EngineError> {
        let Some(t) = self.next_instant() else { return Ok(None) };
        let events = self.queue.remove(&t).unwrap_or_default();
        let mut rows: Vec<(TraceEvent, Option<ProcId>, Option<TaskId>)> = Vec::new();

        let mut informs = Vec::new();
        for proc in &mut self.procs {
            if let ProcStatus::Executing { task, start, finish } = proc.status {
                if finish == t {
                    informs.push((proc.id, task.id));
                    self.scheduler.on_report(&mut proc.memory, &task);
                    proc.status = ProcStatus::Idle;
                    self.trace.reports.push(Report { time: t, proc: proc.id, task: task.id, start });
                    rows.push((TraceEvent::Inform, Some(proc.id), Some(task.id)));
                }
            }
        }

        for kind in &events {
            if let EventKind::Crash(p) = *kind {
                let proc = self.procs.get_mut(p.0.wrapping_sub(1) as usize).ok_or(EngineError::InvalidEvent(
                    Violation::UnknownProcessor { time: t, proc: p },
                ))?;
                if proc.status == ProcStatus::Crashed {
                    return Err(EngineError::InvalidEvent(Violation::CrashOfCrashed { time: t, proc: p }));
                }
                proc.status = ProcStatus::Crashed;
                self.repo.unblock(p);
                rows.push((TraceEvent::Crash, Some(p), None));
            }
        }
        for kind in &events {
            if let EventKind::Restart(p) = *kind {
                let proc = self.procs.get_mut(p.0.wrapping_sub(1) as usize).ok_or(EngineError::InvalidEvent(
                    Violation::UnknownProcessor { time: t, proc: p },
                ))?;
                if proc.status != ProcStatus::Crashed {
                    return Err(EngineError::InvalidEvent(Violation::RestartOfAlive { time: t, proc: p }));
                }
                proc.status = ProcStatus::Idle;
                proc.memory = S::Memory::default();
                rows.push((TraceEvent::Restart, Some(p), None));
            }
        }
        let injects: Vec<TaskSpec> = events
            .iter()
            .filter_map(|k| match k {
                EventKind::Inject(task) => Some(*task),
                _ => None,
            })
            .collect();
        rows.extend(injects.iter().map(|task| (TraceEvent::Inject, None, Some(task.id))));

        let gets: Vec<ProcId> =
            self.procs.iter().filter(|p| p.status == ProcStatus::Idle).map(|p| p.id).collect();
        let outcome = self.repo.apply_instant(t, &informs, &injects, &gets)?;
        let mut served: Vec<(ProcId, GetResult)> = outcome.gets;
        served.extend(outcome.released.into_iter().map(|(p, tasks)| (p, GetResult::Tasks(tasks))));
        served.sort_by_key(|(p, _)| *p);

        for (id, result) in served {
            let proc = &mut self.procs[id.index()];
            match result {
                GetResult::Blocked => proc.status = ProcStatus::BlockedInGet,
                GetResult::Tasks(mut snapshot) => {
                    snapshot.sort_by_key(|task| task.lis_key());
                    let chosen = self.scheduler.select(&snapshot, id, &mut proc.memory)?;
                    let task = *snapshot
                        .iter()
                        .find(|task| task.id == chosen)
                        .ok_or(EngineError::ChoiceNotPending { proc: id, task: chosen })?;
                    let finish = t.checked_add(&Rational::div_by_speedup(task.cost, &self.params.speedup)?)?;
                    proc.status = ProcStatus::Executing { task, start: t, finish };
                    rows.push((TraceEvent::Schedule, Some(id), Some(task.id)));
                }
            }
        }

        self.events += rows.len() as u64 + 1;
        if self.events > self.budget {
            return Err(EngineError::BudgetExceeded(self.budget));
        }
        let (pending_tasks, pending_cost) = (self.repo.pending_count(), self.repo.pending_cost());
        for (event, proc, task) in rows {
            self.trace.push(TraceRow { time: t, event, proc, task, pending_tasks, pending_cost });
        }
        self.now = Some(t);
        Ok(Some(t))
    }

    /// Finishes the run at `horizon` and returns the trace.
    pub fn finish(mut self, horizon: TimePoint) -> Result<RunTrace, EngineError> {
        self.run_until(horizon)?;
        self.trace.horizon = horizon;
        Ok(self.trace)
    }
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub pattern: AdversarialPattern,
    pub scheduler: SchedulerSpec,
    pub horizon: TimePoint,
    pub event_budget: u64,
}

impl SimulationConfig {
    pub fn new(pattern: AdversarialPattern, scheduler: SchedulerSpec, horizon: TimePoint) -> Self {
        SimulationConfig { pattern, scheduler, horizon, event_budget: DEFAULT_EVENT_BUDGET }
    }
}

/// Runs `scheduler` on `pattern` until `horizon`.
pub fn simulate<S: Scheduler>(
    pattern: &AdversarialPattern,
    scheduler: S,
    horizon: TimePoint,
    budget: u64,
) -> Result<RunTrace, EngineError> {
    if let Some(last) = pattern.last_event_time() {
        if horizon < last {
            return Err(EngineError::HorizonBeforeEvents { horizon, last });
        }
    }
    Simulation::from_pattern(pattern, scheduler)?.with_budget(budget).finish(horizon)
}

pub fn run_simulation(config: &SimulationConfig) -> Result<RunTrace, EngineError> {
    let params = &config.pattern.params;
    let (pattern, horizon, budget) = (&config.pattern, config.horizon, config.event_budget);
    match config.scheduler {
        SchedulerSpec::Lis { beta } => simulate(pattern, Lis::new(params.n, beta.unwrap_or(params.beta)), horizon, budget),
        SchedulerSpec::Laf { beta } => simulate(pattern, Laf::new(params.n, beta.unwrap_or(params.beta)), horizon, budget),
        SchedulerSpec::Burst => simulate(pattern, Burst::new(params)?, horizon, budget),
    }
}

/// One entry of an explicit offline schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct ScheduledRun {
    pub proc: ProcId,
    pub task: TaskId,
    pub start: TimePoint,
}

impl ScheduledRun {
    pub fn new(proc: u32, task: u64, start: TimePoint) -> Self {
        ScheduledRun { proc: ProcId(proc), task: TaskId(task), start }
    }
}

/// Crash/restart times of one processor, in same-instant processing order.
fn fault_timeline(pattern: &AdversarialPattern, proc: ProcId) -> Vec<(TimePoint, bool)> {
    let mut out: Vec<(TimePoint, bool)> = pattern
        .events
        .iter()
        .filter_map(|e| match e.kind {
            EventKind::Crash(p) if p == proc => Some((e.time, false)),
            EventKind::Restart(p) if p == proc => Some((e.time, true)),
            _ => None,
        })
        .collect();
    out.sort();
    out
}

type TimelineRow = (TimePoint, u8, usize, TraceEvent, Option<ProcId>, Option<TaskId>);

/// Replays an explicit speed-1 schedule through the repository.
///
/// Runs interrupted by a crash of their processor, or unfinished at
/// `horizon`, are not informed and are listed in `flagged`. A duplicate
/// completion is a no-op. The offline algorithm may idle.
pub fn run_offline_reference(
    pattern: &AdversarialPattern,
    schedule: &[ScheduledRun],
    horizon: TimePoint,
) -> Result<RunTrace, EngineError> {
    let violations = pattern.validate();
    if !violations.is_empty() {
        return Err(EngineError::InvalidPattern(violations));
    }
    if let Some(last) = pattern.last_event_time() {
        if horizon < last {
            return Err(EngineError::HorizonBeforeEvents { horizon, last });
        }
    }
    let tasks = pattern.task_table();
    let mut runs: Vec<ScheduledRun> = schedule.to_vec();
    runs.sort_by_key(|r| (r.proc, r.start));

    // (time, class, seq) orders rows: inform 0, crash 1, restart 2, inject 3, schedule 4.
    let mut timeline: Vec<TimelineRow> = Vec::new();
    let mut flagged = Vec::new();
    let mut reports = Vec::new();
    let mut busy_until: BTreeMap<ProcId, TimePoint> = BTreeMap::new();
    let timelines: BTreeMap<ProcId, Vec<(TimePoint, bool)>> =
        pattern.params.procs().map(|p| (p, fault_timeline(pattern, p))).collect();

    for (seq, run) in runs.iter().enumerate() {
        let spec = *tasks.get(&run.task).ok_or(EngineError::UnknownTask(run.task))?;
        if run.start < spec.arrival {
            return Err(EngineError::StartBeforeArrival { task: run.task, start: run.start, arrival: spec.arrival });
        }
        let faults = timelines.get(&run.proc).ok_or(EngineError::InvalidEvent(Violation::UnknownProcessor {
            time: run.start,
            proc: run.proc,
        }))?;
        let alive = faults.iter().take_while(|(t, _)| *t <= run.start).last().is_none_or(|&(_, restart)| restart);
        if !alive {
            return Err(EngineError::NotAlive { proc: run.proc, task: run.task, start: run.start });
        }
        if busy_until.get(&run.proc).is_some_and(|&until| until > run.start) {
            return Err(EngineError::Overlap { proc: run.proc, task: run.task, start: run.start });
        }
        let finish = run.start.checked_add(&Rational::from_u64(spec.cost))?;
        let crash = faults.iter().find(|&&(t, restart)| !restart && t > run.start && t < finish).map(|&(t, _)| t);
        timeline.push((run.start, 4, seq, TraceEvent::Schedule, Some(run.proc), Some(run.task)));
        match crash {
            Some(c) => {
                busy_until.insert(run.proc, c);
                flagged.push((run.proc, run.task, run.start));
            }
            None if finish > horizon => {
                busy_until.insert(run.proc, finish);
                flagged.push((run.proc, run.task, run.start));
            }
            None => {
                busy_until.insert(run.proc, finish);
                timeline.push((finish, 0, seq, TraceEvent::Inform, Some(run.proc), Some(run.task)));
                reports.push(Report { time: finish, proc: run.proc, task: run.task, start: run.start });
            }
        }
    }
    for (seq, event) in pattern.events.iter().enumerate() {
        let entry = match event.kind {
            EventKind::Crash(p) => (1, TraceEvent::Crash, Some(p), None),
            EventKind::Restart(p) => (2, TraceEvent::Restart, Some(p), None),
            EventKind::Inject(task) => (3, TraceEvent::Inject, None, Some(task.id)),
        };
        timeline.push((event.time, entry.0, seq, entry.1, entry.2, entry.3));
    }
    timeline.sort_by_key(|a| (a.0, a.1, a.2));
    reports.sort_by_key(|r: &Report| (r.time, r.proc));

    let mut trace = RunTrace::new(horizon);
    trace.tasks = tasks.clone();
    trace.reports = reports;
    trace.flagged = flagged;
    let mut repo = RepositoryState::new();
    let mut start = 0;
    while start < timeline.len() {
        let t = timeline[start].0;
        let end = start + timeline[start..].iter().take_while(|e| e.0 == t).count();
        let instant = &timeline[start..end];
        let informs: Vec<(ProcId, TaskId)> = instant
            .iter()
            .filter(|e| e.3 == TraceEvent::Inform)
            .map(|e| (e.4.expect("inform has a processor"), e.5.expect("inform has a task")))
            .collect();
        let injects: Vec<TaskSpec> =
            instant.iter().filter(|e| e.3 == TraceEvent::Inject).map(|e| tasks[&e.5.expect("inject task")]).collect();
        repo.apply_instant(t, &informs, &injects, &[])?;
        let (pending_tasks, pending_cost) = (repo.pending_count(), repo.pending_cost());
        for e in instant {
            trace.push(TraceRow { time: t, event: e.3, proc: e.4, task: e.5, pending_tasks, pending_cost });
        }
        start = end;
    }
    Ok(trace)
}

/// Pending tasks not informed by anyone: the set a trace ends with.
pub fn unfinished(trace: &RunTrace) -> BTreeSet<TaskId> {
    let done: BTreeSet<TaskId> = trace.reports.iter().map(|r| r.task).collect();
    trace.tasks.keys().filter(|id| !done.contains(id)).copied().collect()
}
