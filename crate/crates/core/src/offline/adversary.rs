//! Adaptive adversary against a deterministic scheduler on one processor.
//!
//! Phase 1 starts with `γ` tasks of cost `lmin` and one of cost `lmax`.
//! Before committing a phase the adversary runs a scratch copy of the
//! simulation without further injections and looks at the scheduler's next
//! choices:
//!
//! - scenario 1: an `lmax`-task comes after `κ < γ` `lmin`-tasks. The phase
//!   lasts `(κ+1)·lmin`; OFF runs `κ+1` `lmin`-tasks; then `κ+1` new
//!   `lmin`-tasks arrive.
//! - scenario 2: the first `γ` choices are `lmin`-tasks. The phase lasts
//!   `lmax`; OFF runs one `lmax`-task; then one new `lmax`-task arrives.
//!
//! Every phase ends with a crash and an immediate restart. OFF runs at
//! speed 1 and is replayed from its explicit schedule.

use std::collections::VecDeque;
use std::fmt::Write as _;

use thiserror::Error;

use crate::engine::{run_offline_reference, EngineError, ProcStatus, ScheduledRun, Simulation};
use crate::model::{AdversarialPattern, AdversaryEvent, ProcId, SystemParams, TaskId};
use crate::schedulers::thresholds::{burst_lower_threshold, gamma};
use crate::schedulers::{non_competitive_check, Scheduler, SchedulerError};
use crate::time::{Rational, TimePoint};
use crate::trace::{RunTrace, TraceEvent};

#[derive(Debug, Error)]
pub enum AdversaryError {
    #[error(
        "parameters are not in the non-competitive regime: need s < {rho} and s < {threshold} (with gamma = {gamma}), got s = {speedup}"
    )]
    Competitive { speedup: Rational, rho: Rational, threshold: Rational, gamma: u64 },
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("inconsistent scheduler behaviour in phase {phase}: {msg}")]
    Inconsistent { phase: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    One,
    Two,
}

impl Scenario {
    pub fn number(self) -> u8 {
        match self {
            Scenario::One => 1,
            Scenario::Two => 2,
        }
    }
}

/// Per-phase record; pending counts are taken at the phase end, after the
/// crash, restart and injections there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseRecord {
    pub phase: usize,
    pub scenario: Scenario,
    pub kappa: u64,
    pub start: TimePoint,
    pub end: TimePoint,
    pub alg_pending: u64,
    pub off_pending: u64,
    pub alg_lmax_pending: u64,
}

#[derive(Debug, Clone)]
pub struct AdversaryRun {
    pub params: SystemParams,
    pub gamma: u64,
    pub pattern: AdversarialPattern,
    pub alg_trace: RunTrace,
    pub off_trace: RunTrace,
    pub off_schedule: Vec<ScheduledRun>,
    pub phases: Vec<PhaseRecord>,
}

/// Outcome of the per-run lemma checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LemmaChecks {
    /// OFF has exactly `γ` `lmin`-tasks and one `lmax`-task pending at every phase start.
    pub off_phase_start: bool,
    /// ALG never informs an `lmax`-task.
    pub alg_no_lmax_inform: bool,
    /// Each scenario-2 phase raises ALG's `lmax` backlog by exactly one.
    pub scenario2_backlog: bool,
    /// After phase `k`, ALG has at least `k / (⌊s·lmax/lmin⌋ + 2)` pending tasks.
    pub linear_growth: bool,
    pub growth_divisor: u64,
}

impl LemmaChecks {
    pub fn all(&self) -> bool {
        self.off_phase_start && self.alg_no_lmax_inform && self.scenario2_backlog && self.linear_growth
    }
}

pub fn lower_bound_adversary<S: Scheduler>(
    scheduler: S,
    lmin: u64,
    lmax: u64,
    speedup: Rational,
    phases: usize,
) -> Result<AdversaryRun, AdversaryError> {
    let g = gamma(lmin, lmax, speedup)?;
    if !non_competitive_check(lmin, lmax, speedup)? {
        return Err(AdversaryError::Competitive {
            speedup,
            rho: Rational::from_u64(lmax) / Rational::from_u64(lmin),
            threshold: burst_lower_threshold(lmin, lmax, g),
            gamma: g,
        });
    }
    let params = SystemParams::new(1, speedup, lmin, lmax, lmax.div_ceil(lmin));
    scheduler.check(&params, &[lmin, lmax].into_iter().collect())?;
    let p1 = ProcId(1);

    let mut sim = Simulation::new(params.clone(), scheduler);
    let mut events: Vec<AdversaryEvent> = Vec::new();
    let mut off = OffPool { next_id: 1, lmin, short: VecDeque::new(), long: VecDeque::new() };
    for _ in 0..g {
        events.push(off.inject(Rational::ZERO, lmin));
    }
    events.push(off.inject(Rational::ZERO, lmax));
    for ev in &events {
        sim.push_event(ev.clone())?;
    }
    sim.run_until(Rational::ZERO)?;

    let (lmin_r, lmax_r) = (Rational::from_u64(lmin), Rational::from_u64(lmax));
    let mut start = Rational::ZERO;
    let mut records = Vec::with_capacity(phases);
    let mut off_schedule = Vec::new();
    for phase in 1..=phases {
        let inconsistent = |msg: String| AdversaryError::Inconsistent { phase, msg };
        match sim.processor(p1).status {
            ProcStatus::Executing { start: s, .. } if s == start => {}
            ref other => return Err(inconsistent(format!("processor is {other:?} at the phase start {start}"))),
        }
        let (scenario, kappa) = classify(&sim, g, lmax).map_err(inconsistent)?;
        let (length, batch) = match scenario {
            Scenario::One => (Rational::from_u64(kappa + 1) * lmin_r, kappa + 1),
            Scenario::Two => (lmax_r, 1),
        };
        let end = start + length;
        match scenario {
            Scenario::One => {
                for i in 0..=kappa {
                    let task = off.short.pop_front().ok_or_else(|| inconsistent("OFF ran out of lmin-tasks".into()))?;
                    off_schedule.push(ScheduledRun { proc: p1, task, start: start + Rational::from_u64(i) * lmin_r });
                }
            }
            Scenario::Two => {
                let task = off.long.pop_front().ok_or_else(|| inconsistent("OFF has no lmax-task".into()))?;
                off_schedule.push(ScheduledRun { proc: p1, task, start });
            }
        }
        let mut pushed = vec![AdversaryEvent::crash(end, 1), AdversaryEvent::restart(end, 1)];
        let cost = if scenario == Scenario::One { lmin } else { lmax };
        for _ in 0..batch {
            pushed.push(off.inject(end, cost));
        }
        events.extend(pushed.iter().cloned());
        for ev in pushed {
            sim.push_event(ev)?;
        }
        sim.run_until(end)?;
        let pending = sim.repository().pending();
        records.push(PhaseRecord {
            phase,
            scenario,
            kappa,
            start,
            end,
            alg_pending: pending.len() as u64,
            off_pending: (off.short.len() + off.long.len()) as u64,
            alg_lmax_pending: pending.iter().filter(|t| t.cost == lmax).count() as u64,
        });
        start = end;
    }

    let horizon = start;
    let alg_trace = sim.finish(horizon)?;
    let pattern = AdversarialPattern::new(params.clone(), events);
    let off_trace = run_offline_reference(&pattern, &off_schedule, horizon)?;
    Ok(AdversaryRun { params, gamma: g, pattern, alg_trace, off_trace, off_schedule, phases: records })
}

/// Ids handed out so far and the tasks OFF still has pending.
struct OffPool {
    next_id: u64,
    lmin: u64,
    short: VecDeque<TaskId>,
    long: VecDeque<TaskId>,
}

impl OffPool {
    fn inject(&mut self, time: TimePoint, cost: u64) -> AdversaryEvent {
        let id = self.next_id;
        self.next_id += 1;
        if cost == self.lmin {
            self.short.push_back(TaskId(id));
        } else {
            self.long.push_back(TaskId(id));
        }
        AdversaryEvent::inject(time, id, cost)
    }
}

/// Scheduler choices from the current instant on, without further events.
fn classify<S: Scheduler>(sim: &Simulation<S>, g: u64, lmax: u64) -> Result<(Scenario, u64), String> {
    let mut scratch = sim.clone();
    let ProcStatus::Executing { task, .. } = scratch.processor(ProcId(1)).status else {
        return Err("processor is not executing".into());
    };
    let mut choices = vec![task.cost];
    let mut seen_rows = scratch.trace().rows.len();
    loop {
        let short_run = choices.iter().take_while(|&&c| c != lmax).count() as u64;
        if short_run >= g {
            return Ok((Scenario::Two, g));
        }
        if (short_run as usize) < choices.len() {
            return Ok((Scenario::One, short_run));
        }
        if scratch.step().map_err(|e| e.to_string())?.is_none() {
            return Err("scheduler stopped before a scenario was determined".into());
        }
        let trace = scratch.trace();
        for row in &trace.rows[seen_rows..] {
            if row.event == TraceEvent::Schedule {
                let id = row.task.expect("schedule row has a task");
                choices.push(trace.tasks[&id].cost);
            }
        }
        seen_rows = trace.rows.len();
    }
}

impl AdversaryRun {
    pub fn check_lemmas(&self) -> LemmaChecks {
        let g = self.gamma;
        let starts: Vec<TimePoint> =
            std::iter::once(Rational::ZERO).chain(self.phases.iter().map(|p| p.end)).collect();
        let off_levels = self.off_trace.levels().expect("OFF trace is well formed");
        let level_at = |levels: &[crate::trace::InstantLevels], t: TimePoint| {
            levels.iter().take_while(|l| l.time <= t).last().cloned()
        };
        let off_phase_start = starts.iter().all(|&t| match level_at(&off_levels, t) {
            Some(l) => {
                l.tasks == g + 1
                    && l.tasks_by_cost.get(&self.params.lmax).copied().unwrap_or(0) == 1
            }
            None => false,
        });

        let lmax = self.params.lmax;
        let alg_no_lmax_inform = self.alg_trace.reports.iter().all(|r| self.alg_trace.tasks[&r.task].cost != lmax);

        let alg_levels = self.alg_trace.levels().expect("ALG trace is well formed");
        let lmax_at = |t: TimePoint| {
            level_at(&alg_levels, t).and_then(|l| l.tasks_by_cost.get(&lmax).copied()).unwrap_or(0)
        };
        let scenario2_backlog =
            self.phases.iter().filter(|p| p.scenario == Scenario::Two).all(|p| lmax_at(p.end) == lmax_at(p.start) + 1);

        let ratio = self.params.speedup * Rational::from_u64(lmax) / Rational::from_u64(self.params.lmin);
        let growth_divisor = ratio.floor() as u64 + 2;
        let linear_growth = self.phases.iter().all(|p| p.alg_pending * growth_divisor >= p.phase as u64);

        LemmaChecks { off_phase_start, alg_no_lmax_inform, scenario2_backlog, linear_growth, growth_divisor }
    }
}

pub const PHASE_LOG_HEADER: &str = "phase,scenario,kappa,alg_pending,off_pending";

pub fn phase_log_csv(phases: &[PhaseRecord]) -> String {
    let mut out = String::from(PHASE_LOG_HEADER);
    out.push('\n');
    for p in phases {
        let _ = writeln!(out, "{},{},{},{},{}", p.phase, p.scenario.number(), p.kappa, p.alg_pending, p.off_pending);
    }
    out
}
