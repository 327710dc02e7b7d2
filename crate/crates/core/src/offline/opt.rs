//! Exact offline optimum at a checkpoint, by exhaustive search.
//!
//! The offline algorithm runs at speed 1. Each processor's time before the
//! checkpoint splits into life periods (restart to next crash). A task counts
//! as done when some life period runs it to completion. Within one period a
//! set of tasks is achievable iff running it in arrival order without idling
//! beyond release dates fits before the period ends, which is optimal for a
//! common deadline. The search combines per-period subsets by dynamic
//! programming over bitmasks of completed tasks.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::engine::ScheduledRun;
use crate::model::{AdversarialPattern, EventKind, ProcId, TaskSpec, Violation};
use crate::time::{Rational, TimePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OptBudget {
    pub max_procs: u32,
    pub max_tasks: usize,
    /// Crash and restart events before the checkpoint.
    pub max_fault_events: usize,
}

impl Default for OptBudget {
    fn default() -> Self {
        OptBudget { max_procs: 2, max_tasks: 12, max_fault_events: 12 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OptError {
    #[error("search budget exceeded: {what} is {actual}, limit {limit}")]
    Budget { what: &'static str, actual: usize, limit: usize },
    #[error("invalid pattern: {0:?}")]
    InvalidPattern(Vec<Violation>),
}

/// Whether the checkpoint itself is included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Checkpoint {
    /// State right after the checkpoint instant has been processed.
    At,
    /// Limit from the left: injections at the checkpoint are not yet seen
    /// and runs must finish strictly before it.
    Before,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptResult {
    pub checkpoint: TimePoint,
    pub min_pending_cost: u64,
    pub min_pending_tasks: u64,
    /// Fewest pending tasks of cost `lmax`.
    pub min_pending_lmax: u64,
    pub cost_witness: Vec<ScheduledRun>,
    pub tasks_witness: Vec<ScheduledRun>,
    pub lmax_witness: Vec<ScheduledRun>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Period {
    pub proc: ProcId,
    pub start: TimePoint,
    pub end: TimePoint,
    /// Runs must finish strictly before `end`.
    pub strict: bool,
}

impl Period {
    fn fits(&self, finish: TimePoint) -> bool {
        if self.strict {
            finish < self.end
        } else {
            finish <= self.end
        }
    }
}

/// Life periods of every processor, cut at `checkpoint`.
pub(crate) fn life_periods(pattern: &AdversarialPattern, checkpoint: TimePoint, mode: Checkpoint) -> Vec<Period> {
    let mut out = Vec::new();
    let cut_strict = mode == Checkpoint::Before;
    for proc in pattern.params.procs() {
        let mut faults: Vec<(TimePoint, bool)> = pattern
            .events
            .iter()
            .filter_map(|e| match e.kind {
                EventKind::Crash(p) if p == proc => Some((e.time, false)),
                EventKind::Restart(p) if p == proc => Some((e.time, true)),
                _ => None,
            })
            .collect();
        faults.sort();
        let mut alive_since = Some(Rational::ZERO);
        let push = |start: TimePoint, end: TimePoint, out: &mut Vec<Period>| {
            let (end, strict) = if end < checkpoint { (end, false) } else { (checkpoint, cut_strict) };
            if start < end {
                out.push(Period { proc, start, end, strict });
            }
        };
        for (time, restart) in faults {
            if time > checkpoint {
                break;
            }
            match (restart, alive_since) {
                (false, Some(start)) => {
                    push(start, time, &mut out);
                    alive_since = None;
                }
                (true, None) => alive_since = Some(time),
                _ => {}
            }
        }
        if let Some(start) = alive_since {
            push(start, checkpoint, &mut out);
        }
    }
    out
}

/// Packs `tasks` (in arrival order) into `period` from its start; returns
/// the start times if every run fits.
pub(crate) fn pack(period: &Period, tasks: &[TaskSpec]) -> Option<Vec<TimePoint>> {
    let mut now = period.start;
    let mut starts = Vec::with_capacity(tasks.len());
    for task in tasks {
        let start = now.max(task.arrival);
        let finish = start + Rational::from_u64(task.cost);
        if !period.fits(finish) {
            return None;
        }
        starts.push(start);
        now = finish;
    }
    Some(starts)
}

fn count_faults(pattern: &AdversarialPattern, checkpoint: TimePoint) -> usize {
    pattern
        .events
        .iter()
        .filter(|e| e.time < checkpoint && matches!(e.kind, EventKind::Crash(_) | EventKind::Restart(_)))
        .count()
}

fn subset(tasks: &[TaskSpec], mask: u32) -> Vec<TaskSpec> {
    (0..tasks.len()).filter(|i| mask & (1 << i) != 0).map(|i| tasks[i]).collect()
}

/// Exact optimum at `checkpoint` with the default budget.
pub fn opt_brute_force(pattern: &AdversarialPattern, checkpoint: TimePoint) -> Result<OptResult, OptError> {
    opt_search(pattern, checkpoint, Checkpoint::At, &OptBudget::default())
}

pub fn opt_search(
    pattern: &AdversarialPattern,
    checkpoint: TimePoint,
    mode: Checkpoint,
    budget: &OptBudget,
) -> Result<OptResult, OptError> {
    let violations = pattern.validate();
    if !violations.is_empty() {
        return Err(OptError::InvalidPattern(violations));
    }
    let n = pattern.params.n;
    if n > budget.max_procs {
        return Err(OptError::Budget { what: "processor count", actual: n as usize, limit: budget.max_procs as usize });
    }
    let seen = |t: &TaskSpec| match mode {
        Checkpoint::At => t.arrival <= checkpoint,
        Checkpoint::Before => t.arrival < checkpoint,
    };
    let mut tasks: Vec<TaskSpec> = pattern.tasks().filter(|t| seen(t)).copied().collect();
    tasks.sort_by_key(|t| (t.arrival, t.id));
    if tasks.len() > budget.max_tasks {
        return Err(OptError::Budget { what: "task count", actual: tasks.len(), limit: budget.max_tasks });
    }
    let faults = count_faults(pattern, checkpoint);
    if faults > budget.max_fault_events {
        return Err(OptError::Budget { what: "crash/restart events", actual: faults, limit: budget.max_fault_events });
    }

    let periods = life_periods(pattern, checkpoint, mode);
    let m = tasks.len();
    let full: u32 = if m == 0 { 0 } else { (1u32 << m) - 1 };
    let size = 1usize << m;

    // layers[k][mask] = (previous mask, subset run in period k)
    let mut layers: Vec<Vec<Option<(u32, u32)>>> = Vec::with_capacity(periods.len());
    let mut reachable: Vec<bool> = vec![false; size];
    reachable[0] = true;
    for period in &periods {
        let eligible: u32 = (0..m).filter(|&i| tasks[i].arrival < period.end).fold(0, |acc, i| acc | (1 << i));
        let mut feasible = vec![false; size];
        let mut sub = eligible;
        loop {
            feasible[sub as usize] = pack(period, &subset(&tasks, sub)).is_some();
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & eligible;
        }
        let mut layer: Vec<Option<(u32, u32)>> = vec![None; size];
        for (mask, _) in reachable.iter().enumerate().filter(|(_, r)| **r) {
            let mask = mask as u32;
            let free = full & !mask & eligible;
            let mut sub = free;
            loop {
                if feasible[sub as usize] {
                    let next = (mask | sub) as usize;
                    if layer[next].is_none() {
                        layer[next] = Some((mask, sub));
                    }
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & free;
            }
        }
        reachable = layer.iter().map(Option::is_some).collect();
        layers.push(layer);
    }

    let lmax = pattern.params.lmax;
    let total_cost: u64 = tasks.iter().map(|t| t.cost).sum();
    let total_lmax = tasks.iter().filter(|t| t.cost == lmax).count() as u64;
    let done_cost = |mask: u32| subset(&tasks, mask).iter().map(|t| t.cost).sum::<u64>();
    let done_lmax = |mask: u32| subset(&tasks, mask).iter().filter(|t| t.cost == lmax).count() as u64;
    let masks: Vec<u32> = (0..size as u32).filter(|&k| reachable[k as usize]).collect();
    let best_by = |key: &dyn Fn(u32) -> u64| *masks.iter().min_by_key(|&&k| (key(k), k)).expect("empty set is reachable");
    let cost_mask = best_by(&|k| total_cost - done_cost(k));
    let tasks_mask = best_by(&|k| (m as u64) - u64::from(k.count_ones()));
    let lmax_mask = best_by(&|k| total_lmax - done_lmax(k));

    let witness = |mut mask: u32| -> Vec<ScheduledRun> {
        let mut runs = Vec::new();
        for (k, layer) in layers.iter().enumerate().rev() {
            let (prev, sub) = layer[mask as usize].expect("reachable mask has a parent");
            if sub != 0 {
                let chosen = subset(&tasks, sub);
                let starts = pack(&periods[k], &chosen).expect("recorded subset fits");
                runs.extend(
                    chosen.iter().zip(starts).map(|(t, start)| ScheduledRun { proc: periods[k].proc, task: t.id, start }),
                );
            }
            mask = prev;
        }
        runs.sort_by_key(|r| (r.start, r.proc));
        runs
    };

    Ok(OptResult {
        checkpoint,
        min_pending_cost: total_cost - done_cost(cost_mask),
        min_pending_tasks: (m as u64) - u64::from(tasks_mask.count_ones()),
        min_pending_lmax: total_lmax - done_lmax(lmax_mask),
        cost_witness: witness(cost_mask),
        tasks_witness: witness(tasks_mask),
        lmax_witness: witness(lmax_mask),
    })
}

/// `true` iff some offline schedule leaves pending cost at most `omega`.
pub fn dec_c_sched(pattern: &AdversarialPattern, checkpoint: TimePoint, omega: u64) -> Result<bool, OptError> {
    Ok(opt_brute_force(pattern, checkpoint)?.min_pending_cost <= omega)
}

/// `true` iff some offline schedule leaves at most `omega` pending tasks.
pub fn dec_t_sched(pattern: &AdversarialPattern, checkpoint: TimePoint, omega: u64) -> Result<bool, OptError> {
    Ok(opt_brute_force(pattern, checkpoint)?.min_pending_tasks <= omega)
}

/// Events at or before `t`, for replaying a witness up to the checkpoint.
pub fn truncate(pattern: &AdversarialPattern, t: TimePoint) -> AdversarialPattern {
    AdversarialPattern::new(pattern.params.clone(), pattern.events.iter().filter(|e| e.time <= t).cloned().collect())
}

/// Ids completed by a witness; handy for quick inspection.
pub fn witness_tasks(runs: &[ScheduledRun]) -> BTreeSet<u64> {
    runs.iter().map(|r| r.task.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::run_offline_reference;
    use crate::model::{AdversaryEvent, SystemParams};

    fn params(n: u32, lmax: u64) -> SystemParams {
        SystemParams::new(n, Rational::ONE, 1, lmax, lmax)
    }

    #[test]
    fn empty_instance() {
        let pattern = AdversarialPattern::new(params(1, 1), vec![]);
        let r = opt_brute_force(&pattern, Rational::int(3)).unwrap();
        assert_eq!((r.min_pending_cost, r.min_pending_tasks), (0, 0));
        assert!(r.cost_witness.is_empty());
    }

    #[test]
    fn task_longer_than_life_period_stays_pending() {
        let pattern = AdversarialPattern::new(
            params(1, 5),
            vec![AdversaryEvent::inject(Rational::ZERO, 1, 5), AdversaryEvent::crash(Rational::int(3), 1)],
        );
        let r = opt_brute_force(&pattern, Rational::int(4)).unwrap();
        assert_eq!((r.min_pending_cost, r.min_pending_tasks), (5, 1));
    }

    #[test]
    fn inform_at_crash_instant_counts() {
        let pattern = AdversarialPattern::new(
            params(1, 3),
            vec![AdversaryEvent::inject(Rational::ZERO, 1, 3), AdversaryEvent::crash(Rational::int(3), 1)],
        );
        assert_eq!(opt_brute_force(&pattern, Rational::int(3)).unwrap().min_pending_tasks, 0);
        let before = opt_search(&pattern, Rational::int(3), Checkpoint::Before, &OptBudget::default()).unwrap();
        assert_eq!(before.min_pending_tasks, 1);
    }

    #[test]
    fn cost_and_task_optima_can_differ() {
        // one period of length 3: either the 3-task or both 1-tasks
        let pattern = AdversarialPattern::new(
            params(1, 3),
            vec![
                AdversaryEvent::inject(Rational::ZERO, 1, 3),
                AdversaryEvent::inject(Rational::ZERO, 2, 1),
                AdversaryEvent::inject(Rational::ZERO, 3, 1),
                AdversaryEvent::inject(Rational::ZERO, 4, 1),
                AdversaryEvent::crash(Rational::int(3), 1),
            ],
        );
        let r = opt_brute_force(&pattern, Rational::int(4)).unwrap();
        assert_eq!(r.min_pending_cost, 3);
        assert_eq!(r.min_pending_tasks, 1);
        assert_eq!(r.min_pending_lmax, 0);
    }

    #[test]
    fn witnesses_replay_to_claimed_values() {
        let pattern = AdversarialPattern::new(
            params(2, 3),
            vec![
                AdversaryEvent::inject(Rational::ZERO, 1, 3),
                AdversaryEvent::inject(Rational::ZERO, 2, 2),
                AdversaryEvent::inject(Rational::ONE, 3, 1),
                AdversaryEvent::crash(Rational::int(2), 1),
                AdversaryEvent::restart(Rational::frac(5, 2), 1),
                AdversaryEvent::inject(Rational::int(3), 4, 3),
            ],
        );
        let t = Rational::int(5);
        let r = opt_brute_force(&pattern, t).unwrap();
        let cut = truncate(&pattern, t);
        let by_cost = run_offline_reference(&cut, &r.cost_witness, t).unwrap();
        assert_eq!(by_cost.pending_at(t).1, r.min_pending_cost);
        let by_tasks = run_offline_reference(&cut, &r.tasks_witness, t).unwrap();
        assert_eq!(by_tasks.pending_at(t).0, r.min_pending_tasks);
    }

    #[test]
    fn budget_is_enforced() {
        let events = (1..=13).map(|i| AdversaryEvent::inject(Rational::ZERO, i, 1)).collect();
        let pattern = AdversarialPattern::new(params(1, 1), events);
        assert!(matches!(opt_brute_force(&pattern, Rational::ONE), Err(OptError::Budget { what: "task count", .. })));
        let pattern = AdversarialPattern::new(params(3, 1), vec![]);
        assert!(matches!(opt_brute_force(&pattern, Rational::ONE), Err(OptError::Budget { .. })));
    }

    /// Unpruned search: any order, any start on a half-unit grid, idling allowed.
    fn enumerate_unpruned(pattern: &AdversarialPattern, checkpoint: TimePoint) -> (u64, u64) {
        struct Search<'a> {
            periods: &'a [Period],
            tasks: &'a [TaskSpec],
            best: (u64, u64),
        }
        impl Search<'_> {
            fn next_period(&mut self, k: usize, done: u32) {
                if k == self.periods.len() {
                    let left = |i: &usize| done & (1 << i) == 0;
                    let cost = (0..self.tasks.len()).filter(left).map(|i| self.tasks[i].cost).sum();
                    let count = (0..self.tasks.len()).filter(left).count() as u64;
                    self.best = (self.best.0.min(cost), self.best.1.min(count));
                } else {
                    self.within(k, self.periods[k].start, done);
                }
            }
            fn within(&mut self, k: usize, now: TimePoint, done: u32) {
                self.next_period(k + 1, done);
                let period = self.periods[k];
                for i in 0..self.tasks.len() {
                    if done & (1 << i) != 0 {
                        continue;
                    }
                    let cost = Rational::from_u64(self.tasks[i].cost);
                    let mut start = now.max(self.tasks[i].arrival);
                    while period.fits(start + cost) {
                        self.within(k, start + cost, done | (1 << i));
                        start = start + Rational::frac(1, 2);
                    }
                }
            }
        }
        let periods = life_periods(pattern, checkpoint, Checkpoint::At);
        let tasks: Vec<TaskSpec> = pattern.tasks().filter(|t| t.arrival <= checkpoint).copied().collect();
        let mut search = Search { periods: &periods, tasks: &tasks, best: (u64::MAX, u64::MAX) };
        search.next_period(0, 0);
        search.best
    }

    #[test]
    fn agrees_with_unpruned_enumeration() {
        let cases: Vec<Vec<AdversaryEvent>> = vec![
            vec![
                AdversaryEvent::inject(Rational::ZERO, 1, 2),
                AdversaryEvent::inject(Rational::ONE, 2, 1),
                AdversaryEvent::inject(Rational::ONE, 3, 3),
                AdversaryEvent::crash(Rational::int(3), 1),
                AdversaryEvent::restart(Rational::int(3), 1),
            ],
            vec![
                AdversaryEvent::inject(Rational::ZERO, 1, 3),
                AdversaryEvent::inject(Rational::frac(1, 2), 2, 1),
                AdversaryEvent::inject(Rational::int(2), 3, 2),
                AdversaryEvent::crash(Rational::frac(5, 2), 1),
                AdversaryEvent::restart(Rational::int(3), 1),
                AdversaryEvent::inject(Rational::int(3), 4, 1),
            ],
            vec![
                AdversaryEvent::inject(Rational::int(1), 1, 1),
                AdversaryEvent::inject(Rational::int(1), 2, 2),
                AdversaryEvent::inject(Rational::int(2), 3, 2),
                AdversaryEvent::crash(Rational::int(4), 1),
            ],
        ];
        for events in cases {
            let pattern = AdversarialPattern::new(params(1, 3), events);
            for checkpoint in [2, 3, 4, 5, 6] {
                let t = Rational::int(checkpoint);
                let r = opt_brute_force(&pattern, t).unwrap();
                assert_eq!((r.min_pending_cost, r.min_pending_tasks), enumerate_unpruned(&pattern, t), "t={t}");
            }
        }
    }
}
