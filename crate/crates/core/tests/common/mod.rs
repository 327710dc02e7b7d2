//! Shared strategies and test-side oracles.
#![allow(dead_code)]

use std::collections::BTreeMap;

use crashsched::model::{AdversarialPattern, AdversaryEvent, EventKind, ProcId, SystemParams, TaskSpec};
use crashsched::{Rational, TimePoint};
use proptest::prelude::*;
use proptest::sample::subsequence;

pub fn half(g: u32) -> Rational {
    Rational::frac(i128::from(g), 2)
}

/// Valid patterns on a half-integer grid `[0, grid/2]`.
///
/// Faults of each processor alternate crash, restart on sorted distinct grid
/// points, starting from the alive state.
pub fn pattern_strategy(
    max_n: u32,
    max_tasks: usize,
    max_faults_per_proc: usize,
    grid: u32,
    speedups: Vec<Rational>,
) -> impl Strategy<Value = AdversarialPattern> {
    (1..=max_n, 1u64..=3, 0u64..=2, proptest::sample::select(speedups)).prop_flat_map(
        move |(n, lmin, extra, s)| {
            let lmax = lmin + extra;
            let tasks = proptest::collection::vec((0..=grid, lmin..=lmax), 0..=max_tasks);
            let faults = proptest::collection::vec(
                (0..=max_faults_per_proc).prop_flat_map(move |k| subsequence((0..=grid).collect::<Vec<_>>(), k)),
                n as usize,
            );
            (tasks, faults).prop_map(move |(tasks, faults)| {
                let params = SystemParams::new(n, s, lmin, lmax, lmax.div_ceil(lmin));
                let mut events = Vec::new();
                for (i, (g, cost)) in tasks.into_iter().enumerate() {
                    events.push(AdversaryEvent::inject(half(g), i as u64 + 1, cost));
                }
                for (p, points) in faults.into_iter().enumerate() {
                    for (j, g) in points.into_iter().enumerate() {
                        let proc = p as u32 + 1;
                        events.push(if j % 2 == 0 {
                            AdversaryEvent::crash(half(g), proc)
                        } else {
                            AdversaryEvent::restart(half(g), proc)
                        });
                    }
                }
                AdversarialPattern::sorted(params, events)
            })
        },
    )
}

pub fn default_speedups() -> Vec<Rational> {
    vec![Rational::ONE, Rational::frac(6, 5), Rational::frac(3, 2), Rational::int(2), Rational::int(3)]
}

/// Horizon by which every task is done once all processors are back up.
pub fn full_horizon(pattern: &AdversarialPattern) -> TimePoint {
    let total: u64 = pattern.tasks().map(|t| t.cost).sum();
    pattern.last_event_time().unwrap_or(Rational::ZERO) + Rational::from_u64(total) + Rational::ONE
}

/// Alive intervals of each processor clipped to `[0, t]`.
pub fn alive_periods(pattern: &AdversarialPattern, t: TimePoint) -> Vec<(TimePoint, TimePoint)> {
    let mut out = Vec::new();
    for p in pattern.params.procs() {
        let mut faults: Vec<(TimePoint, bool)> = pattern
            .events
            .iter()
            .filter_map(|e| match e.kind {
                EventKind::Crash(q) if q == p => Some((e.time, false)),
                EventKind::Restart(q) if q == p => Some((e.time, true)),
                _ => None,
            })
            .collect();
        faults.sort();
        let mut up = Some(Rational::ZERO);
        for (time, restart) in faults {
            if time > t {
                break;
            }
            match (restart, up) {
                (false, Some(start)) => {
                    out.push((start, time));
                    up = None;
                }
                (true, None) => up = Some(time),
                _ => panic!("oracle given an invalid pattern"),
            }
        }
        if let Some(start) = up {
            out.push((start, t));
        }
    }
    out
}

fn fits_in_some_order(period: (TimePoint, TimePoint), tasks: &mut Vec<TaskSpec>, k: usize) -> bool {
    if k == tasks.len() {
        let mut now = period.0;
        for task in tasks.iter() {
            now = now.max(task.arrival) + Rational::from_u64(task.cost);
        }
        return now <= period.1;
    }
    for i in k..tasks.len() {
        tasks.swap(k, i);
        if fits_in_some_order(period, tasks, k + 1) {
            tasks.swap(k, i);
            return true;
        }
        tasks.swap(k, i);
    }
    false
}

/// Minimum pending (cost, tasks) at `t` over all speed-1 offline schedules,
/// by assigning every task to one alive period or to none and trying all
/// orders inside each period.
pub fn naive_opt(pattern: &AdversarialPattern, t: TimePoint) -> (u64, u64) {
    let tasks: Vec<TaskSpec> = pattern.tasks().filter(|x| x.arrival <= t).copied().collect();
    let periods = alive_periods(pattern, t);
    let slots = periods.len() + 1;
    let mut best = (u64::MAX, u64::MAX);
    let mut assign = vec![0usize; tasks.len()];
    loop {
        let mut groups: Vec<Vec<TaskSpec>> = vec![Vec::new(); periods.len()];
        let (mut cost, mut count) = (0, 0);
        for (task, &slot) in tasks.iter().zip(&assign) {
            if slot == periods.len() {
                cost += task.cost;
                count += 1;
            } else {
                groups[slot].push(*task);
            }
        }
        if (cost < best.0 || count < best.1)
            && groups.iter_mut().zip(&periods).all(|(g, &p)| fits_in_some_order(p, g, 0))
        {
            best = (best.0.min(cost), best.1.min(count));
        }
        let mut i = 0;
        loop {
            if i == assign.len() {
                return if tasks.is_empty() { (0, 0) } else { best };
            }
            assign[i] += 1;
            if assign[i] < slots {
                break;
            }
            assign[i] = 0;
            i += 1;
        }
    }
}

/// Pending (tasks, cost) at each recorded instant, from the pattern and the
/// set of completion times alone.
pub fn set_difference_levels(
    pattern: &AdversarialPattern,
    completions: &BTreeMap<crashsched::TaskId, TimePoint>,
    t: TimePoint,
) -> (u64, u64) {
    pattern
        .tasks()
        .filter(|x| x.arrival <= t && completions.get(&x.id).is_none_or(|&c| c > t))
        .fold((0, 0), |(n, c), x| (n + 1, c + x.cost))
}

pub fn proc_ids(pattern: &AdversarialPattern) -> Vec<ProcId> {
    pattern.params.procs().collect()
}
