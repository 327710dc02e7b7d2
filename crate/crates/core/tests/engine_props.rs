mod common;

use std::collections::BTreeMap;

use common::{default_speedups, full_horizon, pattern_strategy, set_difference_levels};
use crashsched::engine::{simulate, ProcStatus, Simulation, DEFAULT_EVENT_BUDGET};
use crashsched::model::{AdversarialPattern, EventKind};
use crashsched::repository::RepositoryState;
use crashsched::schedulers::{Laf, Lis, Scheduler};
use crashsched::trace::TraceEvent;
use crashsched::{Rational, TaskId, TimePoint};
use proptest::prelude::*;

fn patterns() -> impl Strategy<Value = AdversarialPattern> {
    pattern_strategy(3, 8, 4, 20, default_speedups())
}

fn lis(pattern: &AdversarialPattern) -> Lis {
    Lis::new(pattern.params.n, pattern.params.beta)
}

fn crash_times(pattern: &AdversarialPattern, proc: crashsched::ProcId) -> Vec<TimePoint> {
    pattern.events.iter().filter(|e| e.kind == EventKind::Crash(proc)).map(|e| e.time).collect()
}

fn check_instant_invariants<S: Scheduler>(sim: &Simulation<S>) -> Result<(), TestCaseError> {
    let pending = sim.repository().pending_count();
    for p in sim.params().procs() {
        match sim.processor(p).status {
            ProcStatus::Idle => return Err(TestCaseError::fail(format!("{p} left idle after an instant"))),
            ProcStatus::BlockedInGet => prop_assert_eq!(pending, 0, "{} blocked with pending work", p),
            _ => {}
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn identical_runs_give_identical_traces(pattern in patterns()) {
        let horizon = full_horizon(&pattern);
        let a = simulate(&pattern, lis(&pattern), horizon, DEFAULT_EVENT_BUDGET).unwrap();
        let b = simulate(&pattern, lis(&pattern), horizon, DEFAULT_EVENT_BUDGET).unwrap();
        prop_assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn alive_processors_never_idle_while_work_is_pending(pattern in patterns()) {
        let mut sim = Simulation::from_pattern(&pattern, Laf::new(pattern.params.n, pattern.params.beta)).unwrap();
        while sim.step().unwrap().is_some() {
            check_instant_invariants(&sim)?;
        }
        let mut sim = Simulation::from_pattern(&pattern, lis(&pattern)).unwrap();
        while sim.step().unwrap().is_some() {
            check_instant_invariants(&sim)?;
        }
        let all_up = sim.params().procs().all(|p| sim.processor(p).status != ProcStatus::Crashed);
        if all_up {
            prop_assert_eq!(sim.repository().pending_count(), 0);
        }
    }

    #[test]
    fn windows_have_length_cost_over_speedup_and_contain_no_crash(pattern in patterns()) {
        let trace = simulate(&pattern, lis(&pattern), full_horizon(&pattern), DEFAULT_EVENT_BUDGET).unwrap();
        for report in &trace.reports {
            let task = trace.tasks[&report.task];
            prop_assert_eq!(report.time - report.start, Rational::from_u64(task.cost) / pattern.params.speedup);
            for c in crash_times(&pattern, report.proc) {
                prop_assert!(!(report.start < c && c < report.time), "{:?} spans crash at {}", report, c);
            }
        }
    }

    #[test]
    fn recorded_pending_matches_set_difference(pattern in patterns()) {
        let trace = simulate(&pattern, lis(&pattern), full_horizon(&pattern), DEFAULT_EVENT_BUDGET).unwrap();
        let mut completions: BTreeMap<TaskId, TimePoint> = BTreeMap::new();
        for r in &trace.reports {
            completions.entry(r.task).or_insert(r.time);
        }
        for (t, tasks, cost) in trace.instants() {
            prop_assert_eq!((tasks, cost), set_difference_levels(&pattern, &completions, t), "at {}", t);
        }
    }

    #[test]
    fn replaying_rows_through_the_repository_reproduces_counts(pattern in patterns()) {
        let trace = simulate(&pattern, lis(&pattern), full_horizon(&pattern), DEFAULT_EVENT_BUDGET).unwrap();
        let mut repo = RepositoryState::new();
        let mut rows = trace.rows.iter().peekable();
        while let Some(first) = rows.peek() {
            let t = first.time;
            let (mut informs, mut injects) = (Vec::new(), Vec::new());
            let mut last = None;
            while let Some(row) = rows.next_if(|r| r.time == t) {
                match row.event {
                    TraceEvent::Inform => informs.push((row.proc.unwrap(), row.task.unwrap())),
                    TraceEvent::Inject => injects.push(trace.tasks[&row.task.unwrap()]),
                    _ => {}
                }
                last = Some((row.pending_tasks, row.pending_cost));
            }
            repo.apply_instant(t, &informs, &injects, &[]).unwrap();
            // monotone completion: nothing informed is offered again
            for &(_, id) in &informs {
                prop_assert!(repo.pending().iter().all(|x| x.id != id));
            }
            prop_assert_eq!(Some((repo.pending_count(), repo.pending_cost())), last, "at {}", t);
        }
    }

    #[test]
    fn started_tasks_have_arrived(pattern in patterns()) {
        let mut sim = Simulation::from_pattern(&pattern, lis(&pattern)).unwrap();
        while let Some(t) = sim.step().unwrap() {
            let starts: Vec<_> = sim.params().procs().filter_map(|p| match sim.processor(p).status {
                ProcStatus::Executing { start, task, .. } if start == t => Some(task.arrival),
                _ => None,
            }).collect();
            prop_assert!(starts.iter().all(|&a| a <= t));
        }
    }
}

#[test]
fn blocked_getters_receive_identical_snapshots() {
    use crashsched::model::{AdversaryEvent, SystemParams};
    let params = SystemParams::new(3, Rational::ONE, 1, 1, 1);
    let mut repo = RepositoryState::new();
    let procs: Vec<_> = params.procs().collect();
    repo.apply_instant(Rational::ZERO, &[], &[], &procs).unwrap();
    let ev = AdversaryEvent::inject(Rational::ONE, 1, 1);
    let EventKind::Inject(task) = ev.kind else { unreachable!() };
    let out = repo.apply_instant(Rational::ONE, &[], &[task], &[]).unwrap();
    assert_eq!(out.released.len(), 3);
    assert!(out.released.windows(2).all(|w| w[0].1 == w[1].1));
}
