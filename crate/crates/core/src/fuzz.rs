//! Seeded random instances checked against the exact offline optimum.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`). The 32-byte key holds the
//! seed as little-endian bytes 0..8 followed by zeros, and trial `i` reads
//! from stream `i`. A bounded draw in `0..m` takes the next `u64` and rejects
//! values at or above `m · ⌊2^64 / m⌋`, then reduces modulo `m`. Every draw
//! below is made in the order written, so any implementation with the same
//! generator reproduces the same instances.

use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use thiserror::Error;

use crate::analysis::{
    redundancy_audit, verify_burst_bounds, verify_laf_bound, verify_lis_bounds, AnalysisError, BoundReport,
    BruteForceReference, ClassRule, Incident, Reference,
};
use crate::engine::{simulate, EngineError, DEFAULT_EVENT_BUDGET};
use crate::io::SchedulerSpec;
use crate::model::{AdversarialPattern, AdversaryEvent, SystemParams};
use crate::offline::{OptBudget, OptError};
use crate::schedulers::thresholds::in_burst_range;
use crate::schedulers::{Burst, Laf, Lis, SchedulerError};
use crate::time::{Rational, TimePoint};
use crate::trace::RunTrace;

/// Latest grid point for arrivals and faults.
const GRID_END: u64 = 12;
const MAX_FAULT_PAIRS: u64 = 4;
const MAX_COST: u64 = 5;
const MAX_BURST_DENOM: i128 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FuzzScheduler {
    Lis,
    Burst,
    Laf,
}

impl FuzzScheduler {
    pub fn name(self) -> &'static str {
        match self {
            FuzzScheduler::Lis => "lis",
            FuzzScheduler::Burst => "burst",
            FuzzScheduler::Laf => "laf",
        }
    }

    pub fn spec(self) -> SchedulerSpec {
        match self {
            FuzzScheduler::Lis => SchedulerSpec::Lis { beta: None },
            FuzzScheduler::Burst => SchedulerSpec::Burst,
            FuzzScheduler::Laf => SchedulerSpec::Laf { beta: None },
        }
    }
}

impl fmt::Display for FuzzScheduler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FuzzScheduler {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lis" => Ok(FuzzScheduler::Lis),
            "burst" => Ok(FuzzScheduler::Burst),
            "laf" => Ok(FuzzScheduler::Laf),
            other => Err(format!("unknown scheduler {other:?}, expected lis, burst or laf")),
        }
    }
}

#[derive(Debug, Error)]
pub enum FuzzError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
}

impl FuzzError {
    /// True when the offline search refused the instance for its size.
    pub fn is_budget(&self) -> bool {
        matches!(self, FuzzError::Analysis(AnalysisError::Opt(OptError::Budget { .. })))
            || matches!(self, FuzzError::Engine(EngineError::BudgetExceeded(_)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuzzConfig {
    pub scheduler: FuzzScheduler,
    /// Processor count is drawn from `1..=max_procs`.
    pub max_procs: u32,
    /// Task count is drawn from `1..=max_tasks`.
    pub max_tasks: usize,
    pub trials: u64,
    pub seed: u64,
    pub opt_budget: OptBudget,
}

impl FuzzConfig {
    pub fn new(scheduler: FuzzScheduler, max_procs: u32, max_tasks: usize, trials: u64, seed: u64) -> Self {
        FuzzConfig { scheduler, max_procs, max_tasks, trials, seed, opt_budget: OptBudget::default() }
    }
}

/// A generated pattern with the horizon it is simulated to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub pattern: AdversarialPattern,
    pub horizon: TimePoint,
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub trial: u64,
    pub instance: Instance,
    pub trace: RunTrace,
    pub reports: Vec<BoundReport>,
    pub incidents: Vec<Incident>,
}

impl TrialOutcome {
    pub fn clean(&self) -> bool {
        self.reports.iter().all(|r| r.holds) && self.incidents.is_empty()
    }
}

#[derive(Debug, Clone, Default)]
pub struct FuzzSummary {
    /// Outcomes in trial order, up to and including the first failing trial.
    pub outcomes: Vec<TrialOutcome>,
    pub first_violation: Option<u64>,
}

struct Draw(ChaCha8Rng);

impl Draw {
    fn new(seed: u64, trial: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(trial);
        Draw(rng)
    }

    /// Uniform in `0..m`.
    fn below(&mut self, m: u64) -> u64 {
        assert!(m > 0);
        let zone = m * (u64::MAX / m);
        loop {
            let x = self.0.next_u64();
            if x < zone {
                return x % m;
            }
        }
    }

    /// Uniform in `lo..=hi`.
    fn range(&mut self, lo: u64, hi: u64) -> u64 {
        lo + self.below(hi - lo + 1)
    }

    /// `k` distinct values from `0..m`, by a partial Fisher-Yates shuffle.
    fn distinct(&mut self, k: usize, m: u64) -> Vec<u64> {
        let mut pool: Vec<u64> = (0..m).collect();
        for i in 0..k {
            let j = i + self.below((pool.len() - i) as u64) as usize;
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}

/// Every `(lmin, lmax, s)` with `lmin < lmax <= 5` and `s = a/b`, `b <= 20`,
/// inside the burst range, in increasing `(lmin, lmax, b, a)` order after
/// removing duplicate speedups.
pub fn burst_regimes() -> Vec<(u64, u64, Rational)> {
    let mut out = Vec::new();
    for lmin in 1..MAX_COST {
        for lmax in lmin + 1..=MAX_COST {
            let mut seen = std::collections::BTreeSet::new();
            let rho = Rational::from_u64(lmax) / Rational::from_u64(lmin);
            for b in 1..=MAX_BURST_DENOM {
                for a in b + 1..=(rho * Rational::int(b)).ceil() {
                    let s = Rational::frac(a, b);
                    if seen.contains(&s) {
                        continue;
                    }
                    if in_burst_range(lmin, lmax, s).unwrap_or(false) {
                        seen.insert(s);
                        out.push((lmin, lmax, s));
                    }
                }
            }
        }
    }
    out
}

fn beta_for(lmin: u64, lmax: u64) -> u64 {
    lmax.div_ceil(lmin)
}

/// Draws the instance of trial `trial`.
pub fn generate(config: &FuzzConfig, trial: u64, regimes: &[(u64, u64, Rational)]) -> Instance {
    let mut d = Draw::new(config.seed, trial);
    let n = d.range(1, u64::from(config.max_procs.max(1))) as u32;
    let (costs, lmin, lmax, s) = match config.scheduler {
        FuzzScheduler::Lis => {
            let lmin = d.range(1, MAX_COST);
            let lmax = d.range(lmin, MAX_COST);
            let costs = if lmin == lmax { vec![lmin] } else { vec![lmin, lmax] };
            (costs, lmin, lmax, Rational::from_u64(lmax) / Rational::from_u64(lmin))
        }
        FuzzScheduler::Burst => {
            let (lmin, lmax, s) = regimes[d.below(regimes.len() as u64) as usize];
            (vec![lmin, lmax], lmin, lmax, s)
        }
        FuzzScheduler::Laf => {
            let k = d.range(1, 3) as usize;
            let mut costs: Vec<u64> = d.distinct(k, MAX_COST).into_iter().map(|c| c + 1).collect();
            costs.sort_unstable();
            let (lmin, lmax) = (costs[0], costs[k - 1]);
            (costs, lmin, lmax, Rational::frac(7, 2))
        }
    };
    let params = SystemParams::new(n, s, lmin, lmax, beta_for(lmin, lmax));

    let grid = 2 * GRID_END + 1;
    let half = |g: u64| Rational::frac(i128::from(g), 2);
    let mut events = Vec::new();
    let task_count = d.range(1, config.max_tasks.max(1) as u64);
    let mut total_cost = 0;
    for id in 1..=task_count {
        let arrival = half(d.below(grid));
        let cost = costs[d.below(costs.len() as u64) as usize];
        total_cost += cost;
        events.push(AdversaryEvent::inject(arrival, id, cost));
    }
    let pairs = d.below(MAX_FAULT_PAIRS + 1);
    let mut per_proc = vec![0usize; n as usize];
    for _ in 0..pairs {
        per_proc[d.below(u64::from(n)) as usize] += 1;
    }
    for (i, &count) in per_proc.iter().enumerate() {
        let mut points = d.distinct(2 * count, grid);
        points.sort_unstable();
        for (j, g) in points.into_iter().enumerate() {
            let proc = i as u32 + 1;
            events.push(if j % 2 == 0 { AdversaryEvent::crash(half(g), proc) } else { AdversaryEvent::restart(half(g), proc) });
        }
    }
    let pattern = AdversarialPattern::sorted(params, events);
    let last = pattern.last_event_time().unwrap_or(Rational::ZERO);
    Instance { horizon: last + Rational::from_u64(total_cost) + Rational::ONE, pattern }
}

/// What the audit counts as one class, and how large it must stay.
pub fn audit_rule(scheduler: FuzzScheduler, params: &SystemParams) -> (u64, ClassRule) {
    let n = u64::from(params.n);
    match scheduler {
        FuzzScheduler::Lis => (params.beta * n * n, ClassRule::AllPending),
        FuzzScheduler::Burst => (n * n, ClassRule::SameCost),
        FuzzScheduler::Laf => (params.beta * n * n, ClassRule::SameCost),
    }
}

/// Simulates `scheduler` on `pattern` and runs the matching verifier and the
/// redundancy audit.
pub fn verify_instance(
    scheduler: FuzzScheduler,
    pattern: &AdversarialPattern,
    horizon: TimePoint,
    reference: &mut dyn Reference,
) -> Result<(RunTrace, Vec<BoundReport>, Vec<Incident>), FuzzError> {
    let params = &pattern.params;
    let (trace, reports) = match scheduler {
        FuzzScheduler::Lis => {
            let trace = simulate(pattern, Lis::new(params.n, params.beta), horizon, DEFAULT_EVENT_BUDGET)?;
            let reports = verify_lis_bounds(&trace, reference, params)?.to_vec();
            (trace, reports)
        }
        FuzzScheduler::Burst => {
            let trace = simulate(pattern, Burst::new(params)?, horizon, DEFAULT_EVENT_BUDGET)?;
            let reports = verify_burst_bounds(&trace, reference, params)?.to_vec();
            (trace, reports)
        }
        FuzzScheduler::Laf => {
            let trace = simulate(pattern, Laf::new(params.n, params.beta), horizon, DEFAULT_EVENT_BUDGET)?;
            let k = pattern.cost_alphabet().len().max(1);
            let reports = verify_laf_bound(&trace, reference, params, k)?.to_vec();
            (trace, reports)
        }
    };
    let (threshold, rule) = audit_rule(scheduler, params);
    let incidents = redundancy_audit(&trace, threshold, rule)?;
    Ok((trace, reports, incidents))
}

pub fn run_trial(config: &FuzzConfig, trial: u64, regimes: &[(u64, u64, Rational)]) -> Result<TrialOutcome, FuzzError> {
    let instance = generate(config, trial, regimes);
    let mut reference = BruteForceReference::new(&instance.pattern, config.opt_budget);
    let (trace, reports, incidents) =
        verify_instance(config.scheduler, &instance.pattern, instance.horizon, &mut reference)?;
    Ok(TrialOutcome { trial, instance, trace, reports, incidents })
}

/// Runs trials in order and stops after the first one that fails.
pub fn run_fuzz(config: &FuzzConfig) -> Result<FuzzSummary, FuzzError> {
    let regimes = if config.scheduler == FuzzScheduler::Burst { burst_regimes() } else { Vec::new() };
    let mut summary = FuzzSummary::default();
    for trial in 0..config.trials {
        let outcome = run_trial(config, trial, &regimes)?;
        let clean = outcome.clean();
        summary.outcomes.push(outcome);
        if !clean {
            summary.first_violation = Some(trial);
            break;
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::EventKind;

    #[test]
    fn bounded_draws_stay_in_range_and_repeat() {
        let mut a = Draw::new(7, 3);
        let mut b = Draw::new(7, 3);
        for m in 1..50 {
            let x = a.below(m);
            assert!(x < m);
            assert_eq!(x, b.below(m));
        }
        let picked = a.distinct(5, 25);
        let set: std::collections::BTreeSet<_> = picked.iter().collect();
        assert_eq!(set.len(), 5);
        assert!(picked.iter().all(|&x| x < 25));
    }

    #[test]
    fn streams_differ_per_trial() {
        let mut a = Draw::new(42, 0);
        let mut b = Draw::new(42, 1);
        let xs: Vec<u64> = (0..4).map(|_| a.0.next_u64()).collect();
        let ys: Vec<u64> = (0..4).map(|_| b.0.next_u64()).collect();
        assert_ne!(xs, ys);
    }

    #[test]
    fn generated_instances_are_valid_and_in_regime() {
        let regimes = burst_regimes();
        assert!(!regimes.is_empty());
        for scheduler in [FuzzScheduler::Lis, FuzzScheduler::Burst, FuzzScheduler::Laf] {
            let config = FuzzConfig::new(scheduler, 2, 8, 50, 9);
            for trial in 0..50 {
                let inst = generate(&config, trial, &regimes);
                let p = &inst.pattern;
                assert!(p.validate().is_empty(), "{scheduler} trial {trial}: {:?}", p.validate());
                assert!((1..=2).contains(&p.params.n));
                let tasks = p.tasks().count();
                assert!((1..=8).contains(&tasks));
                let faults = p.events.iter().filter(|e| !matches!(e.kind, EventKind::Inject(_))).count();
                assert!(faults <= 8 && faults % 2 == 0);
                assert!(p.events.iter().all(|e| e.time <= Rational::int(12)));
                assert_eq!(p.params.beta, p.params.min_beta());
                match scheduler {
                    FuzzScheduler::Lis => assert_eq!(p.params.speedup, p.params.rho()),
                    FuzzScheduler::Burst => {
                        assert!(in_burst_range(p.params.lmin, p.params.lmax, p.params.speedup).unwrap())
                    }
                    FuzzScheduler::Laf => {
                        assert_eq!(p.params.speedup, Rational::frac(7, 2));
                        assert!(p.cost_alphabet().len() <= 3);
                    }
                }
            }
        }
    }

    #[test]
    fn same_seed_same_instances() {
        let config = FuzzConfig::new(FuzzScheduler::Laf, 1, 6, 5, 11);
        let a: Vec<Instance> = (0..5).map(|t| generate(&config, t, &[])).collect();
        let b: Vec<Instance> = (0..5).map(|t| generate(&config, t, &[])).collect();
        assert_eq!(a, b);
        let other = FuzzConfig { seed: 12, ..config };
        let c: Vec<Instance> = (0..5).map(|t| generate(&other, t, &[])).collect();
        assert_ne!(a, c);
    }

    #[test]
    fn few_trials_hold() {
        for scheduler in [FuzzScheduler::Lis, FuzzScheduler::Burst] {
            let summary = run_fuzz(&FuzzConfig::new(scheduler, 2, 5, 5, 1)).unwrap();
            assert_eq!(summary.first_violation, None);
            assert_eq!(summary.outcomes.len(), 5);
        }
        let summary = run_fuzz(&FuzzConfig::new(FuzzScheduler::Laf, 1, 5, 5, 1)).unwrap();
        assert_eq!(summary.first_violation, None);
    }

    #[test]
    fn zero_trials_is_empty() {
        let summary = run_fuzz(&FuzzConfig::new(FuzzScheduler::Lis, 2, 8, 0, 42)).unwrap();
        assert!(summary.outcomes.is_empty());
    }

    #[test]
    fn oversized_instance_is_a_budget_error() {
        let mut config = FuzzConfig::new(FuzzScheduler::Lis, 2, 8, 3, 5);
        config.opt_budget.max_tasks = 0;
        assert!(run_fuzz(&config).unwrap_err().is_budget());
    }
}
