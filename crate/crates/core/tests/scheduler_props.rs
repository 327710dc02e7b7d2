use std::collections::{BTreeMap, BTreeSet};

use crashsched::model::{ProcId, TaskSpec};
use crashsched::schedulers::burst::BurstConfig;
use crashsched::schedulers::thresholds::{burst_lower_threshold, satisfies_property1};
use crashsched::schedulers::{
    burst_select, gamma, laf_select, lis_select, non_competitive_check, sufficient_speedup, BurstMemory, LafMemory,
};
use crashsched::Rational;
use proptest::prelude::*;

/// Smallest `k` with `(k·lmin + lmax)/s <= (k+1)·lmin`, by scanning.
fn gamma_scan(lmin: u64, lmax: u64, s: Rational) -> u64 {
    (0..).find(|&k| satisfies_property1(lmin, lmax, s, k)).unwrap()
}

fn speedup() -> impl Strategy<Value = Rational> {
    (1i128..=10).prop_flat_map(|d| (d + 1..=12 * d).prop_map(move |n| Rational::frac(n, d)))
}

fn list(cost: u64, len: usize, first_id: u64) -> Vec<TaskSpec> {
    (0..len as u64).map(|i| TaskSpec::new(first_id + i, Rational::from_u64(i), cost)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn gamma_matches_scan(lmin in 1u64..=12, extra in 0u64..=11, s in speedup()) {
        let lmax = (lmin + extra).min(12);
        let g = gamma(lmin, lmax, s).unwrap();
        prop_assert_eq!(g, gamma_scan(lmin, lmax, s));
        prop_assert!(satisfies_property1(lmin, lmax, s, g));
        for k in 0..g {
            prop_assert!(!satisfies_property1(lmin, lmax, s, k));
        }
    }

    #[test]
    fn thresholds_are_consistent(lmin in 1u64..=6, extra in 1u64..=6, s in speedup()) {
        let lmax = lmin + extra;
        let sufficient = sufficient_speedup(lmin, lmax).unwrap();
        prop_assert!(!non_competitive_check(lmin, lmax, sufficient.rational_upper).unwrap());
        let rho = Rational::from_u64(lmax) / Rational::from_u64(lmin);
        let g = gamma(lmin, lmax, s).unwrap();
        if s < rho && s < burst_lower_threshold(lmin, lmax, g) {
            prop_assert!(non_competitive_check(lmin, lmax, s).unwrap());
        }
    }

    #[test]
    fn lis_index_is_pure_and_spread(len in 1usize..200, n in 1u32..=4, beta in 1u64..=4) {
        let picks: Vec<usize> = (1..=n).map(|p| lis_select(len, ProcId(p), n, beta).unwrap()).collect();
        let again: Vec<usize> = (1..=n).map(|p| lis_select(len, ProcId(p), n, beta).unwrap()).collect();
        prop_assert_eq!(&picks, &again);
        prop_assert!(picks.iter().all(|&i| i < len));
        if len as u64 >= beta * u64::from(n * n) {
            prop_assert_eq!(picks.iter().collect::<BTreeSet<_>>().len(), n as usize);
        }
    }

    #[test]
    fn burst_never_runs_gamma_plus_one_short_tasks_against_a_long_backlog(
        n in 1u32..=3,
        g in 0u64..=5,
        sizes in proptest::collection::vec((0usize..12, 0usize..12), 1..60),
    ) {
        let config = BurstConfig { n, gamma: g, lmin: 1, lmax: 3 };
        let threshold = (n * n) as usize;
        let mut memory = BurstMemory::default();
        let mut streak = 0u64;
        for (a, b) in sizes {
            if a + b == 0 {
                continue;
            }
            let (short, long) = (list(1, a, 1), list(3, b, 100));
            let (task, next) = burst_select(&short, &long, ProcId(1), &config, memory).unwrap();
            memory = next;
            if task.cost == 1 && long.len() >= threshold {
                streak += 1;
                prop_assert!(streak <= g, "{} consecutive short tasks with {} long pending", streak, long.len());
            } else if task.cost == 3 {
                streak = 0;
            }
        }
    }

    #[test]
    fn burst_spreads_processors_over_large_classes(n in 1u32..=4, a in 0usize..40, b in 0usize..40) {
        prop_assume!(a + b > 0);
        let config = BurstConfig { n, gamma: 2, lmin: 1, lmax: 3 };
        let (short, long) = (list(1, a, 1), list(3, b, 100));
        let picks: Vec<TaskSpec> = (1..=n)
            .map(|p| burst_select(&short, &long, ProcId(p), &config, BurstMemory::default()).unwrap().0)
            .collect();
        let chosen = picks[0].cost;
        let class = if chosen == 1 { a } else { b };
        if class >= (n * n) as usize {
            prop_assert_eq!(picks.iter().map(|t| t.id).collect::<BTreeSet<_>>().len(), n as usize);
        }
    }

    #[test]
    fn laf_stays_within_total_except_in_fallback(
        n in 1u32..=3,
        beta in 1u64..=3,
        total in 0u64..=30,
        lens in proptest::collection::vec(0usize..30, 1..=4),
    ) {
        let mut lists: BTreeMap<u64, Vec<TaskSpec>> = BTreeMap::new();
        let mut id = 1;
        for (i, &len) in lens.iter().enumerate() {
            if len > 0 {
                let cost = i as u64 + 1;
                lists.insert(cost, list(cost, len, id));
                id += len as u64;
            }
        }
        prop_assume!(!lists.is_empty());
        let threshold = (beta * u64::from(n * n)) as usize;
        let memory = LafMemory { total };
        let picks: Vec<TaskSpec> =
            (1..=n).map(|p| laf_select(&lists, ProcId(p), n, beta, &memory).unwrap()).collect();
        let qualifying = lists.iter().any(|(&c, l)| c <= total && l.len() >= threshold);
        for task in &picks {
            if task.cost > total {
                prop_assert!(!qualifying);
            }
        }
        if qualifying {
            let class = picks[0].cost;
            prop_assert!(picks.iter().all(|t| t.cost == class));
            prop_assert_eq!(picks.iter().map(|t| t.id).collect::<BTreeSet<_>>().len(), n as usize);
        }
    }
}
