//! The two-cost burst scheduler.
//!
//! Pending tasks are split into an `lmin` list and an `lmax` list, each in
//! arrival order. A counter `c` in `[0, γ]` tracks consecutive `lmin`-tasks:
//!
//! | case | `|Lmin|`  | `|Lmax|`  | choice                                           |
//! |------|-----------|-----------|--------------------------------------------------|
//! | 1    | `< n²`    | `< n²`    | alternate: `Lmax` if the previous task was `lmin` |
//! | 2    | `>= n²`   | `< n²`    | `Lmin`                                           |
//! | 3    | `< n²`    | `>= n²`   | `Lmax`                                           |
//! | 4    | `>= n²`   | `>= n²`   | `Lmax` when `c = γ`, else `Lmin`                 |
//!
//! The position inside the chosen list is `(p · n) mod |L|`. Choosing from
//! `Lmax` resets `c`; choosing from `Lmin` sets `c ← min(c + 1, γ)`.

use std::collections::BTreeSet;

use super::thresholds::{burst_lower_threshold, gamma, in_burst_range};
use super::{spread_index, Scheduler, SchedulerError};
use crate::model::{ProcId, SystemParams, TaskId, TaskSpec};
use crate::time::Rational;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BurstMemory {
    pub c: u64,
    pub prev_was_min: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BurstConfig {
    pub n: u32,
    pub gamma: u64,
    pub lmin: u64,
    pub lmax: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Class {
    Min,
    Max,
}

/// Pure burst decision over pre-split lists.
pub fn burst_select(
    lmin_list: &[TaskSpec],
    lmax_list: &[TaskSpec],
    proc: ProcId,
    config: &BurstConfig,
    memory: BurstMemory,
) -> Result<(TaskSpec, BurstMemory), SchedulerError> {
    if lmin_list.is_empty() && lmax_list.is_empty() {
        return Err(SchedulerError::EmptyPending);
    }
    let n = u64::from(config.n);
    let threshold = (n * n) as usize;
    let many_min = lmin_list.len() >= threshold;
    let many_max = lmax_list.len() >= threshold;
    let wanted = match (many_min, many_max) {
        (false, false) => {
            if memory.prev_was_min {
                Class::Max
            } else {
                Class::Min
            }
        }
        (true, false) => Class::Min,
        (false, true) => Class::Max,
        (true, true) => {
            if memory.c == config.gamma {
                Class::Max
            } else {
                Class::Min
            }
        }
    };
    // An empty designated list can only happen in case 1.
    let class = match wanted {
        Class::Min if lmin_list.is_empty() => Class::Max,
        Class::Max if lmax_list.is_empty() => Class::Min,
        other => other,
    };
    let (list, next) = match class {
        Class::Min => (lmin_list, BurstMemory { c: (memory.c + 1).min(config.gamma), prev_was_min: true }),
        Class::Max => (lmax_list, BurstMemory { c: 0, prev_was_min: false }),
    };
    let task = list[spread_index(proc, n, list.len())];
    Ok((task, next))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Burst {
    pub config: BurstConfig,
    pub speedup: Rational,
}

impl Burst {
    pub fn new(params: &SystemParams) -> Result<Self, SchedulerError> {
        let g = gamma(params.lmin, params.lmax, params.speedup)?;
        Ok(Burst {
            config: BurstConfig { n: params.n, gamma: g, lmin: params.lmin, lmax: params.lmax },
            speedup: params.speedup,
        })
    }

    pub fn gamma(&self) -> u64 {
        self.config.gamma
    }
}

impl Scheduler for Burst {
    type Memory = BurstMemory;

    fn name(&self) -> &'static str {
        "burst"
    }

    fn check(&self, params: &SystemParams, costs: &BTreeSet<u64>) -> Result<(), SchedulerError> {
        let (lmin, lmax, s) = (params.lmin, params.lmax, params.speedup);
        if lmin >= lmax || !in_burst_range(lmin, lmax, s)? {
            return Err(SchedulerError::BurstSpeedupRange {
                low: burst_lower_threshold(lmin, lmax, self.config.gamma),
                high: Rational::from_u64(lmax) / Rational::from_u64(lmin),
                speedup: s,
            });
        }
        if let Some(&cost) = costs.iter().find(|&&c| c != lmin && c != lmax) {
            return Err(SchedulerError::UnsupportedCost { scheduler: "burst", cost, lmin, lmax });
        }
        Ok(())
    }

    fn select(
        &self,
        pending: &[TaskSpec],
        proc: ProcId,
        memory: &mut BurstMemory,
    ) -> Result<TaskId, SchedulerError> {
        let cfg = &self.config;
        let mut short = Vec::new();
        let mut long = Vec::new();
        for task in pending {
            if task.cost == cfg.lmin {
                short.push(*task);
            } else if task.cost == cfg.lmax {
                long.push(*task);
            } else {
                return Err(SchedulerError::NotTwoCost {
                    task: task.id,
                    cost: task.cost,
                    lmin: cfg.lmin,
                    lmax: cfg.lmax,
                });
            }
        }
        let (task, next) = burst_select(&short, &long, proc, cfg, *memory)?;
        *memory = next;
        Ok(task.id)
    }
}
