//! Largest amortized fit.
//!
//! Each processor remembers `total`, the cost it has reported since its last
//! restart. It runs a task of the largest cost `c <= total` whose class holds
//! at least `β n²` pending tasks, taken at position `(p · β · n) mod |class|`
//! of that class in arrival order. When no class qualifies it runs the oldest
//! pending task.

use std::collections::{BTreeMap, BTreeSet};

use super::{spread_index, Scheduler, SchedulerError};
use crate::model::{ProcId, SystemParams, TaskId, TaskSpec};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LafMemory {
    pub total: u64,
}

/// `lists` maps each cost to its pending tasks in LIS order.
pub fn laf_select(
    lists: &BTreeMap<u64, Vec<TaskSpec>>,
    proc: ProcId,
    n: u32,
    beta: u64,
    memory: &LafMemory,
) -> Result<TaskSpec, SchedulerError> {
    let n = u64::from(n);
    let threshold = (beta * n * n) as usize;
    let qualified = lists
        .range(..=memory.total)
        .rev()
        .find(|(_, list)| list.len() >= threshold && !list.is_empty());
    if let Some((_, list)) = qualified {
        return Ok(list[spread_index(proc, beta * n, list.len())]);
    }
    lists
        .values()
        .filter_map(|list| list.first())
        .min_by_key(|t| t.lis_key())
        .copied()
        .ok_or(SchedulerError::EmptyPending)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Laf {
    pub n: u32,
    pub beta: u64,
}

impl Laf {
    pub fn new(n: u32, beta: u64) -> Self {
        Laf { n, beta }
    }
}

impl Scheduler for Laf {
    type Memory = LafMemory;

    fn name(&self) -> &'static str {
        "laf"
    }

    fn check(&self, params: &SystemParams, _costs: &BTreeSet<u64>) -> Result<(), SchedulerError> {
        let required = params.min_beta();
        if self.beta < required {
            return Err(SchedulerError::BetaTooSmall { scheduler: "laf", beta: self.beta, required });
        }
        Ok(())
    }

    fn select(&self, pending: &[TaskSpec], proc: ProcId, memory: &mut LafMemory) -> Result<TaskId, SchedulerError> {
        let mut lists: BTreeMap<u64, Vec<TaskSpec>> = BTreeMap::new();
        for task in pending {
            lists.entry(task.cost).or_default().push(*task);
        }
        Ok(laf_select(&lists, proc, self.n, self.beta, memory)?.id)
    }

    fn on_report(&self, memory: &mut LafMemory, task: &TaskSpec) {
        memory.total += task.cost;
    }
}
