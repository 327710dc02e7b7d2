//! Longest-in-system with redundancy avoidance.
//!
//! Processor `p` runs the task at rank `(p · β · n) mod |Pending|` of the
//! pending list sorted by arrival. With at least `β n²` pending tasks the
//! ranks of distinct processors do not collide.

use std::collections::BTreeSet;

use super::{spread_index, Scheduler, SchedulerError};
use crate::model::{ProcId, SystemParams, TaskId, TaskSpec};

/// Index into an LIS-sorted pending list of length `len`.
pub fn lis_select(len: usize, proc: ProcId, n: u32, beta: u64) -> Result<usize, SchedulerError> {
    if len == 0 {
        return Err(SchedulerError::EmptyPending);
    }
    Ok(spread_index(proc, beta * u64::from(n), len))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lis {
    pub n: u32,
    pub beta: u64,
}

impl Lis {
    pub fn new(n: u32, beta: u64) -> Self {
        Lis { n, beta }
    }
}

impl Scheduler for Lis {
    type Memory = ();

    fn name(&self) -> &'static str {
        "lis"
    }

    fn check(&self, params: &SystemParams, _costs: &BTreeSet<u64>) -> Result<(), SchedulerError> {
        let required = params.min_beta();
        if self.beta < required {
            return Err(SchedulerError::BetaTooSmall { scheduler: "lis", beta: self.beta, required });
        }
        Ok(())
    }

    fn select(&self, pending: &[TaskSpec], proc: ProcId, _memory: &mut ()) -> Result<TaskId, SchedulerError> {
        let idx = lis_select(pending.len(), proc, self.n, self.beta)?;
        Ok(pending[idx].id)
    }
}
